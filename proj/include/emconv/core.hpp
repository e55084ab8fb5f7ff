#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>


namespace emconv {

  template <typename Scalar>
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  template <typename Scalar>
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  //! Parameter vectors: theta, theta*, iterates, errors.
  using ParamVec = Vector<double>;
  using MatrixXd = Matrix<double>;

  using Eigen::Index;

  //! @{
  //! @brief Error types.
  struct Error : std::runtime_error
  {
    using std::runtime_error::runtime_error;
  };

  //! A factorization pivot fell below the degeneracy tolerance.
  struct NotPositiveDefinite : Error
  {
    using Error::Error;
  };

  struct EmptyData : Error
  {
    EmptyData()
      : Error{"empty data"}
    {
    }
  };

  struct BatchTooSmall : Error
  {
    using Error::Error;
  };

  struct TooFewPoints : Error
  {
    using Error::Error;
  };

  struct InvalidConfig : Error
  {
    using Error::Error;
  };
  //! @}


  //! Closed Euclidean ball.
  struct BallSpec
  {
    ParamVec center;
    double radius = 0;
  };

  //! Euclidean projection onto a closed ball.
  template <typename Derived>
  auto project_ball(const Eigen::MatrixBase<Derived>& theta,
                    const BallSpec& ball) -> ParamVec
  {
    if (theta.size() != ball.center.size())
      throw Error{"project_ball: dimension mismatch"};
    const ParamVec offset = theta - ball.center;
    const auto dist = offset.norm();
    if (dist <= ball.radius)
      return theta;
    if (ball.radius <= 0)
      return ball.center;
    auto scale = ball.radius / dist;
    ParamVec out = ball.center + scale * offset;
    // Rounding can leave the rescaled point a few ulps outside.
    while ((out - ball.center).norm() > ball.radius)
    {
      scale = std::nextafter(scale, 0.0);
      out = ball.center + scale * offset;
    }
    return out;
  }

  //! Solves A x = b for symmetric positive definite A with an LDL^T
  //! factorization. Throws NotPositiveDefinite when any pivot is at most
  //! 1e-12 * trace(A) / d.
  template <typename Scalar, typename DerivedB>
  auto solve_spd(const Matrix<Scalar>& A, const Eigen::MatrixBase<DerivedB>& b)
      -> Vector<Scalar>
  {
    const auto d = A.rows();
    if (A.cols() != d || b.size() != d)
      throw Error{"solve_spd: dimension mismatch"};
    if (!A.allFinite() || !b.allFinite())
      throw NotPositiveDefinite{"solve_spd: non-finite entries"};
    const Scalar tol = Scalar(1e-12) * A.trace() / Scalar(d);
    const auto ldlt = Eigen::LDLT<Matrix<Scalar>>{A};
    if (ldlt.info() != Eigen::Success || !(tol > 0) ||
        (ldlt.vectorD().array() <= tol).any())
      throw NotPositiveDefinite{"solve_spd: matrix is not positive definite"};
    return ldlt.solve(b);
  }


  //! Step sizes: constant alpha, or alpha_t = a / (xi * (t + 2)).
  struct StepSchedule
  {
    enum class Kind
    {
      constant,
      decaying
    };

    Kind kind = Kind::constant;
    double alpha = 1;
    double a = 1.5;
    double xi = 1;

    static auto constant(double alpha) -> StepSchedule
    {
      if (!(alpha > 0) || !std::isfinite(alpha))
        throw InvalidConfig{"step size must be positive and finite"};
      return {Kind::constant, alpha, 0, 0};
    }

    static auto decaying(double a, double xi) -> StepSchedule
    {
      if (!(a > 0) || !(xi > 0) || !std::isfinite(a) || !std::isfinite(xi))
        throw InvalidConfig{"decaying schedule needs a > 0 and xi > 0"};
      return {Kind::decaying, 0, a, xi};
    }

    auto at(std::int64_t t) const -> double
    {
      return kind == Kind::constant
                 ? alpha
                 : a / (xi * static_cast<double>(t + 2));
    }
  };


  enum class Algorithm
  {
    em,
    em_split,
    grad,
    grad_split,
    sgd
  };

  auto to_string(Algorithm) -> std::string;
  auto parse_algorithm(const std::string&) -> Algorithm;

  struct SolverConfig
  {
    Algorithm algo = Algorithm::em;
    std::int64_t iters = 1;
    std::optional<StepSchedule> step;
    std::optional<BallSpec> projection;
    std::optional<std::int64_t> split_batches;

    //! Throws InvalidConfig when the field combination is inconsistent.
    auto validate() const -> void;
  };


  struct TraceRecord
  {
    std::int64_t t = 0;
    ParamVec theta;
    std::optional<double> opt_error;
    double stat_error = 0;
  };

  //! Iterates theta^0..theta^T; record 0 is the initialization.
  struct Trace
  {
    std::vector<TraceRecord> records;

    auto size() const -> std::size_t { return records.size(); }
    auto back() const -> const TraceRecord& { return records.back(); }

    auto push(ParamVec theta, double stat_error) -> void
    {
      const auto t = static_cast<std::int64_t>(records.size());
      records.push_back({t, std::move(theta), std::nullopt, stat_error});
    }

    //! Fills opt_error = |theta^t - reference| for every record.
    auto set_reference(const ParamVec& reference) -> void
    {
      for (auto& r : records)
        r.opt_error = (r.theta - reference).norm();
    }

    auto stat_errors() const -> std::vector<double>;
    auto opt_errors() const -> std::vector<double>;
  };

}  // namespace emconv
