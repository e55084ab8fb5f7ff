#pragma once

#include <emconv/core.hpp>
#include <emconv/rng.hpp>


//! Symmetric two-component isotropic Gaussian mixture
//!   y ~ 1/2 N(theta*, sigma^2 I) + 1/2 N(-theta*, sigma^2 I)
//! with sigma known.
namespace emconv {

  namespace detail {

    //! Overflow-safe 1 / (1 + exp(-x)).
    template <typename Scalar>
    inline auto logistic(Scalar x) -> Scalar
    {
      using std::exp;
      if (x >= 0)
        return Scalar(1) / (Scalar(1) + exp(-x));
      const auto e = exp(x);
      return e / (Scalar(1) + e);
    }

  }  // namespace detail


  template <typename Scalar = double>
  struct GmmOracle
  {
    Vector<Scalar> theta_star;
    Scalar sigma = 1;

    auto dim() const -> Index { return theta_star.size(); }
    auto snr() const -> Scalar { return theta_star.norm() / sigma; }
  };

  //! One observation per row.
  template <typename Scalar = double>
  struct GmmData
  {
    Matrix<Scalar> y;

    auto size() const -> Index { return y.rows(); }
    auto dim() const -> Index { return y.cols(); }
  };

  //! y = s theta* + sigma w, s a fair sign, w ~ N(0, I).
  template <typename Scalar>
  auto gmm_sample(const GmmOracle<Scalar>& oracle, Index n, RngStream& rng)
      -> GmmData<Scalar>
  {
    const auto d = oracle.dim();
    auto data = GmmData<Scalar>{Matrix<Scalar>(n, d)};
    for (Index i = 0; i < n; ++i)
    {
      const auto s = Scalar(rng.sign());
      for (Index j = 0; j < d; ++j)
        data.y(i, j) = s * oracle.theta_star(j) + oracle.sigma * rng.normal();
    }
    return data;
  }

  //! Posterior probability that y came from the +theta component,
  //! evaluated as logistic(2 <theta, y> / sigma^2).
  template <typename DerivedT, typename DerivedY>
  auto gmm_weight(const Eigen::MatrixBase<DerivedT>& theta,
                  const Eigen::MatrixBase<DerivedY>& y,
                  typename DerivedT::Scalar sigma) -> typename DerivedT::Scalar
  {
    return detail::logistic(2 * theta.dot(y) / (sigma * sigma));
  }

  namespace detail {

    //! 2 w_theta(y_i) - 1 = tanh(<theta, y_i> / sigma^2) for every row.
    //! tanh is odd, so negating theta negates these exactly.
    template <typename Scalar>
    auto gmm_signed_weights(const GmmData<Scalar>& data,
                            const Vector<Scalar>& theta, Scalar sigma)
        -> Vector<Scalar>
    {
      const Vector<Scalar> s = (data.y * theta) / (sigma * sigma);
      return s.array().tanh().matrix();
    }

    template <typename Scalar>
    auto check_nonempty(const GmmData<Scalar>& data, Index d) -> void
    {
      if (data.size() == 0)
        throw EmptyData{};
      if (data.dim() != d)
        throw Error{"gmm: dimension mismatch"};
    }

  }  // namespace detail

  //! Qhat(theta' | theta)
  //!   = -1/(2n) sum_i [w_i |y_i - theta'|^2 + (1 - w_i) |y_i + theta'|^2].
  template <typename Scalar>
  auto gmm_q_value(const GmmData<Scalar>& data,
                   const Vector<Scalar>& theta_prime,
                   const Vector<Scalar>& theta, Scalar sigma) -> Scalar
  {
    detail::check_nonempty(data, theta.size());
    const auto n = Scalar(data.size());
    const auto t = detail::gmm_signed_weights(data, theta, sigma);
    const Vector<Scalar> proj = data.y * theta_prime;
    return -(data.y.squaredNorm() + n * theta_prime.squaredNorm() -
             2 * t.dot(proj)) /
           (2 * n);
  }

  //! Per-sample gradients of Qhat in theta', one per row:
  //!   (2 w_i - 1) y_i - theta'.
  template <typename Scalar>
  auto gmm_per_sample_grad(const GmmData<Scalar>& data,
                           const Vector<Scalar>& theta_prime,
                           const Vector<Scalar>& theta, Scalar sigma)
      -> Matrix<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const auto t = detail::gmm_signed_weights(data, theta, sigma);
    Matrix<Scalar> g = data.y.array().colwise() * t.array();
    g.rowwise() -= theta_prime.transpose();
    return g;
  }

  //! grad Qhat(theta' | theta) = 1/n sum_i (2 w_i - 1) y_i - theta'.
  template <typename Scalar>
  auto gmm_q_grad(const GmmData<Scalar>& data,
                  const Vector<Scalar>& theta_prime,
                  const Vector<Scalar>& theta, Scalar sigma) -> Vector<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const auto t = detail::gmm_signed_weights(data, theta, sigma);
    return (data.y.transpose() * t) / Scalar(data.size()) - theta_prime;
  }

  //! M_n(theta) = 2/n sum_i w_i y_i - 1/n sum_i y_i.
  template <typename Scalar>
  auto gmm_m_step(const GmmData<Scalar>& data, const Vector<Scalar>& theta,
                  Scalar sigma) -> Vector<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const auto t = detail::gmm_signed_weights(data, theta, sigma);
    return (data.y.transpose() * t) / Scalar(data.size());
  }


  //! Model bundle consumed by the solvers and population estimators.
  struct GmmModel
  {
    using Oracle = GmmOracle<double>;
    using Data = GmmData<double>;

    static constexpr const char* name = "gmm";

    Oracle oracle;

    auto dim() const -> Index { return oracle.dim(); }
    auto sigma() const -> double { return oracle.sigma; }
    auto theta_star() const -> const ParamVec& { return oracle.theta_star; }

    //! The M-step never factorizes a matrix.
    auto min_batch() const -> Index { return 1; }

    auto sample(Index n, RngStream& rng) const -> Data
    {
      return gmm_sample(oracle, n, rng);
    }

    auto m_step(const Data& data, const ParamVec& theta) const -> ParamVec
    {
      return gmm_m_step(data, theta, oracle.sigma);
    }

    auto q_value(const Data& data, const ParamVec& theta_prime,
                 const ParamVec& theta) const -> double
    {
      return gmm_q_value(data, theta_prime, theta, oracle.sigma);
    }

    auto q_grad(const Data& data, const ParamVec& theta_prime,
                const ParamVec& theta) const -> ParamVec
    {
      return gmm_q_grad(data, theta_prime, theta, oracle.sigma);
    }

    auto per_sample_grad(const Data& data, const ParamVec& theta_prime,
                         const ParamVec& theta) const -> MatrixXd
    {
      return gmm_per_sample_grad(data, theta_prime, theta, oracle.sigma);
    }

    //! -Hessian of Qhat(. | theta): the identity, independent of the data.
    auto neg_hessian(const Data& data, const ParamVec&) const -> MatrixXd
    {
      return MatrixXd::Identity(data.dim(), data.dim());
    }

    static auto slice(const Data& data, Index begin, Index count) -> Data
    {
      return {data.y.middleRows(begin, count)};
    }
  };

}  // namespace emconv
