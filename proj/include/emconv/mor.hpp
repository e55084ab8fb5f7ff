#pragma once

#include <emconv/gmm.hpp>


//! Symmetric mixture of two linear regressions
//!   y = s <x, theta*> + sigma v,  x ~ N(0, I),  s a fair sign,  v ~ N(0, 1).
namespace emconv {

  template <typename Scalar = double>
  struct MorOracle
  {
    Vector<Scalar> theta_star;
    Scalar sigma = 1;

    auto dim() const -> Index { return theta_star.size(); }
    auto snr() const -> Scalar { return theta_star.norm() / sigma; }
  };

  //! Covariates one per row of x; responses in y.
  template <typename Scalar = double>
  struct MorData
  {
    Matrix<Scalar> x;
    Vector<Scalar> y;

    auto size() const -> Index { return x.rows(); }
    auto dim() const -> Index { return x.cols(); }
  };

  template <typename Scalar>
  auto mor_sample(const MorOracle<Scalar>& oracle, Index n, RngStream& rng)
      -> MorData<Scalar>
  {
    const auto d = oracle.dim();
    auto data = MorData<Scalar>{Matrix<Scalar>(n, d), Vector<Scalar>(n)};
    for (Index i = 0; i < n; ++i)
    {
      for (Index j = 0; j < d; ++j)
        data.x(i, j) = rng.normal();
      const auto s = Scalar(rng.sign());
      data.y(i) = s * data.x.row(i).dot(oracle.theta_star) +
                  oracle.sigma * rng.normal();
    }
    return data;
  }

  //! logistic(2 y <x, theta> / sigma^2).
  template <typename DerivedT, typename DerivedX>
  auto mor_weight(const Eigen::MatrixBase<DerivedT>& theta,
                  const Eigen::MatrixBase<DerivedX>& x,
                  typename DerivedT::Scalar y,
                  typename DerivedT::Scalar sigma) -> typename DerivedT::Scalar
  {
    return detail::logistic(2 * y * x.dot(theta) / (sigma * sigma));
  }

  namespace detail {

    template <typename Scalar>
    auto check_nonempty(const MorData<Scalar>& data, Index d) -> void
    {
      if (data.size() == 0)
        throw EmptyData{};
      if (data.dim() != d)
        throw Error{"mor: dimension mismatch"};
    }

    //! (2 w_i - 1) y_i for every sample.
    template <typename Scalar>
    auto mor_weighted_response(const MorData<Scalar>& data,
                               const Vector<Scalar>& theta, Scalar sigma)
        -> Vector<Scalar>
    {
      const Vector<Scalar> s = (data.x * theta).cwiseProduct(data.y) /
                               (sigma * sigma);
      return s.array().tanh().matrix().cwiseProduct(data.y);
    }

  }  // namespace detail

  //! Qhat(theta' | theta) = -1/(2n) sum_i [w_i (y_i - <x_i, theta'>)^2
  //!                                      + (1 - w_i)(y_i + <x_i, theta'>)^2].
  template <typename Scalar>
  auto mor_q_value(const MorData<Scalar>& data,
                   const Vector<Scalar>& theta_prime,
                   const Vector<Scalar>& theta, Scalar sigma) -> Scalar
  {
    detail::check_nonempty(data, theta.size());
    const auto n = Scalar(data.size());
    const auto ty = detail::mor_weighted_response(data, theta, sigma);
    const Vector<Scalar> fit = data.x * theta_prime;
    return -(data.y.squaredNorm() + fit.squaredNorm() - 2 * ty.dot(fit)) /
           (2 * n);
  }

  template <typename Scalar>
  auto mor_per_sample_grad(const MorData<Scalar>& data,
                           const Vector<Scalar>& theta_prime,
                           const Vector<Scalar>& theta, Scalar sigma)
      -> Matrix<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const Vector<Scalar> r =
        detail::mor_weighted_response(data, theta, sigma) - data.x * theta_prime;
    return data.x.array().colwise() * r.array();
  }

  //! grad Qhat(theta' | theta) = 1/n sum_i [(2 w_i - 1) y_i x_i - x_i x_i^T theta'].
  template <typename Scalar>
  auto mor_q_grad(const MorData<Scalar>& data,
                  const Vector<Scalar>& theta_prime,
                  const Vector<Scalar>& theta, Scalar sigma) -> Vector<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const Vector<Scalar> r =
        detail::mor_weighted_response(data, theta, sigma) - data.x * theta_prime;
    return data.x.transpose() * r / Scalar(data.size());
  }

  //! M_n(theta) = (sum_i x_i x_i^T)^{-1} sum_i (2 w_i - 1) y_i x_i.
  template <typename Scalar>
  auto mor_m_step(const MorData<Scalar>& data, const Vector<Scalar>& theta,
                  Scalar sigma) -> Vector<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const Vector<Scalar> rhs =
        data.x.transpose() * detail::mor_weighted_response(data, theta, sigma);
    const Matrix<Scalar> gram = data.x.transpose() * data.x;
    return solve_spd(gram, rhs);
  }


  struct MorModel
  {
    using Oracle = MorOracle<double>;
    using Data = MorData<double>;

    static constexpr const char* name = "mor";

    Oracle oracle;

    auto dim() const -> Index { return oracle.dim(); }
    auto sigma() const -> double { return oracle.sigma; }
    auto theta_star() const -> const ParamVec& { return oracle.theta_star; }

    //! The normal system is singular below d samples.
    auto min_batch() const -> Index { return oracle.dim(); }

    auto sample(Index n, RngStream& rng) const -> Data
    {
      return mor_sample(oracle, n, rng);
    }

    auto m_step(const Data& data, const ParamVec& theta) const -> ParamVec
    {
      return mor_m_step(data, theta, oracle.sigma);
    }

    auto q_value(const Data& data, const ParamVec& theta_prime,
                 const ParamVec& theta) const -> double
    {
      return mor_q_value(data, theta_prime, theta, oracle.sigma);
    }

    auto q_grad(const Data& data, const ParamVec& theta_prime,
                const ParamVec& theta) const -> ParamVec
    {
      return mor_q_grad(data, theta_prime, theta, oracle.sigma);
    }

    auto per_sample_grad(const Data& data, const ParamVec& theta_prime,
                         const ParamVec& theta) const -> MatrixXd
    {
      return mor_per_sample_grad(data, theta_prime, theta, oracle.sigma);
    }

    //! 1/n sum_i x_i x_i^T.
    auto neg_hessian(const Data& data, const ParamVec&) const -> MatrixXd
    {
      return data.x.transpose() * data.x / double(data.size());
    }

    static auto slice(const Data& data, Index begin, Index count) -> Data
    {
      return {data.x.middleRows(begin, count), data.y.segment(begin, count)};
    }
  };

}  // namespace emconv
