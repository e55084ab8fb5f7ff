#pragma once

#include <emconv/gmm.hpp>


//! Linear regression y = <x, theta*> + sigma v with each covariate
//! coordinate independently missing with probability omega (MCAR).
//!
//! Missing entries are stored as explicit zeros next to a 0/1 mask
//! (1 = observed), so the conditional moments take the mask form
//!
//!   m     = (1 - z) . theta
//!   mu    = z . x + (y - <z . theta, z . x>) / (sigma^2 + |m|^2) m
//!   Sigma = I_mis + mu mu^T - ((1 - z) . mu)((1 - z) . mu)^T
//!
//! which is the block form with missing coordinates permuted first.
namespace emconv {

  template <typename Scalar = double>
  struct MissingOracle
  {
    Vector<Scalar> theta_star;
    Scalar sigma = 1;
    Scalar omega = 0;

    auto dim() const -> Index { return theta_star.size(); }
  };

  template <typename Scalar = double>
  struct MissingSample
  {
    //! Unobserved entries are 0.
    Vector<Scalar> x_observed;
    //! true = observed.
    Eigen::Array<bool, Eigen::Dynamic, 1> mask;
    Scalar y = 0;
  };

  //! Conditional second-moment model for the missing block.
  enum class SecondMoment
  {
    //! Identity on the missing-missing block.
    identity_block,
    //! E[x_mis x_mis^T | x_obs, y]: I - m m^T / (sigma^2 + |m|^2)
    //! + mu_mis mu_mis^T on the missing-missing block.
    exact
  };

  template <typename Scalar = double>
  struct ImputedMoments
  {
    Vector<Scalar> mu;
    Matrix<Scalar> sigma_mat;
  };

  //! Row i holds sample i; unobserved entries of x are 0 and mask(i, j) is
  //! 1 when x(i, j) is observed, 0 otherwise.
  template <typename Scalar = double>
  struct MissingData
  {
    Matrix<Scalar> x;
    Matrix<Scalar> mask;
    Vector<Scalar> y;

    auto size() const -> Index { return x.rows(); }
    auto dim() const -> Index { return x.cols(); }

    auto sample(Index i) const -> MissingSample<Scalar>
    {
      return {x.row(i).transpose(), mask.row(i).transpose().array() != 0,
              y(i)};
    }

    auto push_back(const MissingSample<Scalar>& s) -> void
    {
      const auto n = size();
      const auto d = s.x_observed.size();
      if (n == 0)
      {
        x.resize(0, d);
        mask.resize(0, d);
        y.resize(0);
      }
      x.conservativeResize(n + 1, d);
      mask.conservativeResize(n + 1, d);
      y.conservativeResize(n + 1);
      x.row(n) = s.x_observed.transpose();
      mask.row(n) = s.mask.template cast<Scalar>().matrix().transpose();
      y(n) = s.y;
    }
  };

  //! Draws (x, y) first, then masks every coordinate with probability omega.
  template <typename Scalar>
  auto missing_sample(const MissingOracle<Scalar>& oracle, Index n,
                      RngStream& rng) -> MissingData<Scalar>
  {
    const auto d = oracle.dim();
    auto data = MissingData<Scalar>{Matrix<Scalar>(n, d), Matrix<Scalar>(n, d),
                                    Vector<Scalar>(n)};
    for (Index i = 0; i < n; ++i)
    {
      for (Index j = 0; j < d; ++j)
        data.x(i, j) = rng.normal();
      data.y(i) = data.x.row(i).dot(oracle.theta_star) +
                  oracle.sigma * rng.normal();
      for (Index j = 0; j < d; ++j)
      {
        const bool missing = rng.bernoulli(double(oracle.omega));
        data.mask(i, j) = missing ? Scalar(0) : Scalar(1);
        if (missing)
          data.x(i, j) = 0;
      }
    }
    return data;
  }

  template <typename Scalar>
  auto impute_moments(const Vector<Scalar>& theta,
                      const MissingSample<Scalar>& sample, Scalar sigma,
                      SecondMoment variant = SecondMoment::identity_block)
      -> ImputedMoments<Scalar>
  {
    const auto d = theta.size();
    if (sample.x_observed.size() != d || sample.mask.size() != d)
      throw Error{"impute_moments: dimension mismatch"};

    const Vector<Scalar> z = sample.mask.template cast<Scalar>().matrix();
    const Vector<Scalar> miss = Vector<Scalar>::Ones(d) - z;
    const Vector<Scalar> m = miss.cwiseProduct(theta);
    const Vector<Scalar> x_obs = z.cwiseProduct(sample.x_observed);
    const auto denom = sigma * sigma + m.squaredNorm();
    const auto residual = sample.y - z.cwiseProduct(theta).dot(x_obs);

    auto out = ImputedMoments<Scalar>{};
    out.mu = x_obs + (residual / denom) * m;
    const Vector<Scalar> mu_mis = miss.cwiseProduct(out.mu);
    out.sigma_mat = out.mu * out.mu.transpose() - mu_mis * mu_mis.transpose();
    out.sigma_mat.diagonal() += miss;
    if (variant == SecondMoment::exact)
    {
      out.sigma_mat += mu_mis * mu_mis.transpose();
      out.sigma_mat -= m * m.transpose() / denom;
    }
    return out;
  }


  namespace detail {

    template <typename Scalar>
    auto check_nonempty(const MissingData<Scalar>& data, Index d) -> void
    {
      if (data.size() == 0)
        throw EmptyData{};
      if (data.dim() != d)
        throw Error{"missing: dimension mismatch"};
    }

    //! Row-wise conditional means together with the pieces needed to
    //! assemble the second moments without forming n d x d matrices.
    template <typename Scalar>
    struct BatchMoments
    {
      //! mu_i per row.
      Matrix<Scalar> mu;
      //! (1 - z_i) . mu_i per row.
      Matrix<Scalar> mu_mis;
      //! (1 - z_i) per row.
      Matrix<Scalar> miss;
      //! m_i / sqrt(sigma^2 + |m_i|^2) per row (exact variant only).
      Matrix<Scalar> m_scaled;
    };

    template <typename Scalar>
    auto batch_moments(const MissingData<Scalar>& data,
                       const Vector<Scalar>& theta, Scalar sigma,
                       SecondMoment variant) -> BatchMoments<Scalar>
    {
      auto b = BatchMoments<Scalar>{};
      b.miss = Matrix<Scalar>::Ones(data.size(), data.dim()) - data.mask;
      // m_i = (1 - z_i) . theta
      const Matrix<Scalar> m =
          b.miss.array().rowwise() * theta.transpose().array();
      const Vector<Scalar> denom =
          (m.rowwise().squaredNorm().array() + sigma * sigma).matrix();
      const Vector<Scalar> x_obs_theta =
          data.mask.cwiseProduct(data.x) * theta;
      const Vector<Scalar> coeff =
          (data.y - x_obs_theta).cwiseQuotient(denom);
      b.mu = data.mask.cwiseProduct(data.x) +
             Matrix<Scalar>(m.array().colwise() * coeff.array());
      b.mu_mis = b.miss.cwiseProduct(b.mu);
      if (variant == SecondMoment::exact)
        b.m_scaled = m.array().colwise() / denom.array().sqrt();
      return b;
    }

    //! sum_i Sigma_theta(x_obs_i, y_i).
    template <typename Scalar>
    auto summed_second_moment(const BatchMoments<Scalar>& b,
                              SecondMoment variant) -> Matrix<Scalar>
    {
      Matrix<Scalar> s = b.mu.transpose() * b.mu;
      if (variant == SecondMoment::identity_block)
        s -= b.mu_mis.transpose() * b.mu_mis;
      else
        s -= b.m_scaled.transpose() * b.m_scaled;
      s.diagonal() += b.miss.colwise().sum().transpose();
      return s;
    }

    //! Sigma_i theta' for every row i.
    template <typename Scalar>
    auto rowwise_second_moment_times(const BatchMoments<Scalar>& b,
                                     const Vector<Scalar>& v,
                                     SecondMoment variant) -> Matrix<Scalar>
    {
      Matrix<Scalar> out = b.miss.array().rowwise() * v.transpose().array();
      const Vector<Scalar> mu_v = b.mu * v;
      out += Matrix<Scalar>(b.mu.array().colwise() * mu_v.array());
      if (variant == SecondMoment::identity_block)
      {
        const Vector<Scalar> mis_v = b.mu_mis * v;
        out -= Matrix<Scalar>(b.mu_mis.array().colwise() * mis_v.array());
      }
      else
      {
        const Vector<Scalar> ms_v = b.m_scaled * v;
        out -= Matrix<Scalar>(b.m_scaled.array().colwise() * ms_v.array());
      }
      return out;
    }

  }  // namespace detail

  //! Qhat(theta' | theta) = -1/(2n) sum_i <theta', Sigma_i theta'>
  //!                        + 1/n sum_i y_i <mu_i, theta'>.
  template <typename Scalar>
  auto missing_q_value(const MissingData<Scalar>& data,
                       const Vector<Scalar>& theta_prime,
                       const Vector<Scalar>& theta, Scalar sigma,
                       SecondMoment variant = SecondMoment::identity_block)
      -> Scalar
  {
    detail::check_nonempty(data, theta.size());
    const auto b = detail::batch_moments(data, theta, sigma, variant);
    const auto s = detail::summed_second_moment(b, variant);
    const Vector<Scalar> ymu = b.mu.transpose() * data.y;
    const auto n = Scalar(data.size());
    return -theta_prime.dot(s * theta_prime) / (2 * n) +
           ymu.dot(theta_prime) / n;
  }

  //! Rows y_i mu_i - Sigma_i theta'.
  template <typename Scalar>
  auto missing_per_sample_grad(const MissingData<Scalar>& data,
                               const Vector<Scalar>& theta_prime,
                               const Vector<Scalar>& theta, Scalar sigma,
                               SecondMoment variant =
                                   SecondMoment::identity_block)
      -> Matrix<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const auto b = detail::batch_moments(data, theta, sigma, variant);
    Matrix<Scalar> g = b.mu.array().colwise() * data.y.array();
    g -= detail::rowwise_second_moment_times(b, theta_prime, variant);
    return g;
  }

  //! grad Qhat(theta' | theta) = 1/n sum_i [y_i mu_i - Sigma_i theta'].
  template <typename Scalar>
  auto missing_q_grad(const MissingData<Scalar>& data,
                      const Vector<Scalar>& theta_prime,
                      const Vector<Scalar>& theta, Scalar sigma,
                      SecondMoment variant = SecondMoment::identity_block)
      -> Vector<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const auto b = detail::batch_moments(data, theta, sigma, variant);
    const auto s = detail::summed_second_moment(b, variant);
    const Vector<Scalar> ymu = b.mu.transpose() * data.y;
    return (ymu - s * theta_prime) / Scalar(data.size());
  }

  //! M_n(theta) = [sum_i Sigma_i]^{-1} sum_i y_i mu_i.
  template <typename Scalar>
  auto missing_m_step(const MissingData<Scalar>& data,
                      const Vector<Scalar>& theta, Scalar sigma,
                      SecondMoment variant = SecondMoment::identity_block)
      -> Vector<Scalar>
  {
    detail::check_nonempty(data, theta.size());
    const auto b = detail::batch_moments(data, theta, sigma, variant);
    const auto s = detail::summed_second_moment(b, variant);
    const Vector<Scalar> ymu = b.mu.transpose() * data.y;
    return solve_spd(s, ymu);
  }


  //! Admissible missing probability for |theta*| / sigma <= zeta1 and
  //! radius zeta2 sigma, with b = (zeta1 + zeta2)^2.
  struct MissingProbBound
  {
    double omega_max = 0;
    double kappa = 0;
  };

  inline auto missing_prob_bound(double zeta1, double zeta2, double omega)
      -> MissingProbBound
  {
    if (!(zeta1 > 0) || !(zeta2 > 0))
      throw Error{"missing_prob_bound: zeta1 and zeta2 must be positive"};
    const auto b = (zeta1 + zeta2) * (zeta1 + zeta2);
    const auto c = 1 + 2 * b * (1 + b);
    return {1 / c, (b + omega * c) / (1 + b)};
  }


  struct MissingModel
  {
    using Oracle = MissingOracle<double>;
    using Data = MissingData<double>;

    static constexpr const char* name = "missing";

    Oracle oracle;
    SecondMoment variant = SecondMoment::identity_block;

    auto dim() const -> Index { return oracle.dim(); }
    auto sigma() const -> double { return oracle.sigma; }
    auto theta_star() const -> const ParamVec& { return oracle.theta_star; }

    auto min_batch() const -> Index { return oracle.dim(); }

    auto sample(Index n, RngStream& rng) const -> Data
    {
      return missing_sample(oracle, n, rng);
    }

    auto m_step(const Data& data, const ParamVec& theta) const -> ParamVec
    {
      return missing_m_step(data, theta, oracle.sigma, variant);
    }

    auto q_value(const Data& data, const ParamVec& theta_prime,
                 const ParamVec& theta) const -> double
    {
      return missing_q_value(data, theta_prime, theta, oracle.sigma, variant);
    }

    auto q_grad(const Data& data, const ParamVec& theta_prime,
                const ParamVec& theta) const -> ParamVec
    {
      return missing_q_grad(data, theta_prime, theta, oracle.sigma, variant);
    }

    auto per_sample_grad(const Data& data, const ParamVec& theta_prime,
                         const ParamVec& theta) const -> MatrixXd
    {
      return missing_per_sample_grad(data, theta_prime, theta, oracle.sigma,
                                     variant);
    }

    //! 1/n sum_i Sigma_theta(x_obs_i, y_i).
    auto neg_hessian(const Data& data, const ParamVec& theta) const
        -> MatrixXd
    {
      detail::check_nonempty(data, theta.size());
      const auto b = detail::batch_moments(data, theta, oracle.sigma, variant);
      return detail::summed_second_moment(b, variant) / double(data.size());
    }

    static auto slice(const Data& data, Index begin, Index count) -> Data
    {
      return {data.x.middleRows(begin, count),
              data.mask.middleRows(begin, count),
              data.y.segment(begin, count)};
    }
  };

}  // namespace emconv
