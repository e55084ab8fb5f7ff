#pragma once

#include <emconv/solvers.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>


//! Monte-Carlo stand-ins for the population operators M, G and the
//! gradient-ascent oracle, and estimators of the regularity constants
//! (strong concavity, smoothness, FOS/GS stability, contraction, uniform
//! deviation, stochastic-gradient variance) over a ball around theta*.
//!
//! Population expectations are replaced by averages over mc_n fresh draws.
//! Compared quantities share one draw (common random numbers). Standard
//! errors come from splitting that draw into 10 equal batches.
//!
//! Every estimator reports a maximum over finitely many probe points, so
//! it is a lower bound on the corresponding supremum over the ball.
namespace emconv {

  inline constexpr int mc_batches = 10;
  inline constexpr Index min_mc_n = 1000;

  struct OperatorSpec
  {
    enum class Kind
    {
      //! M(theta) = argmax Q(. | theta).
      em,
      //! G(theta) = theta + alpha grad Q(theta | theta).
      grad_em,
      //! theta + alpha grad Q(theta | theta*), plain gradient ascent on
      //! q = Q(. | theta*).
      oracle_gradient
    };

    Kind kind = Kind::em;
    double alpha = 1;

    static auto em() -> OperatorSpec { return {Kind::em, 1}; }
    static auto grad_em(double alpha) -> OperatorSpec
    {
      return {Kind::grad_em, alpha};
    }
    static auto oracle_gradient(double alpha) -> OperatorSpec
    {
      return {Kind::oracle_gradient, alpha};
    }
  };

  //! The sample version of the requested operator on the given data.
  template <EmModel Model>
  auto apply_operator(const Model& model, const typename Model::Data& data,
                      const ParamVec& theta, const OperatorSpec& op)
      -> ParamVec
  {
    switch (op.kind)
    {
    case OperatorSpec::Kind::em:
      return model.m_step(data, theta);
    case OperatorSpec::Kind::grad_em:
      return theta + op.alpha * model.q_grad(data, theta, theta);
    case OperatorSpec::Kind::oracle_gradient:
      return theta + op.alpha * model.q_grad(data, theta, model.theta_star());
    }
    throw InvalidConfig{"unknown operator"};
  }

  //! Splits data into mc_batches equal contiguous batches.
  template <EmModel Model>
  auto split_batches(const typename Model::Data& data)
      -> std::vector<typename Model::Data>
  {
    const auto size = data.size() / mc_batches;
    if (size < 1)
      throw BatchTooSmall{"too few Monte-Carlo samples to batch"};
    auto out = std::vector<typename Model::Data>{};
    out.reserve(mc_batches);
    for (int b = 0; b < mc_batches; ++b)
      out.push_back(Model::slice(data, Index(b) * size, size));
    return out;
  }

  //! Standard error of the mean of per-batch estimates, per coordinate,
  //! combined in Euclidean norm.
  inline auto batch_stderr(const std::vector<ParamVec>& estimates) -> double
  {
    const auto k = double(estimates.size());
    ParamVec mean = ParamVec::Zero(estimates.front().size());
    for (const auto& e : estimates)
      mean += e;
    mean /= k;
    double ss = 0;
    for (const auto& e : estimates)
      ss += (e - mean).squaredNorm();
    return std::sqrt(ss / (k - 1) / k);
  }

  struct PopEstimate
  {
    ParamVec estimate;
    double stderr = 0;
  };

  template <EmModel Model>
  auto pop_operator_on(const Model& model, const typename Model::Data& data,
                       const ParamVec& theta, const OperatorSpec& op)
      -> PopEstimate
  {
    auto out = PopEstimate{apply_operator(model, data, theta, op), 0};
    auto per_batch = std::vector<ParamVec>{};
    for (const auto& batch : split_batches<Model>(data))
      per_batch.push_back(apply_operator(model, batch, theta, op));
    out.stderr = batch_stderr(per_batch);
    return out;
  }

  //! Population operator at theta from mc_n fresh draws of rng.
  template <EmModel Model>
  auto pop_operator(const Model& model, const ParamVec& theta,
                    const OperatorSpec& op, Index mc_n, RngStream rng)
      -> PopEstimate
  {
    if (mc_n < min_mc_n)
      throw InvalidConfig{"mc_n must be at least 1000"};
    const auto data = model.sample(mc_n, rng);
    return pop_operator_on(model, data, theta, op);
  }


  enum class ProbeStyle
  {
    fixed_radius_sphere,
    uniform_in_ball
  };

  //! Probe points around theta* and the Monte-Carlo budget per evaluation.
  struct ProbeSpec
  {
    double radius = 1;
    int num_probes = 100;
    Index mc_n = 100000;
    RngStream rng;
    ProbeStyle probe_style = ProbeStyle::fixed_radius_sphere;
  };

  inline auto random_unit_vector(Index d, RngStream& rng) -> ParamVec
  {
    auto u = ParamVec(d);
    do
    {
      for (Index j = 0; j < d; ++j)
        u(j) = rng.normal();
    } while (u.norm() == 0);
    return u.normalized();
  }

  //! Deterministic in (theta*, spec); drawn from spec.rng.child("probes").
  inline auto draw_probes(const ParamVec& theta_star, const ProbeSpec& spec)
      -> std::vector<ParamVec>
  {
    if (!(spec.radius > 0))
      throw InvalidConfig{"probe radius must be positive"};
    if (spec.num_probes < 1)
      throw InvalidConfig{"need at least one probe"};
    auto rng = spec.rng.child("probes");
    const auto d = theta_star.size();
    auto out = std::vector<ParamVec>{};
    for (int k = 0; k < spec.num_probes; ++k)
    {
      auto r = spec.radius;
      const auto u = random_unit_vector(d, rng);
      if (spec.probe_style == ProbeStyle::uniform_in_ball)
        r *= std::pow(rng.uniform(), 1.0 / double(d));
      out.push_back(theta_star + r * u);
    }
    return out;
  }

  //! The Monte-Carlo draw shared by every estimator given the same spec.
  template <EmModel Model>
  auto probe_data(const Model& model, const ProbeSpec& spec) ->
      typename Model::Data
  {
    if (spec.mc_n < min_mc_n)
      throw InvalidConfig{"mc_n must be at least 1000"};
    auto rng = spec.rng.child("mc");
    return model.sample(spec.mc_n, rng);
  }


  struct ProbeValue
  {
    ParamVec theta;
    double value = 0;
    double stderr = 0;
  };

  //! Maximum over probes of a per-probe ratio; stderr belongs to the
  //! maximizing probe.
  struct ProbeMax
  {
    double value = 0;
    double stderr = 0;
    std::vector<ProbeValue> per_probe;
  };

  namespace detail {

    //! value = |f(data, theta)| / |theta - theta*|, with stderr from the
    //! batch estimates of f; 0 at theta = theta*.
    template <EmModel Model, typename F>
    auto ratio_at(const Model& model, const typename Model::Data& data,
                  const std::vector<typename Model::Data>& batches,
                  const ParamVec& theta, F&& f) -> ProbeValue
    {
      const auto dist = (theta - model.theta_star()).norm();
      if (dist == 0)
        return {theta, 0, 0};
      auto per_batch = std::vector<ParamVec>{};
      for (Index b = 0; b < Index(batches.size()); ++b)
        per_batch.push_back(f(batches[b], theta, b));
      const ParamVec full = f(data, theta, -1);
      return {theta, full.norm() / dist, batch_stderr(per_batch) / dist};
    }

    inline auto reduce_max(std::vector<ProbeValue> values) -> ProbeMax
    {
      auto out = ProbeMax{};
      for (const auto& v : values)
        if (v.value >= out.value)
        {
          out.value = v.value;
          out.stderr = v.stderr;
        }
      out.per_probe = std::move(values);
      return out;
    }

  }  // namespace detail


  //! Contraction ratio |M(theta) - theta*| / |theta - theta*| at a single
  //! point. The numerator is estimated as M_n(theta) - M_n(theta*) on the
  //! same draw, using self-consistency M(theta*) = theta*, which removes
  //! most of the Monte-Carlo noise from the ratio.
  namespace detail {

    //! f(data, theta, b) = op(theta) - op(theta*) on the full draw (b < 0)
    //! or on batch b.
    template <EmModel Model>
    auto anchored_operator(const Model& model,
                           const typename Model::Data& data,
                           const std::vector<typename Model::Data>& batches,
                           const OperatorSpec& op)
    {
      auto anchors = std::vector<ParamVec>{};
      for (const auto& b : batches)
        anchors.push_back(apply_operator(model, b, model.theta_star(), op));
      anchors.push_back(apply_operator(model, data, model.theta_star(), op));
      return [&model, op, anchors = std::move(anchors)](
                 const typename Model::Data& d, const ParamVec& theta,
                 Index b) -> ParamVec {
        return apply_operator(model, d, theta, op) -
               (b < 0 ? anchors.back() : anchors[b]);
      };
    }

  }  // namespace detail

  template <EmModel Model>
  auto contraction_ratio_at(const Model& model,
                            const typename Model::Data& data,
                            const ParamVec& theta, const OperatorSpec& op)
      -> ProbeValue
  {
    const auto batches = split_batches<Model>(data);
    return detail::ratio_at(
        model, data, batches, theta,
        detail::anchored_operator(model, data, batches, op));
  }

  template <EmModel Model>
  auto estimate_contraction(const Model& model, const ProbeSpec& probe,
                            const OperatorSpec& op = OperatorSpec::em())
      -> ProbeMax
  {
    const auto data = probe_data(model, probe);
    const auto batches = split_batches<Model>(data);
    const auto f = detail::anchored_operator(model, data, batches, op);
    auto values = std::vector<ProbeValue>{};
    for (const auto& theta : draw_probes(model.theta_star(), probe))
      values.push_back(detail::ratio_at(model, data, batches, theta, f));
    return detail::reduce_max(std::move(values));
  }

  //! First-order stability ratio
  //!   |grad Q(M(theta) | theta*) - grad Q(M(theta) | theta)| / |theta - theta*|.
  template <EmModel Model>
  auto fos_ratio_at(const Model& model, const typename Model::Data& data,
                    const ParamVec& theta) -> ProbeValue
  {
    return detail::ratio_at(
        model, data, split_batches<Model>(data), theta,
        [&](const auto& d, const ParamVec& th, Index) -> ParamVec {
          const auto m = model.m_step(d, th);
          return model.q_grad(d, m, model.theta_star()) -
                 model.q_grad(d, m, th);
        });
  }

  //! Gradient stability ratio
  //!   |grad Q(theta | theta*) - grad Q(theta | theta)| / |theta - theta*|.
  template <EmModel Model>
  auto gs_ratio_at(const Model& model, const typename Model::Data& data,
                   const ParamVec& theta) -> ProbeValue
  {
    return detail::ratio_at(
        model, data, split_batches<Model>(data), theta,
        [&](const auto& d, const ParamVec& th, Index) -> ParamVec {
          return model.q_grad(d, th, model.theta_star()) -
                 model.q_grad(d, th, th);
        });
  }

  template <EmModel Model>
  auto estimate_fos_gamma(const Model& model, const ProbeSpec& probe)
      -> ProbeMax
  {
    const auto data = probe_data(model, probe);
    auto values = std::vector<ProbeValue>{};
    for (const auto& theta : draw_probes(model.theta_star(), probe))
      values.push_back(fos_ratio_at(model, data, theta));
    return detail::reduce_max(std::move(values));
  }

  template <EmModel Model>
  auto estimate_gs_gamma(const Model& model, const ProbeSpec& probe)
      -> ProbeMax
  {
    const auto data = probe_data(model, probe);
    auto values = std::vector<ProbeValue>{};
    for (const auto& theta : draw_probes(model.theta_star(), probe))
      values.push_back(gs_ratio_at(model, data, theta));
    return detail::reduce_max(std::move(values));
  }


  struct ConcavityEstimate
  {
    double lambda = 0;
    double mu = 0;
    //! Frobenius norm of the entrywise standard errors of the Hessian
    //! estimate; by Weyl's inequality it bounds the eigenvalue error scale.
    double stderr = 0;
    MatrixXd neg_hessian;
  };

  //! Extreme eigenvalues of the Monte-Carlo negative Hessian of
  //! q(.) = Q(. | theta*). Q is quadratic in its first argument for every
  //! model here, so the Hessian does not depend on where it is evaluated.
  template <EmModel Model>
  auto estimate_concavity(const Model& model, const ProbeSpec& probe)
      -> ConcavityEstimate
  {
    const auto data = probe_data(model, probe);
    auto out = ConcavityEstimate{};
    out.neg_hessian = model.neg_hessian(data, model.theta_star());
    const auto eig =
        Eigen::SelfAdjointEigenSolver<MatrixXd>{out.neg_hessian,
                                                Eigen::EigenvaluesOnly};
    out.lambda = eig.eigenvalues().minCoeff();
    out.mu = eig.eigenvalues().maxCoeff();

    auto per_batch = std::vector<ParamVec>{};
    for (const auto& b : split_batches<Model>(data))
    {
      const MatrixXd h = model.neg_hessian(b, model.theta_star());
      per_batch.push_back(h.reshaped());
    }
    out.stderr = batch_stderr(per_batch);
    return out;
  }


  struct DeviationEstimate
  {
    Index n = 0;
    double max_dev = 0;
    double quantile95 = 0;
    int num_probes = 0;
    int reps = 0;
  };

  //! Linear-interpolation quantile of a nonempty sample.
  inline auto quantile(std::vector<double> values, double q) -> double
  {
    std::sort(values.begin(), values.end());
    const auto pos = q * double(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
  }

  //! Empirical proxy for the uniform deviation sup |M_n(theta) - M(theta)|
  //! over the probe ball: reps fresh data sets of size n, each compared
  //! with the probe.mc_n reference draw at every probe point. With
  //! reuse_reference_stream, every rep draws from the reference stream.
  template <EmModel Model>
  auto estimate_deviation(const Model& model, Index n, const ProbeSpec& probe,
                          int reps, bool reuse_reference_stream = false,
                          const OperatorSpec& op = OperatorSpec::em())
      -> DeviationEstimate
  {
    if (n < 1 || reps < 1)
      throw InvalidConfig{"estimate_deviation needs n >= 1 and reps >= 1"};
    const auto reference_data = probe_data(model, probe);
    const auto probes = draw_probes(model.theta_star(), probe);
    auto reference = std::vector<ParamVec>{};
    for (const auto& theta : probes)
      reference.push_back(apply_operator(model, reference_data, theta, op));

    auto devs = std::vector<double>{};
    for (int r = 0; r < reps; ++r)
    {
      auto rng = reuse_reference_stream ? probe.rng.child("mc")
                                        : probe.rng.child("deviation", r);
      const auto data = model.sample(n, rng);
      for (std::size_t k = 0; k < probes.size(); ++k)
        devs.push_back(
            (apply_operator(model, data, probes[k], op) - reference[k])
                .norm());
    }
    auto out = DeviationEstimate{};
    out.n = n;
    out.max_dev = *std::max_element(devs.begin(), devs.end());
    out.quantile95 = quantile(devs, 0.95);
    out.num_probes = int(probes.size());
    out.reps = reps;
    return out;
  }


  //! E |grad Qhat_1(theta | theta)|^2 at one point, from the rows of the
  //! per-sample gradient matrix.
  template <EmModel Model>
  auto sgd_second_moment_at(const Model& model,
                            const typename Model::Data& data,
                            const ParamVec& theta) -> ProbeValue
  {
    const auto g = model.per_sample_grad(data, theta, theta);
    const auto sq = g.rowwise().squaredNorm().eval();
    const auto size = sq.size() / mc_batches;
    auto per_batch = std::vector<ParamVec>{};
    for (int b = 0; b < mc_batches; ++b)
      per_batch.push_back(
          ParamVec::Constant(1, sq.segment(Index(b) * size, size).mean()));
    return {theta, sq.mean(), batch_stderr(per_batch)};
  }

  //! Uniform variance sigma_G^2 = sup over the ball of
  //! E |grad Qhat_1(theta | theta)|^2.
  template <EmModel Model>
  auto estimate_sgd_variance(const Model& model, const ProbeSpec& probe)
      -> ProbeMax
  {
    const auto data = probe_data(model, probe);
    auto values = std::vector<ProbeValue>{};
    for (const auto& theta : draw_probes(model.theta_star(), probe))
      values.push_back(sgd_second_moment_at(model, data, theta));
    return detail::reduce_max(std::move(values));
  }


  struct ConditionEstimate
  {
    double lambda = 0;
    double mu = 0;
    double gamma_fos = 0;
    double gamma_gs = 0;
    double kappa = 0;
    //! 2 lambda mu / (lambda + mu) - gamma_gs.
    double xi = 0;
    double sigma_g_sq = 0;

    double lambda_stderr = 0;
    double gamma_fos_stderr = 0;
    double gamma_gs_stderr = 0;
    double kappa_stderr = 0;
    double sigma_g_sq_stderr = 0;
  };

  //! All estimators on the same probes and Monte-Carlo draw.
  template <EmModel Model>
  auto estimate_conditions(const Model& model, const ProbeSpec& probe,
                           const OperatorSpec& op = OperatorSpec::em())
      -> ConditionEstimate
  {
    const auto concavity = estimate_concavity(model, probe);
    const auto fos = estimate_fos_gamma(model, probe);
    const auto gs = estimate_gs_gamma(model, probe);
    const auto kappa = estimate_contraction(model, probe, op);
    const auto sgd = estimate_sgd_variance(model, probe);

    auto out = ConditionEstimate{};
    out.lambda = concavity.lambda;
    out.mu = concavity.mu;
    out.gamma_fos = fos.value;
    out.gamma_gs = gs.value;
    out.kappa = kappa.value;
    out.xi = 2 * out.lambda * out.mu / (out.lambda + out.mu) - out.gamma_gs;
    out.sigma_g_sq = sgd.value;
    out.lambda_stderr = concavity.stderr;
    out.gamma_fos_stderr = fos.stderr;
    out.gamma_gs_stderr = gs.stderr;
    out.kappa_stderr = kappa.stderr;
    out.sigma_g_sq_stderr = sgd.stderr;
    return out;
  }

}  // namespace emconv
