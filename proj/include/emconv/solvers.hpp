#pragma once

#include <emconv/core.hpp>
#include <emconv/rng.hpp>

#include <concepts>
#include <string>


namespace emconv {

  //! A latent-variable model: sampler, M-step, and the surrogate Qhat with
  //! its gradient in the first argument.
  template <typename M>
  concept EmModel = requires(const M& model, const typename M::Data& data,
                             const ParamVec& theta, Index n, RngStream& rng) {
    { model.dim() } -> std::convertible_to<Index>;
    { model.sigma() } -> std::convertible_to<double>;
    { model.theta_star() } -> std::convertible_to<const ParamVec&>;
    { model.min_batch() } -> std::convertible_to<Index>;
    { model.sample(n, rng) } -> std::same_as<typename M::Data>;
    { model.m_step(data, theta) } -> std::same_as<ParamVec>;
    { model.q_value(data, theta, theta) } -> std::convertible_to<double>;
    { model.q_grad(data, theta, theta) } -> std::same_as<ParamVec>;
    { model.per_sample_grad(data, theta, theta) } -> std::same_as<MatrixXd>;
    { model.neg_hessian(data, theta) } -> std::same_as<MatrixXd>;
    { M::slice(data, n, n) } -> std::same_as<typename M::Data>;
    { data.size() } -> std::convertible_to<Index>;
  };

  struct RunResult
  {
    Trace trace;
    ParamVec final_theta;
    SolverConfig config;
  };

  namespace detail {

    template <EmModel Model>
    auto start_trace(const Model& model, const ParamVec& theta0) -> Trace
    {
      auto trace = Trace{};
      trace.push(theta0, (theta0 - model.theta_star()).norm());
      return trace;
    }

    inline auto finish(Trace trace, SolverConfig config) -> RunResult
    {
      auto final_theta = trace.back().theta;
      return {std::move(trace), std::move(final_theta), std::move(config)};
    }

    inline auto batch_size(Index n, std::int64_t iters, Index min_batch)
        -> Index
    {
      if (iters <= 0)
        return 0;
      const auto size = n / Index(iters);
      if (size < 1 || size < min_batch)
        throw BatchTooSmall{"batch of " + std::to_string(size) +
                            " samples is below the minimum of " +
                            std::to_string(std::max<Index>(1, min_batch))};
      return size;
    }

  }  // namespace detail

  //! theta^{t+1} = M_n(theta^t) on the full data set.
  template <EmModel Model>
  auto run_em(const Model& model, const typename Model::Data& data,
              const ParamVec& theta0, std::int64_t iters) -> RunResult
  {
    auto config = SolverConfig{Algorithm::em, iters, {}, {}, {}};
    config.validate();
    auto trace = detail::start_trace(model, theta0);
    auto theta = theta0;
    for (std::int64_t t = 0; t < iters; ++t)
    {
      theta = model.m_step(data, theta);
      trace.push(theta, (theta - model.theta_star()).norm());
    }
    return detail::finish(std::move(trace), std::move(config));
  }

  //! Iteration t uses only the t-th of T disjoint contiguous batches of
  //! floor(n / T) samples; the remainder is discarded.
  template <EmModel Model>
  auto run_em_split(const Model& model, const typename Model::Data& data,
                    const ParamVec& theta0, std::int64_t iters) -> RunResult
  {
    auto config = SolverConfig{Algorithm::em_split, iters, {}, {}, iters};
    config.validate();
    const auto size = detail::batch_size(data.size(), iters, model.min_batch());
    auto trace = detail::start_trace(model, theta0);
    auto theta = theta0;
    for (std::int64_t t = 0; t < iters; ++t)
    {
      const auto batch = Model::slice(data, Index(t) * size, size);
      theta = model.m_step(batch, theta);
      trace.push(theta, (theta - model.theta_star()).norm());
    }
    return detail::finish(std::move(trace), std::move(config));
  }

  //! theta^{t+1} = theta^t + alpha grad Qhat_n(theta^t | theta^t).
  template <EmModel Model>
  auto run_grad_em(const Model& model, const typename Model::Data& data,
                   const ParamVec& theta0, const StepSchedule& schedule,
                   std::int64_t iters) -> RunResult
  {
    auto config = SolverConfig{Algorithm::grad, iters, schedule, {}, {}};
    config.validate();
    auto trace = detail::start_trace(model, theta0);
    auto theta = theta0;
    for (std::int64_t t = 0; t < iters; ++t)
    {
      theta += schedule.at(t) * model.q_grad(data, theta, theta);
      trace.push(theta, (theta - model.theta_star()).norm());
    }
    return detail::finish(std::move(trace), std::move(config));
  }

  template <EmModel Model>
  auto run_grad_em_split(const Model& model, const typename Model::Data& data,
                         const ParamVec& theta0, const StepSchedule& schedule,
                         std::int64_t iters) -> RunResult
  {
    auto config =
        SolverConfig{Algorithm::grad_split, iters, schedule, {}, iters};
    config.validate();
    // A gradient step needs no linear solve, so one sample per batch is
    // enough.
    const auto size = detail::batch_size(data.size(), iters, 1);
    auto trace = detail::start_trace(model, theta0);
    auto theta = theta0;
    for (std::int64_t t = 0; t < iters; ++t)
    {
      const auto batch = Model::slice(data, Index(t) * size, size);
      theta += schedule.at(t) * model.q_grad(batch, theta, theta);
      trace.push(theta, (theta - model.theta_star()).norm());
    }
    return detail::finish(std::move(trace), std::move(config));
  }

  //! Projected stochastic gradient EM: one fresh sample per iteration,
  //!   theta^{t+1} = Proj_{B(r/2; theta^0)}(theta^t + alpha_t grad Qhat_1),
  //! with alpha_t = a / (xi (t + 2)).
  template <EmModel Model>
  auto run_sgd_em(const Model& model, const ParamVec& theta0, double radius,
                  const StepSchedule& schedule, std::int64_t iters,
                  RngStream rng) -> RunResult
  {
    if (!(radius > 0))
      throw InvalidConfig{"sgd projection radius must be positive"};
    const auto ball = BallSpec{theta0, radius / 2};
    auto config = SolverConfig{Algorithm::sgd, iters, schedule, ball, {}};
    config.validate();
    auto trace = detail::start_trace(model, theta0);
    auto theta = theta0;
    for (std::int64_t t = 0; t < iters; ++t)
    {
      const auto one = model.sample(1, rng);
      const ParamVec moved =
          theta + schedule.at(t) * model.q_grad(one, theta, theta);
      theta = project_ball(moved, ball);
      trace.push(theta, (theta - model.theta_star()).norm());
    }
    return detail::finish(std::move(trace), std::move(config));
  }

  //! Dispatches on config.algo. For sgd, config.projection is the
  //! projection ball itself (radius r/2; its centre is taken to be theta0),
  //! fresh samples come from rng and data is unused.
  template <EmModel Model>
  auto run_solver(const Model& model, const typename Model::Data& data,
                  const ParamVec& theta0, const SolverConfig& config,
                  const RngStream& rng) -> RunResult
  {
    config.validate();
    switch (config.algo)
    {
    case Algorithm::em:
      return run_em(model, data, theta0, config.iters);
    case Algorithm::em_split:
      return run_em_split(model, data, theta0, config.iters);
    case Algorithm::grad:
      return run_grad_em(model, data, theta0, *config.step, config.iters);
    case Algorithm::grad_split:
      return run_grad_em_split(model, data, theta0, *config.step,
                               config.iters);
    case Algorithm::sgd:
      return run_sgd_em(model, theta0, 2 * config.projection->radius,
                        *config.step, config.iters, rng);
    }
    throw InvalidConfig{"unknown algorithm"};
  }

}  // namespace emconv
