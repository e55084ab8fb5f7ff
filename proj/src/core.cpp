#include <emconv/core.hpp>

namespace emconv {

  auto to_string(Algorithm a) -> std::string
  {
    switch (a)
    {
    case Algorithm::em:
      return "em";
    case Algorithm::em_split:
      return "em-split";
    case Algorithm::grad:
      return "grad";
    case Algorithm::grad_split:
      return "grad-split";
    case Algorithm::sgd:
      return "sgd";
    }
    return "?";
  }

  auto parse_algorithm(const std::string& s) -> Algorithm
  {
    for (auto a : {Algorithm::em, Algorithm::em_split, Algorithm::grad,
                   Algorithm::grad_split, Algorithm::sgd})
      if (to_string(a) == s)
        return a;
    throw InvalidConfig{"unknown algorithm: " + s};
  }

  auto SolverConfig::validate() const -> void
  {
    if (iters < 0)
      throw InvalidConfig{"iteration count must be nonnegative"};
    const bool needs_step = algo == Algorithm::grad ||
                            algo == Algorithm::grad_split ||
                            algo == Algorithm::sgd;
    if (needs_step && !step)
      throw InvalidConfig{to_string(algo) + " requires a step schedule"};
    if (algo == Algorithm::sgd)
    {
      if (!projection)
        throw InvalidConfig{"sgd requires a projection ball"};
      if (step->kind != StepSchedule::Kind::decaying)
        throw InvalidConfig{"sgd requires a decaying step schedule"};
    }
    if ((algo == Algorithm::grad || algo == Algorithm::grad_split) &&
        step->kind != StepSchedule::Kind::constant)
      throw InvalidConfig{to_string(algo) + " requires a constant step"};
    if (algo == Algorithm::em_split || algo == Algorithm::grad_split)
    {
      if (!split_batches || *split_batches != iters)
        throw InvalidConfig{"sample splitting requires split_batches == iters"};
    }
    if (projection && projection->radius < 0)
      throw InvalidConfig{"projection radius must be nonnegative"};
  }

  auto Trace::stat_errors() const -> std::vector<double>
  {
    auto out = std::vector<double>{};
    out.reserve(records.size());
    for (const auto& r : records)
      out.push_back(r.stat_error);
    return out;
  }

  auto Trace::opt_errors() const -> std::vector<double>
  {
    auto out = std::vector<double>{};
    out.reserve(records.size());
    for (const auto& r : records)
      if (r.opt_error)
        out.push_back(*r.opt_error);
    return out;
  }

}  // namespace emconv
