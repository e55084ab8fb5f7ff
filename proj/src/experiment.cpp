#include <emconv/csv.hpp>
#include <emconv/experiment.hpp>
#include <emconv/fit.hpp>
#include <emconv/gmm.hpp>
#include <emconv/missing.hpp>
#include <emconv/mor.hpp>
#include <emconv/population.hpp>
#include <emconv/solvers.hpp>
#include <emconv/svg.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>


namespace emconv {

  auto to_string(ModelKind m) -> std::string
  {
    switch (m)
    {
    case ModelKind::gmm:
      return "gmm";
    case ModelKind::mor:
      return "mor";
    case ModelKind::missing:
      return "missing";
    }
    return "?";
  }

  auto parse_model(const std::string& s) -> ModelKind
  {
    for (auto m : {ModelKind::gmm, ModelKind::mor, ModelKind::missing})
      if (to_string(m) == s)
        return m;
    throw InvalidConfig{"unknown model: " + s};
  }

  auto to_string(InitStyle s) -> std::string
  {
    return s == InitStyle::toward_theta_star ? "toward-theta-star"
                                             : "random-direction";
  }

  auto parse_init_style(const std::string& s) -> InitStyle
  {
    if (s == "toward-theta-star")
      return InitStyle::toward_theta_star;
    if (s == "random-direction")
      return InitStyle::random_direction;
    throw InvalidConfig{"unknown init style: " + s};
  }


  auto ExperimentSpec::validate() const -> void
  {
    if (d < 1)
      throw InvalidConfig{"d must be positive"};
    if (n < 1)
      throw InvalidConfig{"n must be positive"};
    if (trials < 1)
      throw InvalidConfig{"trials must be at least 1"};
    if (iters < 0)
      throw InvalidConfig{"iters must be nonnegative"};
    if (!(sigma > 0) || !std::isfinite(sigma))
      throw InvalidConfig{"sigma must be positive"};
    if (!(snr >= 0) || !std::isfinite(snr))
      throw InvalidConfig{"snr must be nonnegative"};
    if (theta_norm && !(*theta_norm >= 0))
      throw InvalidConfig{"theta norm must be nonnegative"};
    if (!(omega >= 0 && omega < 1))
      throw InvalidConfig{"omega must lie in [0, 1)"};
    if (!(init_radius_frac > 0 && init_radius_frac <= 1))
      throw InvalidConfig{"init radius fraction must lie in (0, 1]"};
    if (init_distance && !(*init_distance >= 0))
      throw InvalidConfig{"init distance must be nonnegative"};
    if (step && !(*step > 0))
      throw InvalidConfig{"step must be positive"};
    if (xi && !(*xi > 0))
      throw InvalidConfig{"xi must be positive"};
    if (proj_radius && !(*proj_radius > 0))
      throw InvalidConfig{"projection radius must be positive"};
    if (!(mor_radius_frac > 0) || !(zeta2 > 0))
      throw InvalidConfig{"radius constants must be positive"};
    if (num_probes < 1 || mc_n < min_mc_n)
      throw InvalidConfig{"conditions need probes >= 1 and mc_n >= 1000"};
    if (inits_per_radius < 1)
      throw InvalidConfig{"inits per radius must be positive"};
    solver_config().validate();
  }

  auto ExperimentSpec::theta_star_norm() const -> double
  {
    return theta_norm ? *theta_norm : snr * sigma;
  }

  auto ExperimentSpec::theta_star() const -> ParamVec
  {
    return ParamVec::Constant(d, theta_star_norm() / std::sqrt(double(d)));
  }

  auto ExperimentSpec::default_radius() const -> double
  {
    switch (model)
    {
    case ModelKind::gmm:
      return theta_star_norm() / 4;
    case ModelKind::mor:
      return theta_star_norm() * mor_radius_frac;
    case ModelKind::missing:
      return zeta2 * sigma;
    }
    return 0;
  }

  auto ExperimentSpec::initial_distance() const -> double
  {
    return init_distance ? *init_distance : init_radius_frac * default_radius();
  }

  auto ExperimentSpec::effective_init_style() const -> InitStyle
  {
    if (init_style)
      return *init_style;
    return model == ModelKind::missing ? InitStyle::random_direction
                                       : InitStyle::toward_theta_star;
  }

  auto ExperimentSpec::default_xi() const -> double
  {
    if (xi)
      return *xi;
    if (model != ModelKind::missing)
      return 1;
    const auto zeta1 = std::max(theta_star_norm() / sigma, 1e-12);
    const auto bound = missing_prob_bound(zeta1, zeta2, omega);
    return bound.kappa < 1 ? 1 - bound.kappa : 1.0;
  }

  auto ExperimentSpec::solver_config() const -> SolverConfig
  {
    auto c = SolverConfig{};
    c.algo = algo;
    c.iters = iters;
    switch (algo)
    {
    case Algorithm::em:
      break;
    case Algorithm::em_split:
      c.split_batches = iters;
      break;
    case Algorithm::grad:
      c.step = StepSchedule::constant(step.value_or(1.0));
      break;
    case Algorithm::grad_split:
      c.step = StepSchedule::constant(step.value_or(1.0));
      c.split_batches = iters;
      break;
    case Algorithm::sgd:
    {
      c.step = StepSchedule::decaying(1.5, default_xi());
      const auto r = proj_radius ? *proj_radius : 4 * initial_distance();
      // Centre is replaced by theta^0 at run time.
      c.projection = BallSpec{ParamVec::Zero(d), r / 2};
      break;
    }
    }
    return c;
  }

  auto ExperimentSpec::phi() const -> double
  {
    const auto t = theta_star_norm();
    const auto root = std::sqrt(t * t + sigma * sigma);
    return model == ModelKind::gmm ? t * root : root;
  }

  auto ExperimentResult::all_failed() const -> bool
  {
    return std::all_of(trials.begin(), trials.end(),
                       [](const auto& t) { return t.error.has_value(); });
  }


  namespace {

    template <typename F>
    auto with_model(const ExperimentSpec& spec, F&& f)
    {
      const auto theta_star = spec.theta_star();
      switch (spec.model)
      {
      case ModelKind::mor:
        return f(MorModel{{theta_star, spec.sigma}});
      case ModelKind::missing:
        return f(MissingModel{{theta_star, spec.sigma, spec.omega},
                              spec.second_moment});
      case ModelKind::gmm:
      default:
        return f(GmmModel{{theta_star, spec.sigma}});
      }
    }

    auto draw_init(const ParamVec& theta_star, double distance,
                   InitStyle style, RngStream& rng) -> ParamVec
    {
      auto u = random_unit_vector(theta_star.size(), rng);
      if (style == InitStyle::toward_theta_star && theta_star.norm() > 0)
        while (u.dot(theta_star) < 0)
          u = random_unit_vector(theta_star.size(), rng);
      return theta_star + distance * u;
    }

    //! The locally attracting optimum near theta*: the same iteration run
    //! from theta* until it moves less than reference_tolerance.
    template <EmModel Model>
    auto optimization_reference(const Model& model,
                                const typename Model::Data& data,
                                const SolverConfig& config) -> ParamVec
    {
      auto theta = model.theta_star();
      const bool gradient = config.algo == Algorithm::grad;
      const auto alpha = gradient ? config.step->at(0) : 1.0;
      for (std::int64_t t = 0; t < reference_max_iters; ++t)
      {
        const ParamVec next =
            gradient ? ParamVec(theta + alpha * model.q_grad(data, theta, theta))
                     : model.m_step(data, theta);
        const auto moved = (next - theta).norm();
        theta = next;
        if (moved < reference_tolerance)
          break;
      }
      return theta;
    }

    auto trial_seed(const ExperimentSpec& spec, int trial) -> std::uint64_t
    {
      return derive_seed(spec.seed, "trial", std::uint64_t(trial));
    }

    auto seed_string(std::uint64_t seed) -> std::string
    {
      return std::to_string(seed);
    }

    auto trace_table(const ExperimentSpec& spec,
                     const std::vector<TrialOutcome>& outcomes) -> CsvTable
    {
      auto table = CsvTable{
          {"model", "algo", "trial", "iter", "opt_error", "stat_error"}, {}};
      for (const auto& o : outcomes)
      {
        if (!o.trace)
          continue;
        for (const auto& r : o.trace->records)
          table.add_row({to_string(spec.model), to_string(spec.algo),
                         std::to_string(o.trial), std::to_string(r.t),
                         format_optional(r.opt_error),
                         format_double(r.stat_error)});
      }
      return table;
    }

    auto write_errors(const ExperimentSpec& spec,
                      const std::vector<TrialOutcome>& outcomes) -> void
    {
      auto table = CsvTable{{"trial", "seed", "error"}, {}};
      for (const auto& o : outcomes)
        if (o.error)
        {
          auto msg = *o.error;
          std::replace(msg.begin(), msg.end(), ',', ';');
          std::replace(msg.begin(), msg.end(), '\n', ' ');
          table.add_row({std::to_string(o.trial), seed_string(o.seed), msg});
        }
      const auto path = spec.output_dir / "errors.csv";
      if (!table.rows.empty())
        table.write(path);
      else if (std::filesystem::exists(path))
        std::filesystem::remove(path);
    }

    auto try_plot(const std::filesystem::path& csv, const PlotSpec& plot,
                  const std::filesystem::path& svg) -> void
    {
      try
      {
        emit_svg(csv, plot, svg);
      }
      catch (const EmptyCsv&)
      {
        // Nothing to draw, e.g. every trial failed.
      }
    }

    auto stat_plot(const std::string& title) -> PlotSpec
    {
      return {"iter", "stat_error", true, "trial", title};
    }

  }  // namespace


  auto summarize(const ExperimentSpec& spec, const std::vector<double>& opt,
                 const std::vector<double>& stat, double init_error)
      -> RunSummary
  {
    auto s = RunSummary{};
    s.phi = spec.phi();
    try
    {
      s.kappa_fit = fit_geometric_rate(opt, opt_error_floor);
    }
    catch (const TooFewPoints&)
    {
    }
    if (stat.size() >= std::size_t(plateau_window))
      s.plateau = detect_plateau(stat, plateau_window);
    if (s.kappa_fit && *s.kappa_fit > 0 && *s.kappa_fit < 1 &&
        init_error > 0 && s.phi > 0)
    {
      const auto deviation =
          s.phi * std::sqrt(double(spec.d) / double(spec.n));
      s.suggested_T = compute_suggested_T(*s.kappa_fit, init_error, deviation);
    }
    return s;
  }

  auto run_trial(const ExperimentSpec& spec, int trial, std::uint64_t seed)
      -> TrialOutcome
  {
    auto outcome = TrialOutcome{trial, seed, std::nullopt, {}, std::nullopt};
    try
    {
      with_model(spec, [&](const auto& model) {
        const auto config = spec.solver_config();
        auto data_rng = derive_stream(seed, "data", 0);
        auto init_rng = derive_stream(seed, "init", 0);
        const auto sgd_rng = derive_stream(seed, "sgd", 0);

        const auto data = model.sample(
            config.algo == Algorithm::sgd ? 0 : spec.n, data_rng);
        const auto theta0 =
            draw_init(model.theta_star(), spec.initial_distance(),
                      spec.effective_init_style(), init_rng);
        auto result = run_solver(model, data, theta0, config, sgd_rng);

        if (config.algo != Algorithm::sgd)
        {
          auto reference_config = config;
          if (config.algo == Algorithm::em_split ||
              config.algo == Algorithm::grad_split)
            reference_config.algo = Algorithm::em;
          result.trace.set_reference(
              optimization_reference(model, data, reference_config));
        }
        outcome.summary =
            summarize(spec, result.trace.opt_errors(),
                      result.trace.stat_errors(),
                      (theta0 - model.theta_star()).norm());
        outcome.trace = std::move(result.trace);
      });
    }
    catch (const InvalidConfig&)
    {
      throw;
    }
    catch (const std::exception& e)
    {
      outcome.error = e.what();
    }
    return outcome;
  }

  auto run_experiment(const ExperimentSpec& spec) -> ExperimentResult
  {
    spec.validate();
    auto result = ExperimentResult{};
    for (int k = 0; k < spec.trials; ++k)
      result.trials.push_back(run_trial(spec, k, trial_seed(spec, k)));

    std::filesystem::create_directories(spec.output_dir);
    trace_table(spec, result.trials).write(spec.output_dir / "trace.csv");

    auto summary = CsvTable{
        {"trial", "kappa_fit", "plateau", "suggested_T", "seed"}, {}};
    for (const auto& o : result.trials)
      summary.add_row(
          {std::to_string(o.trial), format_optional(o.summary.kappa_fit),
           format_optional(o.summary.plateau),
           o.summary.suggested_T ? std::to_string(*o.summary.suggested_T)
                                 : std::string{},
           seed_string(o.seed)});
    summary.write(spec.output_dir / "summary.csv");
    write_errors(spec, result.trials);

    if (spec.svg)
    {
      const auto csv = spec.output_dir / "trace.csv";
      const auto title = to_string(spec.model) + " " + to_string(spec.algo);
      if (spec.algo != Algorithm::sgd)
        try_plot(csv,
                 {"iter", "opt_error", true, "trial",
                  title + ": optimization error"},
                 spec.output_dir / "opt_error.svg");
      try_plot(csv, stat_plot(title + ": statistical error"),
               spec.output_dir / "stat_error.svg");
    }
    return result;
  }


  namespace {

    //! Fitted rate, or when the curve reaches the floor too quickly for a
    //! fit, the rate bound (floor / e_0)^(1 / t) from the first iteration t
    //! at or below the floor.
    auto sweep_rate(const std::vector<double>& opt) -> std::optional<double>
    {
      try
      {
        return fit_geometric_rate(opt, opt_error_floor);
      }
      catch (const TooFewPoints&)
      {
      }
      if (opt.empty() || !(opt.front() > opt_error_floor))
        return std::nullopt;
      for (std::size_t t = 1; t < opt.size(); ++t)
        if (opt[t] <= opt_error_floor)
          return std::pow(opt_error_floor / opt.front(), 1.0 / double(t));
      return std::nullopt;
    }

  }  // namespace

  auto run_snr_sweep(const ExperimentSpec& spec,
                     const std::vector<double>& snr_grid)
      -> std::vector<SnrSweepRow>
  {
    spec.validate();
    if (snr_grid.empty())
      throw InvalidConfig{"snr grid must be nonempty"};
    for (const auto s : snr_grid)
      if (!(s > 0))
        throw InvalidConfig{"snr values must be positive"};

    auto rows = std::vector<SnrSweepRow>{};
    auto curves = CsvTable{{"snr", "iter", "opt_error"}, {}};
    for (const auto snr : snr_grid)
    {
      auto s = spec;
      s.snr = snr;
      s.theta_norm.reset();
      auto kappas = std::vector<double>{};
      auto log_sum = std::vector<double>(std::size_t(s.iters + 1), 0.0);
      auto counts = std::vector<int>(std::size_t(s.iters + 1), 0);
      for (int k = 0; k < s.trials; ++k)
      {
        const auto o = run_trial(s, k, trial_seed(s, k));
        if (!o.trace)
          continue;
        if (const auto rate = sweep_rate(o.trace->opt_errors()))
          kappas.push_back(*rate);
        for (const auto& r : o.trace->records)
          if (r.opt_error && *r.opt_error > 0)
          {
            log_sum[std::size_t(r.t)] += std::log(*r.opt_error);
            ++counts[std::size_t(r.t)];
          }
      }
      auto row = SnrSweepRow{snr, std::nan(""), std::nan(""),
                             int(kappas.size())};
      if (!kappas.empty())
      {
        const auto k = double(kappas.size());
        row.kappa_fit_mean = std::accumulate(kappas.begin(), kappas.end(), 0.0) / k;
        double ss = 0;
        for (const auto v : kappas)
          ss += (v - row.kappa_fit_mean) * (v - row.kappa_fit_mean);
        row.kappa_fit_sd = kappas.size() > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
      }
      rows.push_back(row);
      for (std::size_t t = 0; t < log_sum.size(); ++t)
        if (counts[t] > 0)
          curves.add_row({format_double(snr), std::to_string(t),
                          format_double(std::exp(log_sum[t] / counts[t]))});
    }

    std::filesystem::create_directories(spec.output_dir);
    auto table = CsvTable{
        {"snr", "kappa_fit_mean", "kappa_fit_sd", "fitted_trials"}, {}};
    for (const auto& r : rows)
      table.add_row({format_double(r.snr), format_double(r.kappa_fit_mean),
                     format_double(r.kappa_fit_sd),
                     std::to_string(r.fitted_trials)});
    table.write(spec.output_dir / "snr_sweep.csv");
    curves.write(spec.output_dir / "snr_trace.csv");
    if (spec.svg)
      try_plot(spec.output_dir / "snr_trace.csv",
               {"iter", "opt_error", true, "snr",
                to_string(spec.model) + ": optimization error by SNR"},
               spec.output_dir / "snr_trace.svg");
    return rows;
  }


  namespace {

    template <EmModel Model>
    auto roc_for_model(const ExperimentSpec& spec, const Model& model,
                       std::size_t grid_index, int inits) -> RocResult
    {
      const auto config = spec.solver_config();
      const auto& theta_star = model.theta_star();
      const auto norm = theta_star.norm();
      auto data_rng = derive_stream(spec.seed, "roc-data", grid_index);
      const auto data = model.sample(spec.n, data_rng);
      const auto init_rng = derive_stream(spec.seed, "roc-init", grid_index);
      const auto solver_rng = derive_stream(spec.seed, "roc-sgd", grid_index);

      const auto reference =
          run_solver(model, data, theta_star, config, solver_rng);
      const auto stat = reference.trace.stat_errors();
      const auto plateau =
          stat.size() >= std::size_t(plateau_window)
              ? detect_plateau(stat, plateau_window)
              : stat.back();

      auto out = RocResult{};
      out.theta_norm = norm;
      out.threshold =
          std::max(2 * plateau, 0.05 * norm + 0.05 * spec.sigma);

      // Initialization j uses the same direction at every radius.
      auto directions = std::vector<ParamVec>{};
      for (int j = 0; j < inits; ++j)
      {
        auto rng = init_rng.child("direction", std::uint64_t(j));
        directions.push_back(random_unit_vector(spec.d, rng));
      }

      const auto success_fraction = [&](double radius) {
        if (radius == 0)
          return 1.0;
        int ok = 0;
        for (const auto& u : directions)
        {
          try
          {
            const auto r = run_solver(model, data, theta_star + radius * u,
                                      config, solver_rng);
            if (r.trace.back().stat_error <= out.threshold)
              ++ok;
          }
          catch (const InvalidConfig&)
          {
            throw;
          }
          catch (const Error&)
          {
            // A failed run counts as non-convergence.
          }
        }
        return double(ok) / double(inits);
      };

      auto lo = 0.0;
      auto hi = 2 * norm + 2 * spec.sigma;
      out.success_fractions.emplace_back(0.0, 1.0);
      const auto at_hi = success_fraction(hi);
      out.success_fractions.emplace_back(hi, at_hi);
      if (at_hi >= 0.9)
        lo = hi;
      else
        for (int k = 0; k < 12; ++k)
        {
          const auto mid = 0.5 * (lo + hi);
          const auto f = success_fraction(mid);
          out.success_fractions.emplace_back(mid, f);
          if (f >= 0.9)
            lo = mid;
          else
            hi = mid;
        }
      out.radius_hat = lo;
      std::sort(out.success_fractions.begin(), out.success_fractions.end());
      return out;
    }

  }  // namespace

  auto run_roc(const ExperimentSpec& spec,
               const std::vector<double>& theta_norm_grid,
               int inits_per_radius) -> std::vector<RocResult>
  {
    spec.validate();
    if (theta_norm_grid.empty())
      throw InvalidConfig{"theta norm grid must be nonempty"};
    if (inits_per_radius < 1)
      throw InvalidConfig{"inits per radius must be positive"};
    if (spec.algo == Algorithm::sgd)
      throw InvalidConfig{"roc supports batch algorithms only"};

    auto results = std::vector<RocResult>{};
    for (std::size_t g = 0; g < theta_norm_grid.size(); ++g)
    {
      auto s = spec;
      s.theta_norm = theta_norm_grid[g];
      if (!(theta_norm_grid[g] > 0))
        throw InvalidConfig{"theta norms must be positive"};
      results.push_back(with_model(s, [&](const auto& model) {
        return roc_for_model(s, model, g, inits_per_radius);
      }));
    }

    std::filesystem::create_directories(spec.output_dir);
    auto table = CsvTable{
        {"model", "theta_norm", "radius", "success_fraction", "radius_hat"},
        {}};
    for (const auto& r : results)
      for (const auto& [radius, fraction] : r.success_fractions)
        table.add_row({to_string(spec.model), format_double(r.theta_norm),
                       format_double(radius), format_double(fraction),
                       format_double(r.radius_hat)});
    table.write(spec.output_dir / "roc.csv");
    if (spec.svg)
      try_plot(spec.output_dir / "roc.csv",
               {"radius", "success_fraction", false, "theta_norm",
                to_string(spec.model) + ": success fraction by radius"},
               spec.output_dir / "roc.svg");
    return results;
  }


  auto run_sgd_experiment(const ExperimentSpec& spec)
      -> std::vector<SgdTrialSummary>
  {
    if (spec.algo != Algorithm::sgd)
      throw InvalidConfig{"the sgd experiment requires algo = sgd"};
    spec.validate();
    const auto half_radius = spec.solver_config().projection->radius;

    auto outcomes = std::vector<TrialOutcome>{};
    auto summaries = std::vector<SgdTrialSummary>{};
    for (int k = 0; k < spec.trials; ++k)
    {
      auto o = run_trial(spec, k, trial_seed(spec, k));
      auto s = SgdTrialSummary{k, o.seed, std::nan(""), std::nan(""),
                               std::nan("")};
      if (o.trace)
      {
        const auto stat = o.trace->stat_errors();
        s.final_stat_error = stat.back();
        try
        {
          s.loglog_slope = fit_loglog_slope(stat, 100, spec.iters);
        }
        catch (const TooFewPoints&)
        {
          try
          {
            s.loglog_slope = fit_loglog_slope(stat, 1, spec.iters);
          }
          catch (const TooFewPoints&)
          {
          }
        }
        const auto& theta0 = o.trace->records.front().theta;
        double excess = -half_radius;
        for (const auto& r : o.trace->records)
          excess = std::max(excess, (r.theta - theta0).norm() - half_radius);
        s.max_ball_excess = excess;
      }
      summaries.push_back(s);
      outcomes.push_back(std::move(o));
    }

    std::filesystem::create_directories(spec.output_dir);
    trace_table(spec, outcomes).write(spec.output_dir / "trace.csv");
    auto table = CsvTable{{"trial", "loglog_slope", "final_stat_error",
                           "max_ball_excess", "seed"},
                          {}};
    for (const auto& s : summaries)
      table.add_row({std::to_string(s.trial), format_double(s.loglog_slope),
                     format_double(s.final_stat_error),
                     format_double(s.max_ball_excess), seed_string(s.seed)});
    table.write(spec.output_dir / "sgd_summary.csv");
    write_errors(spec, outcomes);
    if (spec.svg)
      try_plot(spec.output_dir / "trace.csv",
               stat_plot(to_string(spec.model) +
                         " sgd: statistical error"),
               spec.output_dir / "stat_error.svg");
    return summaries;
  }


  auto run_conditions(const ExperimentSpec& spec) -> ConditionsRow
  {
    spec.validate();
    auto probe = ProbeSpec{};
    probe.radius = spec.default_radius();
    probe.num_probes = spec.num_probes;
    probe.mc_n = spec.mc_n;
    probe.rng = derive_stream(spec.seed, "conditions", 0);

    const auto c = with_model(spec, [&](const auto& model) {
      return estimate_conditions(model, probe);
    });

    auto row = ConditionsRow{};
    row.snr_or_omega = spec.model == ModelKind::missing
                           ? spec.omega
                           : spec.theta_star_norm() / spec.sigma;
    row.radius = probe.radius;
    row.lambda = c.lambda;
    row.mu = c.mu;
    row.gamma_fos = c.gamma_fos;
    row.gamma_gs = c.gamma_gs;
    row.kappa_hat = c.kappa;
    row.xi = c.xi;
    row.sigma_g_sq = c.sigma_g_sq;
    row.stderr = c.kappa_stderr;

    std::filesystem::create_directories(spec.output_dir);
    auto table = CsvTable{{"model", "snr_or_omega", "radius", "lambda", "mu",
                           "gamma_fos", "gamma_gs", "kappa_hat", "xi",
                           "sigma_g_sq", "stderr"},
                          {}};
    table.add_row({to_string(spec.model), format_double(row.snr_or_omega),
                   format_double(row.radius), format_double(row.lambda),
                   format_double(row.mu), format_double(row.gamma_fos),
                   format_double(row.gamma_gs), format_double(row.kappa_hat),
                   format_double(row.xi), format_double(row.sigma_g_sq),
                   format_double(row.stderr)});
    table.write(spec.output_dir / "conditions.csv");
    return row;
  }

}  // namespace emconv
