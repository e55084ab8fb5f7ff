// Command-line front end for the experiment harness.
//
//   emconv run        --model gmm --algo em --d 10 --n 1000 --snr 2 --out out/
//   emconv snr-sweep  --model gmm --snr-grid 1.5,2,3,5
//   emconv roc        --model mor --theta-norm-grid 1,2,4,8
//   emconv sgd        --model mor --iters 10000 --init-dist 1
//   emconv conditions --model missing --omega 0.05 --snr 1 --zeta2 0.5
//   emconv plot       --csv out/trace.csv --x iter --y opt_error --log-y
//
// Every flag may also come from --config FILE.json, whose keys are the
// flag names without the leading dashes; flags given on the command line
// win.

#include <emconv/csv.hpp>
#include <emconv/experiment.hpp>
#include <emconv/svg.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>


namespace {

  using namespace emconv;
  using json = nlohmann::json;

  constexpr int exit_invalid_config = 2;
  constexpr int exit_numerical_failure = 3;

  //! Flags shared by the experiment subcommands. Each is optional so that
  //! values from the config file are only overridden when given.
  struct CommonFlags
  {
    std::optional<std::string> config;
    std::optional<std::string> model;
    std::optional<std::string> algo;
    std::optional<Index> d;
    std::optional<Index> n;
    std::optional<int> trials;
    std::optional<std::int64_t> iters;
    std::optional<double> snr;
    std::optional<double> sigma;
    std::optional<double> theta_norm;
    std::optional<double> omega;
    std::optional<std::uint64_t> seed;
    std::optional<double> init_radius_frac;
    std::optional<double> init_dist;
    std::optional<std::string> init_style;
    std::optional<double> step;
    std::optional<double> xi;
    std::optional<double> proj_radius;
    std::optional<double> mor_radius_frac;
    std::optional<double> zeta2;
    std::optional<std::string> second_moment;
    std::optional<std::string> out;
    std::optional<int> probes;
    std::optional<Index> mc_n;
    std::optional<std::vector<double>> snr_grid;
    std::optional<std::vector<double>> theta_norm_grid;
    std::optional<int> inits_per_radius;
    bool no_svg = false;
  };

  auto add_common(CLI::App* app, CommonFlags& f) -> void
  {
    app->add_option("--config", f.config, "JSON config mirroring the flags");
    app->add_option("--model", f.model, "gmm | mor | missing");
    app->add_option("--algo", f.algo, "em | em-split | grad | grad-split | sgd");
    app->add_option("--d", f.d, "dimension");
    app->add_option("--n", f.n, "sample size");
    app->add_option("--trials", f.trials, "number of trials");
    app->add_option("--iters", f.iters, "iteration budget T");
    app->add_option("--snr", f.snr, "|theta*| / sigma");
    app->add_option("--sigma", f.sigma, "noise standard deviation (default 1)");
    app->add_option("--theta-norm", f.theta_norm, "|theta*|, overrides --snr");
    app->add_option("--omega", f.omega, "missing probability");
    app->add_option("--seed", f.seed, "master seed");
    app->add_option("--init-radius-frac", f.init_radius_frac,
                    "|theta0 - theta*| as a fraction of the model radius");
    app->add_option("--init-dist", f.init_dist,
                    "|theta0 - theta*|, overrides --init-radius-frac");
    app->add_option("--init-style", f.init_style,
                    "toward-theta-star | random-direction");
    app->add_option("--step", f.step, "constant gradient EM step");
    app->add_option("--xi", f.xi, "sgd schedule constant");
    app->add_option("--proj-radius", f.proj_radius,
                    "sgd radius r (projection onto B(r/2; theta0))");
    app->add_option("--mor-radius-frac", f.mor_radius_frac,
                    "regression mixture radius as a fraction of |theta*|");
    app->add_option("--zeta2", f.zeta2,
                    "missing-covariate radius in units of sigma");
    app->add_option("--second-moment", f.second_moment,
                    "identity-block | exact (missing model)");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--probes", f.probes, "probe points (conditions)");
    app->add_option("--mc-n", f.mc_n, "Monte-Carlo samples (conditions)");
    app->add_option("--snr-grid", f.snr_grid, "SNR values (snr-sweep)")
        ->delimiter(',');
    app->add_option("--theta-norm-grid", f.theta_norm_grid,
                    "|theta*| values (roc)")
        ->delimiter(',');
    app->add_option("--inits-per-radius", f.inits_per_radius,
                    "initializations per radius (roc)");
    app->add_flag("--no-svg", f.no_svg, "skip SVG output");
  }

  auto parse_second_moment(const std::string& s) -> SecondMoment
  {
    if (s == "identity-block")
      return SecondMoment::identity_block;
    if (s == "exact")
      return SecondMoment::exact;
    throw InvalidConfig{"unknown second-moment variant: " + s};
  }

  //! Applies one named setting, from either the config file or a flag.
  auto apply(ExperimentSpec& spec, const std::string& key, const json& v)
      -> void
  {
    static const std::map<std::string,
                          std::function<void(ExperimentSpec&, const json&)>>
        setters = {
            {"model", [](auto& s, const json& j) {
               s.model = parse_model(j.get<std::string>());
             }},
            {"algo", [](auto& s, const json& j) {
               s.algo = parse_algorithm(j.get<std::string>());
             }},
            {"d", [](auto& s, const json& j) { s.d = j.get<Index>(); }},
            {"n", [](auto& s, const json& j) { s.n = j.get<Index>(); }},
            {"trials", [](auto& s, const json& j) { s.trials = j.get<int>(); }},
            {"iters",
             [](auto& s, const json& j) { s.iters = j.get<std::int64_t>(); }},
            {"snr", [](auto& s, const json& j) { s.snr = j.get<double>(); }},
            {"sigma",
             [](auto& s, const json& j) { s.sigma = j.get<double>(); }},
            {"theta-norm",
             [](auto& s, const json& j) { s.theta_norm = j.get<double>(); }},
            {"omega",
             [](auto& s, const json& j) { s.omega = j.get<double>(); }},
            {"seed",
             [](auto& s, const json& j) { s.seed = j.get<std::uint64_t>(); }},
            {"init-radius-frac",
             [](auto& s, const json& j) {
               s.init_radius_frac = j.get<double>();
             }},
            {"init-dist",
             [](auto& s, const json& j) { s.init_distance = j.get<double>(); }},
            {"init-style", [](auto& s, const json& j) {
               s.init_style = parse_init_style(j.get<std::string>());
             }},
            {"step", [](auto& s, const json& j) { s.step = j.get<double>(); }},
            {"xi", [](auto& s, const json& j) { s.xi = j.get<double>(); }},
            {"proj-radius",
             [](auto& s, const json& j) { s.proj_radius = j.get<double>(); }},
            {"mor-radius-frac",
             [](auto& s, const json& j) {
               s.mor_radius_frac = j.get<double>();
             }},
            {"zeta2",
             [](auto& s, const json& j) { s.zeta2 = j.get<double>(); }},
            {"second-moment", [](auto& s, const json& j) {
               s.second_moment = parse_second_moment(j.get<std::string>());
             }},
            {"out", [](auto& s, const json& j) {
               s.output_dir = j.get<std::string>();
             }},
            {"probes",
             [](auto& s, const json& j) { s.num_probes = j.get<int>(); }},
            {"mc-n", [](auto& s, const json& j) { s.mc_n = j.get<Index>(); }},
            {"snr-grid", [](auto& s, const json& j) {
               s.snr_grid = j.get<std::vector<double>>();
             }},
            {"theta-norm-grid", [](auto& s, const json& j) {
               s.theta_norm_grid = j.get<std::vector<double>>();
             }},
            {"inits-per-radius",
             [](auto& s, const json& j) {
               s.inits_per_radius = j.get<int>();
             }},
            {"no-svg",
             [](auto& s, const json& j) { s.svg = !j.get<bool>(); }},
        };
    const auto it = setters.find(key);
    if (it == setters.end())
      throw InvalidConfig{"unknown config key: " + key};
    try
    {
      it->second(spec, v);
    }
    catch (const json::exception& e)
    {
      throw InvalidConfig{"bad value for " + key + ": " + e.what()};
    }
  }

  auto build_spec(const CommonFlags& f) -> ExperimentSpec
  {
    auto spec = ExperimentSpec{};
    if (f.config)
    {
      auto in = std::ifstream{*f.config};
      if (!in)
        throw InvalidConfig{"cannot read config file: " + *f.config};
      json doc;
      try
      {
        doc = json::parse(in);
      }
      catch (const json::exception& e)
      {
        throw InvalidConfig{std::string{"config is not valid JSON: "} +
                            e.what()};
      }
      if (!doc.is_object())
        throw InvalidConfig{"config must be a JSON object"};
      for (const auto& [key, value] : doc.items())
        apply(spec, key, value);
    }

    const auto set = [&](const char* key, const auto& opt) {
      if (opt)
        apply(spec, key, json(*opt));
    };
    set("model", f.model);
    set("algo", f.algo);
    set("d", f.d);
    set("n", f.n);
    set("trials", f.trials);
    set("iters", f.iters);
    set("snr", f.snr);
    set("sigma", f.sigma);
    set("theta-norm", f.theta_norm);
    set("omega", f.omega);
    set("seed", f.seed);
    set("init-radius-frac", f.init_radius_frac);
    set("init-dist", f.init_dist);
    set("init-style", f.init_style);
    set("step", f.step);
    set("xi", f.xi);
    set("proj-radius", f.proj_radius);
    set("mor-radius-frac", f.mor_radius_frac);
    set("zeta2", f.zeta2);
    set("second-moment", f.second_moment);
    set("out", f.out);
    set("probes", f.probes);
    set("mc-n", f.mc_n);
    set("snr-grid", f.snr_grid);
    set("theta-norm-grid", f.theta_norm_grid);
    set("inits-per-radius", f.inits_per_radius);
    if (f.no_svg)
      spec.svg = false;
    return spec;
  }

  auto report_sgd(const std::vector<SgdTrialSummary>& summaries) -> int
  {
    for (const auto& s : summaries)
      std::cout << "trial " << s.trial << "  slope "
                << format_double(s.loglog_slope) << "  final error "
                << format_double(s.final_stat_error) << '\n';
    const bool all_failed =
        std::all_of(summaries.begin(), summaries.end(),
                    [](const auto& s) { return std::isnan(s.final_stat_error); });
    return all_failed ? exit_numerical_failure : 0;
  }

}  // namespace


int main(int argc, char** argv)
{
  auto app = CLI::App{"EM, gradient EM and stochastic gradient EM experiments "
                      "for latent-variable models"};
  app.require_subcommand(1);

  auto run_flags = CommonFlags{};
  auto sweep_flags = CommonFlags{};
  auto roc_flags = CommonFlags{};
  auto sgd_flags = CommonFlags{};
  auto cond_flags = CommonFlags{};

  auto* run = app.add_subcommand("run", "multi-trial solver traces");
  add_common(run, run_flags);
  auto* sweep = app.add_subcommand("snr-sweep", "fitted rate across SNR values");
  add_common(sweep, sweep_flags);
  auto* roc = app.add_subcommand("roc", "radius of convergence by bisection");
  add_common(roc, roc_flags);
  auto* sgd = app.add_subcommand("sgd", "projected stochastic gradient EM");
  add_common(sgd, sgd_flags);
  auto* cond = app.add_subcommand("conditions",
                                  "Monte-Carlo regularity constants");
  add_common(cond, cond_flags);

  auto* plot = app.add_subcommand("plot", "render a CSV column as SVG lines");
  std::string plot_csv, plot_x, plot_y, plot_out, plot_title;
  std::optional<std::string> plot_group;
  bool plot_log_y = false;
  plot->add_option("--csv", plot_csv, "input CSV")->required();
  plot->add_option("--x", plot_x, "x column")->required();
  plot->add_option("--y", plot_y, "y column")->required();
  plot->add_option("--group", plot_group, "group-by column");
  plot->add_flag("--log-y", plot_log_y, "logarithmic y axis");
  plot->add_option("--title", plot_title, "plot title");
  plot->add_option("--out", plot_out, "output SVG")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const auto code = app.exit(e);
    return code == 0 ? 0 : exit_invalid_config;
  }

  try
  {
    if (plot->parsed())
    {
      emit_svg(plot_csv, {plot_x, plot_y, plot_log_y, plot_group, plot_title},
               plot_out);
      return 0;
    }

    if (run->parsed())
    {
      const auto spec = build_spec(run_flags);
      if (spec.algo == Algorithm::sgd)
        return report_sgd(run_sgd_experiment(spec));
      const auto result = run_experiment(spec);
      for (const auto& t : result.trials)
        if (t.error)
          std::cerr << "trial " << t.trial << " failed: " << *t.error << '\n';
      return result.all_failed() ? exit_numerical_failure : 0;
    }

    if (sweep->parsed())
    {
      const auto spec = build_spec(sweep_flags);
      const auto rows = run_snr_sweep(spec, spec.snr_grid);
      for (const auto& r : rows)
        std::cout << "snr " << format_double(r.snr) << "  kappa_fit "
                  << format_double(r.kappa_fit_mean) << " +- "
                  << format_double(r.kappa_fit_sd) << '\n';
      const bool none = std::all_of(rows.begin(), rows.end(), [](auto& r) {
        return r.fitted_trials == 0;
      });
      return none ? exit_numerical_failure : 0;
    }

    if (roc->parsed())
    {
      const auto spec = build_spec(roc_flags);
      for (const auto& r :
           run_roc(spec, spec.theta_norm_grid, spec.inits_per_radius))
        std::cout << "|theta*| " << format_double(r.theta_norm)
                  << "  radius_hat " << format_double(r.radius_hat) << '\n';
      return 0;
    }

    if (sgd->parsed())
    {
      auto spec = build_spec(sgd_flags);
      spec.algo = Algorithm::sgd;
      return report_sgd(run_sgd_experiment(spec));
    }

    if (cond->parsed())
    {
      const auto spec = build_spec(cond_flags);
      const auto row = run_conditions(spec);
      std::cout << "lambda " << format_double(row.lambda) << "  mu "
                << format_double(row.mu) << "  gamma_fos "
                << format_double(row.gamma_fos) << "  kappa_hat "
                << format_double(row.kappa_hat) << '\n';
      return 0;
    }
  }
  catch (const InvalidConfig& e)
  {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return exit_invalid_config;
  }
  catch (const MissingColumn& e)
  {
    std::cerr << e.what() << '\n';
    return exit_invalid_config;
  }
  catch (const EmptyCsv& e)
  {
    std::cerr << e.what() << '\n';
    return exit_invalid_config;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numerical_failure;
  }
  return 0;
}
