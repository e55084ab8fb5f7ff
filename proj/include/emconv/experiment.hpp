#pragma once

#include <emconv/core.hpp>
#include <emconv/missing.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>


//! Multi-trial experiments: synthetic data from a known theta*, solver
//! traces with optimization and statistical errors, fitted rates, and
//! the CSV/SVG files behind each figure-style run.
namespace emconv {

  enum class ModelKind
  {
    gmm,
    mor,
    missing
  };

  auto to_string(ModelKind) -> std::string;
  auto parse_model(const std::string&) -> ModelKind;

  enum class InitStyle
  {
    //! theta* + r u with u uniform on the sphere, redrawn until
    //! <u, theta*> >= 0.
    toward_theta_star,
    random_direction
  };

  auto to_string(InitStyle) -> std::string;
  auto parse_init_style(const std::string&) -> InitStyle;

  struct ExperimentSpec
  {
    ModelKind model = ModelKind::gmm;
    Algorithm algo = Algorithm::em;
    Index d = 10;
    Index n = 1000;
    int trials = 10;
    std::int64_t iters = 50;

    //! |theta*| = snr * sigma unless theta_norm is given.
    double snr = 2;
    double sigma = 1;
    std::optional<double> theta_norm;
    double omega = 0.2;
    SecondMoment second_moment = SecondMoment::identity_block;

    //! |theta^0 - theta*| = init_radius_frac * default_radius() unless
    //! init_distance is given.
    double init_radius_frac = 1;
    std::optional<double> init_distance;
    std::optional<InitStyle> init_style;

    //! Constant step for grad / grad-split (default 1).
    std::optional<double> step;
    //! Schedule constant for sgd (default per model, see default_xi).
    std::optional<double> xi;
    //! Radius r for sgd; iterates are projected onto B(r/2; theta^0).
    //! Default 4 |theta^0 - theta*|.
    std::optional<double> proj_radius;

    //! Convergence radius |theta*| * mor_radius_frac for the regression
    //! mixture.
    double mor_radius_frac = 1.0 / 32;
    //! Convergence radius zeta2 * sigma for missing covariates.
    double zeta2 = 1;

    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "out";
    bool svg = true;

    // conditions
    int num_probes = 100;
    Index mc_n = 100000;

    // snr-sweep / roc
    std::vector<double> snr_grid = {1.5, 2, 3, 5};
    std::vector<double> theta_norm_grid = {1, 2, 4, 8};
    int inits_per_radius = 100;

    auto validate() const -> void;

    auto theta_star_norm() const -> double;
    auto theta_star() const -> ParamVec;
    //! Corollary-style convergence radius: |theta*|/4 (gmm),
    //! mor_radius_frac |theta*| (mor), zeta2 sigma (missing).
    auto default_radius() const -> double;
    auto initial_distance() const -> double;
    auto effective_init_style() const -> InitStyle;
    auto default_xi() const -> double;
    auto solver_config() const -> SolverConfig;
    //! phi = |theta*| sqrt(|theta*|^2 + sigma^2) for gmm and
    //! sqrt(sigma^2 + |theta*|^2) otherwise.
    auto phi() const -> double;
  };

  //! Floor for rate fits on optimization-error curves.
  inline constexpr double opt_error_floor = 1e-10;
  //! Movement tolerance for the optimization-error reference.
  inline constexpr double reference_tolerance = 1e-12;
  inline constexpr std::int64_t reference_max_iters = 100000;
  inline constexpr int plateau_window = 5;

  struct RunSummary
  {
    std::optional<double> kappa_fit;
    std::optional<double> plateau;
    double phi = 0;
    std::optional<std::int64_t> suggested_T;
  };

  struct TrialOutcome
  {
    int trial = 0;
    std::uint64_t seed = 0;
    std::optional<Trace> trace;
    RunSummary summary;
    //! Set when the trial failed; the other trials still run.
    std::optional<std::string> error;
  };

  struct ExperimentResult
  {
    std::vector<TrialOutcome> trials;

    auto all_failed() const -> bool;
  };

  //! One trial from its own seed (see TrialOutcome::seed). Never throws
  //! for numerical failures; they are recorded in the outcome.
  auto run_trial(const ExperimentSpec& spec, int trial, std::uint64_t seed)
      -> TrialOutcome;

  //! Summary quantities recomputed from a trace's error columns.
  auto summarize(const ExperimentSpec& spec, const std::vector<double>& opt,
                 const std::vector<double>& stat, double init_error)
      -> RunSummary;

  //! Writes trace.csv, summary.csv and trace.svg to spec.output_dir.
  auto run_experiment(const ExperimentSpec& spec) -> ExperimentResult;

  struct SnrSweepRow
  {
    double snr = 0;
    double kappa_fit_mean = 0;
    double kappa_fit_sd = 0;
    int fitted_trials = 0;
  };

  //! Writes snr_sweep.csv, snr_trace.csv and snr_trace.svg.
  auto run_snr_sweep(const ExperimentSpec& spec,
                     const std::vector<double>& snr_grid)
      -> std::vector<SnrSweepRow>;

  struct RocResult
  {
    double theta_norm = 0;
    double radius_hat = 0;
    double threshold = 0;
    std::vector<std::pair<double, double>> success_fractions;
  };

  //! Radius of convergence per |theta*| by bisection; writes roc.csv and
  //! roc.svg.
  auto run_roc(const ExperimentSpec& spec,
               const std::vector<double>& theta_norm_grid,
               int inits_per_radius = 100) -> std::vector<RocResult>;

  struct SgdTrialSummary
  {
    int trial = 0;
    std::uint64_t seed = 0;
    double loglog_slope = 0;
    double final_stat_error = 0;
    //! max_t |theta^t - theta^0| minus the projection radius r/2.
    double max_ball_excess = 0;
  };

  //! Writes trace.csv, sgd_summary.csv and trace.svg.
  auto run_sgd_experiment(const ExperimentSpec& spec)
      -> std::vector<SgdTrialSummary>;

  struct ConditionsRow
  {
    double snr_or_omega = 0;
    double radius = 0;
    double lambda = 0;
    double mu = 0;
    double gamma_fos = 0;
    double gamma_gs = 0;
    double kappa_hat = 0;
    double xi = 0;
    double sigma_g_sq = 0;
    double stderr = 0;
  };

  //! Population condition estimates at default_radius(); writes
  //! conditions.csv.
  auto run_conditions(const ExperimentSpec& spec) -> ConditionsRow;

}  // namespace emconv
