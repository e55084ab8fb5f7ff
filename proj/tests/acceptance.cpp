// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include "test_util.hpp"

#include <emconv/csv.hpp>
#include <emconv/experiment.hpp>
#include <emconv/fit.hpp>
#include <emconv/gmm.hpp>
#include <emconv/missing.hpp>
#include <emconv/mor.hpp>
#include <emconv/population.hpp>
#include <emconv/solvers.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>


using namespace emconv;
using emconv::test::random_vector;

namespace fs = std::filesystem;

namespace {

  struct Outcome
  {
    bool pass = true;
    std::ostringstream detail;

    auto require(bool ok, const std::string& what) -> void
    {
      if (!ok)
      {
        pass = false;
        detail << " [failed: " << what << "]";
      }
    }
  };

  auto theta_star(Index d, double norm) -> ParamVec
  {
    return ParamVec::Constant(d, norm / std::sqrt(double(d)));
  }

  auto probe(double radius, int num, Index mc_n, const std::string& label)
      -> ProbeSpec
  {
    return {radius, num, mc_n, derive_stream(2024, label, 0),
            ProbeStyle::fixed_radius_sphere};
  }

  auto median(std::vector<double> v) -> double
  {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }

  auto work_dir(const std::string& name) -> fs::path
  {
    const auto dir = fs::temp_directory_path() / "emconv_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
  }

  auto fmt(double v) -> std::string
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
  }


  // 1. Exact identities.

  template <typename Model>
  auto max_stationarity(const Model& model, const std::string& label,
                        Index n) -> double
  {
    double worst = 0;
    auto rng = derive_stream(1, label, 0);
    for (int k = 0; k < 100; ++k)
    {
      const auto data = model.sample(n, rng);
      const ParamVec theta =
          model.theta_star() + 0.5 * model.theta_star().norm() * rng.uniform() *
                                   random_unit_vector(model.dim(), rng);
      const auto m = model.m_step(data, theta);
      const auto scale = 1 + model.q_grad(data, ParamVec::Zero(model.dim()),
                                          theta).norm();
      worst = std::max(worst, model.q_grad(data, m, theta).norm() / scale);
    }
    return worst;
  }

  template <typename Model>
  auto ascent_violation(const Model& model, const std::string& label) -> double
  {
    double worst = 0;
    for (int k = 0; k < 10; ++k)
    {
      auto rng = derive_stream(1, label, k);
      const auto data = model.sample(1000, rng);
      const ParamVec theta0 =
          model.theta_star() + random_unit_vector(model.dim(), rng) *
                                   model.theta_star().norm() * rng.uniform();
      const auto r = run_em(model, data, theta0, 30);
      for (std::size_t t = 0; t + 1 < r.trace.size(); ++t)
      {
        const auto& th = r.trace.records[t].theta;
        const auto before = model.q_value(data, th, th);
        const auto after = model.q_value(data, r.trace.records[t + 1].theta, th);
        worst = std::max(worst, (before - after) / std::max(1.0, std::abs(before)));
      }
    }
    return worst;
  }

  auto criterion_identities(Outcome& out) -> void
  {
    const Index d = 10;
    const auto gmm = GmmModel{{theta_star(d, 2), 1.0}};
    const auto mor = MorModel{{theta_star(d, 2), 1.0}};
    const auto mis = MissingModel{{theta_star(d, 2), 1.0, 0.2}};

    double em_vs_grad = 0;
    for (int k = 0; k < 10; ++k)
    {
      auto rng = derive_stream(1, "em-grad", k);
      const auto data = gmm.sample(1000, rng);
      const ParamVec theta0 = gmm.theta_star() + random_vector(d, rng);
      const auto a = run_em(gmm, data, theta0, 50);
      const auto b = run_grad_em(gmm, data, theta0, StepSchedule::constant(1), 50);
      for (std::size_t t = 0; t < a.trace.size(); ++t)
        em_vs_grad = std::max(em_vs_grad,
                              (a.trace.records[t].theta - b.trace.records[t].theta)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    out.require(em_vs_grad <= 1e-10, "gmm em vs grad");

    double ols_gap = 0;
    for (int k = 0; k < 10; ++k)
    {
      auto rng = derive_stream(1, "ols", k);
      const auto full = MissingModel{{theta_star(d, 2), 1.0, 0.0}};
      const auto data = full.sample(200, rng);
      const MatrixXd gram = data.x.transpose() * data.x;
      const ParamVec ols = gram.ldlt().solve(data.x.transpose() * data.y);
      ols_gap = std::max(ols_gap,
                         (full.m_step(data, random_vector(d, rng)) - ols).norm());
    }
    out.require(ols_gap <= 1e-10, "missing omega=0 vs OLS");

    const auto stat = std::max({max_stationarity(gmm, "stat-gmm", 1000),
                                max_stationarity(mor, "stat-mor", 1000),
                                max_stationarity(mis, "stat-mis", 1000)});
    out.require(stat <= 1e-10, "stationarity");

    const auto ascent = std::max({ascent_violation(gmm, "asc-gmm"),
                                  ascent_violation(mor, "asc-mor"),
                                  ascent_violation(mis, "asc-mis")});
    out.require(ascent <= 1e-10, "ascent");

    bool idempotent = true;
    auto rng = derive_stream(1, "proj", 0);
    for (int k = 0; k < 1000; ++k)
    {
      const auto ball = BallSpec{random_vector(d, rng), rng.uniform()};
      const ParamVec x = 3 * random_vector(d, rng);
      const auto p = project_ball(x, ball);
      idempotent = idempotent && project_ball(p, ball) == p &&
                   (p - ball.center).norm() <= ball.radius;
    }
    out.require(idempotent, "projection idempotence");

    double block_gap = 0;
    for (int k = 0; k < 1000; ++k)
    {
      const auto oracle = MissingOracle<>{random_vector(d, rng), 1.0, 0.3};
      const auto s = missing_sample(oracle, 1, rng).sample(0);
      const auto theta = random_vector(d, rng);
      const auto a = impute_moments(theta, s, 1.0);
      const auto b = test::block_form(theta, s, 1.0);
      block_gap = std::max({block_gap,
                            (a.mu - b.mu).norm() / std::max(1.0, b.mu.norm()),
                            (a.sigma_mat - b.sigma_mat).norm() /
                                std::max(1.0, b.sigma_mat.norm())});
    }
    out.require(block_gap <= 1e-12, "mask vs block form");

    out.detail << "em-vs-grad " << fmt(em_vs_grad) << ", ols " << fmt(ols_gap)
               << ", stationarity " << fmt(stat) << ", ascent violation "
               << fmt(ascent) << ", block-form " << fmt(block_gap);
  }


  // 2. Gradients against central differences.

  template <typename Model>
  auto max_fd_error(const Model& model, const std::string& label) -> double
  {
    double worst = 0;
    auto rng = derive_stream(2, label, 0);
    for (int k = 0; k < 100; ++k)
    {
      const auto data = model.sample(50, rng);
      const auto theta = random_vector(model.dim(), rng);
      const auto tp = random_vector(model.dim(), rng);
      const auto g = model.q_grad(data, tp, theta);
      const auto fd = test::central_difference(
          [&](const ParamVec& v) { return model.q_value(data, v, theta); }, tp);
      worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
    }
    return worst;
  }

  auto criterion_gradients(Outcome& out) -> void
  {
    const Index d = 10;
    const auto g = max_fd_error(GmmModel{{theta_star(d, 2), 1.0}}, "fd-gmm");
    const auto m = max_fd_error(MorModel{{theta_star(d, 2), 1.0}}, "fd-mor");
    const auto i = max_fd_error(MissingModel{{theta_star(d, 2), 1.0, 0.2}}, "fd-mis");
    out.require(std::max({g, m, i}) <= 1e-6, "relative error");
    out.detail << "max relative error gmm " << fmt(g) << ", mor " << fmt(m)
               << ", missing " << fmt(i);
  }


  // 3. Self-consistency.

  template <typename Model>
  auto self_consistency(Outcome& out, const Model& model, const char* name)
      -> void
  {
    const auto r = pop_operator(model, model.theta_star(), OperatorSpec::em(),
                                1000000, derive_stream(3, name, 0));
    const auto dev = (r.estimate - model.theta_star()).norm();
    out.require(dev <= 5 * r.stderr, name);
    out.detail << name << " " << fmt(dev) << " <= 5*" << fmt(r.stderr) << "; ";
  }

  auto criterion_self_consistency(Outcome& out) -> void
  {
    const Index d = 10;
    self_consistency(out, GmmModel{{theta_star(d, 2), 1.0}}, "gmm");
    self_consistency(out, MorModel{{theta_star(d, 2), 1.0}}, "mor");
    self_consistency(out, MissingModel{{theta_star(d, 2), 1.0, 0.2}}, "missing");
  }


  // 4. Population contraction.

  template <typename Model>
  auto consistency(Outcome& out, const Model& model, const ProbeSpec& spec,
                   const ProbeMax& kappa, const char* name) -> void
  {
    const auto fos = estimate_fos_gamma(model, spec);
    const auto lambda = estimate_concavity(model, spec).lambda;
    const auto bound = fos.value / lambda;
    const auto slack = 5 * std::hypot(kappa.stderr, fos.stderr / lambda);
    out.require(kappa.value <= bound + slack,
                std::string{name} + " kappa <= gamma/lambda");
    out.detail << "; gamma_fos/lambda " << fmt(bound);
  }

  auto criterion_contraction(Outcome& out) -> void
  {
    const Index d = 10;
    {
      const auto model = GmmModel{{theta_star(d, 2), 1.0}};
      const auto spec = probe(0.5, 50, 100000, "c4-gmm");
      const auto k = estimate_contraction(model, spec);
      out.require(k.value < 1, "gmm kappa < 1");
      out.detail << "gmm kappa " << fmt(k.value);
      consistency(out, model, spec, k, "gmm");
    }
    {
      const auto model = MorModel{{theta_star(d, 10), 1.0}};
      const auto spec = probe(10.0 / 32, 50, 100000, "c4-mor");
      const auto k = estimate_contraction(model, spec);
      out.require(k.value <= 0.5 + 3 * k.stderr, "mor kappa <= 1/2");
      out.detail << "; mor kappa " << fmt(k.value) << " (se " << fmt(k.stderr)
                 << ")";
      consistency(out, model, spec, k, "mor");
    }
    {
      const auto zeta1 = 0.5, zeta2 = 0.4, omega = 0.2;
      const auto bound = missing_prob_bound(zeta1, zeta2, omega);
      out.require(omega < bound.omega_max, "omega below the bound");
      const auto model = MissingModel{{theta_star(d, zeta1), 1.0, omega}};
      const auto spec = probe(zeta2, 50, 100000, "c4-mis");
      const auto k = estimate_contraction(model, spec);
      out.require(k.value < 1, "missing kappa < 1");
      out.detail << "; missing (omega " << omega << " < " << fmt(bound.omega_max)
                 << ") kappa " << fmt(k.value);
      consistency(out, model, spec, k, "missing");
    }
  }


  // 5. Geometric convergence of EM on the mixture.

  auto figure_spec(const std::string& name) -> ExperimentSpec
  {
    auto spec = ExperimentSpec{};
    spec.output_dir = work_dir(name);
    spec.svg = false;
    return spec;
  }

  auto criterion_figure2(Outcome& out) -> void
  {
    const auto spec = figure_spec("fig2");
    const auto r = run_experiment(spec);
    double worst_final = 0, worst_kappa = 0, worst_plateau = 0;
    for (const auto& o : r.trials)
    {
      if (!o.trace || !o.summary.kappa_fit || !o.summary.plateau)
      {
        out.require(false, "trial " + std::to_string(o.trial) + " incomplete");
        continue;
      }
      const auto opt = o.trace->opt_errors();
      worst_final = std::max(worst_final, *std::min_element(opt.begin(), opt.end()));
      worst_kappa = std::max(worst_kappa, *o.summary.kappa_fit);
      worst_plateau = std::max(worst_plateau, *o.summary.plateau);
    }
    out.require(r.trials.size() == 10, "10 trials");
    out.require(worst_final <= 1e-8, "opt error reaches 1e-8");
    out.require(worst_kappa < 0.7, "kappa_fit < 0.7");
    out.require(worst_plateau <= 10 * std::sqrt(10.0 / 1000), "plateau");
    out.detail << "worst min opt error " << fmt(worst_final)
               << ", worst kappa_fit " << fmt(worst_kappa)
               << ", worst plateau " << fmt(worst_plateau);
  }


  // 6. Statistical error scales like sqrt(d / n).

  auto median_plateau(Index n) -> double
  {
    auto spec = figure_spec("fig2-n" + std::to_string(n));
    spec.n = n;
    auto plateaus = std::vector<double>{};
    for (const auto& o : run_experiment(spec).trials)
      if (o.summary.plateau)
        plateaus.push_back(*o.summary.plateau);
    return median(plateaus);
  }

  auto criterion_rate(Outcome& out) -> void
  {
    const auto p1 = median_plateau(1000);
    const auto p4 = median_plateau(4000);
    const auto ratio = p4 / p1;
    out.require(ratio >= 0.35 && ratio <= 0.75, "ratio in [0.35, 0.75]");
    out.detail << "median plateau n=1000 " << fmt(p1) << ", n=4000 " << fmt(p4)
               << ", ratio " << fmt(ratio);
  }


  // 7. Rate improves with SNR.

  auto criterion_snr(Outcome& out) -> void
  {
    const auto spec = figure_spec("fig4");
    const auto rows = run_snr_sweep(spec, {1.5, 2, 3, 5});
    for (std::size_t k = 0; k < rows.size(); ++k)
    {
      out.detail << (k ? ", " : "") << "snr " << rows[k].snr << ": "
                 << fmt(rows[k].kappa_fit_mean);
      if (k > 0)
        out.require(rows[k].kappa_fit_mean < rows[k - 1].kappa_fit_mean,
                    "decrease at snr " + fmt(rows[k].snr));
    }
  }


  // 8. Radius of convergence.

  auto criterion_roc(Outcome& out) -> void
  {
    const auto grid = std::vector<double>{1, 2, 4, 8};
    for (const auto model : {ModelKind::gmm, ModelKind::mor, ModelKind::missing})
    {
      auto spec = figure_spec("fig5-" + to_string(model));
      spec.model = model;
      const auto r = run_roc(spec, grid);
      out.detail << to_string(model) << " radius_hat";
      for (const auto& x : r)
        out.detail << ' ' << fmt(x.radius_hat);
      out.detail << "; ";
      if (model == ModelKind::missing)
        out.require(r[3].radius_hat < r[1].radius_hat,
                    "missing radius at 8 below radius at 2");
      else
        for (std::size_t k = 1; k < r.size(); ++k)
          out.require(r[k].radius_hat >= r[k - 1].radius_hat,
                      to_string(model) + " nondecreasing");
    }
  }


  // 9. Stochastic gradient EM decays like 1 / sqrt(t).

  auto criterion_sgd(Outcome& out) -> void
  {
    for (const auto model : {ModelKind::mor, ModelKind::missing})
    {
      auto spec = figure_spec("fig6-" + to_string(model));
      spec.model = model;
      spec.algo = Algorithm::sgd;
      spec.iters = 10000;
      spec.init_distance = spec.sigma;
      const auto rows = run_sgd_experiment(spec);
      auto slopes = std::vector<double>{};
      double excess = -HUGE_VAL;
      for (const auto& s : rows)
      {
        slopes.push_back(s.loglog_slope);
        excess = std::max(excess, s.max_ball_excess);
      }
      const auto m = median(slopes);
      out.require(m >= -0.8 && m <= -0.3, to_string(model) + " slope");
      out.require(excess <= 0, to_string(model) + " iterates in ball");
      out.detail << to_string(model) << " median slope " << fmt(m)
                 << ", max excess over r/2 " << fmt(excess) << "; ";
    }
  }


  // 10. Uniform deviation scaling.

  auto criterion_deviation(Outcome& out) -> void
  {
    const auto model = GmmModel{{theta_star(10, 2), 1.0}};
    const auto spec = probe(0.5, 20, 400000, "c10");
    const auto d1 = estimate_deviation(model, 1000, spec, 5);
    const auto d4 = estimate_deviation(model, 4000, spec, 5);
    const auto ratio = d4.max_dev / d1.max_dev;
    out.require(ratio >= 0.3 && ratio <= 0.8, "ratio in [0.3, 0.8]");
    out.detail << "max_dev n=1000 " << fmt(d1.max_dev) << ", n=4000 "
               << fmt(d4.max_dev) << ", ratio " << fmt(ratio);
  }


  // 11. Strong concavity and smoothness.

  template <typename Model>
  auto concavity(Outcome& out, const Model& model, const char* name) -> void
  {
    const auto c = estimate_concavity(model, probe(0.5, 1, 100000,
                                                   std::string{"c11-"} + name));
    const auto ok = std::abs(c.lambda - 1) <= 5 * c.stderr &&
                    std::abs(c.mu - 1) <= 5 * c.stderr;
    out.require(ok, name);
    out.detail << name << " (" << fmt(c.lambda) << ", " << fmt(c.mu)
               << ") se " << fmt(c.stderr) << "; ";
  }

  auto criterion_concavity(Outcome& out) -> void
  {
    const auto spec = ExperimentSpec{};
    const auto ts = theta_star(spec.d, spec.snr * spec.sigma);
    concavity(out, GmmModel{{ts, spec.sigma}}, "gmm");
    concavity(out, MorModel{{ts, spec.sigma}}, "mor");
    concavity(out, MissingModel{{ts, spec.sigma, spec.omega}}, "missing");
  }


  // 12. CLI determinism.

  auto slurp(const fs::path& p) -> std::string
  {
    auto in = std::ifstream{p, std::ios::binary};
    auto ss = std::ostringstream{};
    ss << in.rdbuf();
    return ss.str();
  }

  auto criterion_determinism(Outcome& out) -> void
  {
    const auto dir = work_dir("cli");
    const auto cli = std::string{EMCONV_CLI};
    const auto commands = std::vector<std::pair<std::string, std::string>>{
        {"run", "run --trials 3"},
        {"run-grad", "run --algo grad --model mor --trials 2"},
        {"snr", "snr-sweep --trials 3 --snr-grid 1.5,2,3"},
        {"roc", "roc --model gmm --theta-norm-grid 1,2 --inits-per-radius 10"},
        {"sgd", "sgd --model mor --iters 2000 --trials 2 --init-dist 1"},
        {"conditions", "conditions --model missing --probes 10 --mc-n 20000"},
        {"plot", ""}};
    std::size_t files = 0;
    for (const auto& [name, args] : commands)
      for (const auto* rep : {"a", "b"})
      {
        const auto target = dir / (name + "_" + rep);
        auto cmd = std::string{};
        if (name == "plot")
        {
          fs::create_directories(target);
          cmd = "'" + cli + "' plot --csv '" + (dir / "run_a" / "trace.csv").string() +
                "' --x iter --y opt_error --group trial --log-y --out '" +
                (target / "opt.svg").string() + "'";
        }
        else
          cmd = "'" + cli + "' " + args + " --out '" + target.string() + "'";
        cmd += " > /dev/null 2>&1";
        const auto rc = std::system(cmd.c_str());
        out.require(rc == 0, name + " exit status");
      }
    for (const auto& [name, args] : commands)
    {
      const auto a = dir / (name + "_a");
      const auto b = dir / (name + "_b");
      auto count = 0;
      for (const auto& entry : fs::directory_iterator{a})
      {
        const auto ext = entry.path().extension();
        if (ext != ".csv" && ext != ".svg")
          continue;
        ++count;
        out.require(slurp(entry.path()) == slurp(b / entry.path().filename()),
                    name + "/" + entry.path().filename().string());
      }
      out.require(count > 0, name + " produced files");
      files += std::size_t(count);
    }
    out.detail << files << " CSV/SVG files compared across 7 command pairs";
  }

}  // namespace


int main()
{
  const auto criteria =
      std::vector<std::pair<std::string, std::function<void(Outcome&)>>>{
          {"exact identities", criterion_identities},
          {"gradient correctness", criterion_gradients},
          {"self-consistency", criterion_self_consistency},
          {"population contraction", criterion_contraction},
          {"geometric convergence (gmm, em)", criterion_figure2},
          {"statistical rate scaling", criterion_rate},
          {"rate decreasing in snr", criterion_snr},
          {"radius of convergence", criterion_roc},
          {"stochastic gradient EM rate", criterion_sgd},
          {"deviation scaling", criterion_deviation},
          {"concavity and smoothness", criterion_concavity},
          {"cli determinism", criterion_determinism}};

  auto failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k)
  {
    auto out = Outcome{};
    const auto start = std::chrono::steady_clock::now();
    try
    {
      criteria[k].second(out);
    }
    catch (const std::exception& e)
    {
      out.require(false, std::string{"exception: "} + e.what());
    }
    const auto secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    failures += out.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), out.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
