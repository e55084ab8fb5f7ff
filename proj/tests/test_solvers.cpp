#include "test_util.hpp"

#include <emconv/missing.hpp>
#include <emconv/mor.hpp>
#include <emconv/population.hpp>
#include <emconv/solvers.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>


using namespace emconv;
using emconv::test::random_vector;

namespace {

  auto gmm(Index d = 10, double snr = 2) -> GmmModel
  {
    return {{ParamVec::Constant(d, snr / std::sqrt(double(d))), 1.0}};
  }

  auto near(const ParamVec& c, double r, RngStream& rng) -> ParamVec
  {
    return c + r * random_unit_vector(c.size(), rng);
  }

  template <typename Model>
  auto check_ascent(const Model& model, const typename Model::Data& data,
                    const Trace& trace) -> void
  {
    for (std::size_t t = 0; t + 1 < trace.size(); ++t)
    {
      const auto& th = trace.records[t].theta;
      const auto before = model.q_value(data, th, th);
      const auto after = model.q_value(data, trace.records[t + 1].theta, th);
      REQUIRE(after >= before - 1e-9 * std::abs(before));
    }
  }

}  // namespace


TEST_CASE("run_em: T = 0 returns theta0")
{
  auto rng = derive_stream(4, "solve", 0);
  const auto model = gmm();
  const auto data = model.sample(100, rng);
  const auto theta0 = random_vector(10, rng);
  const auto r = run_em(model, data, theta0, 0);
  CHECK(r.trace.size() == 1);
  CHECK(r.final_theta == theta0);
  CHECK(r.trace.records[0].stat_error == (theta0 - model.theta_star()).norm());
}

TEST_CASE("gmm: EM and gradient EM with alpha = 1 coincide")
{
  auto rng = derive_stream(4, "solve", 1);
  const auto model = gmm();
  const auto data = model.sample(1000, rng);
  const auto theta0 = near(model.theta_star(), 0.5, rng);
  const auto em = run_em(model, data, theta0, 30);
  const auto gr = run_grad_em(model, data, theta0, StepSchedule::constant(1), 30);
  REQUIRE(em.trace.size() == gr.trace.size());
  for (std::size_t t = 0; t < em.trace.size(); ++t)
    REQUIRE((em.trace.records[t].theta - gr.trace.records[t].theta).cwiseAbs().maxCoeff() <=
            1e-12);

  const auto es = run_em_split(model, data, theta0, 10);
  const auto gs =
      run_grad_em_split(model, data, theta0, StepSchedule::constant(1), 10);
  for (std::size_t t = 0; t < es.trace.size(); ++t)
    REQUIRE((es.trace.records[t].theta - gs.trace.records[t].theta).cwiseAbs().maxCoeff() <=
            1e-12);
}

TEST_CASE("EM traces satisfy the ascent condition")
{
  auto rng = derive_stream(4, "solve", 2);
  {
    const auto model = gmm();
    const auto data = model.sample(1000, rng);
    check_ascent(model, data,
                 run_em(model, data, near(model.theta_star(), 1, rng), 30).trace);
  }
  {
    const auto model = MorModel{{ParamVec::Constant(10, 2 / std::sqrt(10.0)), 1.0}};
    const auto data = model.sample(1000, rng);
    check_ascent(model, data,
                 run_em(model, data, near(model.theta_star(), 0.3, rng), 30).trace);
  }
  {
    const auto model = MissingModel{
        {ParamVec::Constant(10, 1 / std::sqrt(10.0)), 1.0, 0.2}};
    const auto data = model.sample(1000, rng);
    check_ascent(model, data,
                 run_em(model, data, near(model.theta_star(), 0.5, rng), 30).trace);
  }
}

TEST_CASE("run_em_split: T = 1 and the partition contract")
{
  auto rng = derive_stream(4, "solve", 3);
  const auto model = gmm(3);
  const auto data = model.sample(103, rng);
  const auto theta0 = random_vector(3, rng);
  CHECK(run_em_split(model, data, theta0, 1).final_theta ==
        run_em(model, data, theta0, 1).final_theta);
  CHECK(run_grad_em_split(model, data, theta0, StepSchedule::constant(0.5), 1)
            .final_theta ==
        run_grad_em(model, data, theta0, StepSchedule::constant(0.5), 1)
            .final_theta);

  // Iteration t equals one M-step on rows [t * 10, t * 10 + 10).
  const auto r = run_em_split(model, data, theta0, 10);
  for (int t = 0; t < 10; ++t)
  {
    const auto batch = GmmModel::slice(data, t * 10, 10);
    REQUIRE(r.trace.records[t + 1].theta == model.m_step(batch, r.trace.records[t].theta));
  }
}

TEST_CASE("split solvers reject batches that are too small")
{
  auto rng = derive_stream(4, "solve", 4);
  const auto model = MorModel{{ParamVec::Ones(5), 1.0}};
  const auto data = model.sample(40, rng);
  CHECK_THROWS_AS(run_em_split(model, data, ParamVec::Ones(5), 10), BatchTooSmall);
  CHECK_NOTHROW(run_em_split(model, data, ParamVec::Ones(5), 8));
  CHECK_NOTHROW(
      run_grad_em_split(model, data, ParamVec::Ones(5), StepSchedule::constant(1), 40));
  CHECK_THROWS_AS(
      run_grad_em_split(model, data, ParamVec::Ones(5), StepSchedule::constant(1), 41),
      BatchTooSmall);
}

TEST_CASE("run_grad_em: tiny step moves proportionally")
{
  auto rng = derive_stream(4, "solve", 5);
  const auto model = gmm(4);
  const auto data = model.sample(100, rng);
  const auto theta0 = random_vector(4, rng);
  const auto g = model.q_grad(data, theta0, theta0);
  const auto r = run_grad_em(model, data, theta0, StepSchedule::constant(1e-9), 1);
  CHECK((r.final_theta - theta0).norm() <= 1e-9 * g.norm() * (1 + 1e-6));
}

TEST_CASE("split EM stays within a small factor of full EM")
{
  const auto model = gmm();
  auto ratios = std::vector<double>{};
  for (int k = 0; k < 21; ++k)
  {
    auto rng = derive_stream(4, "split", k);
    const auto data = model.sample(1000, rng);
    const auto theta0 = near(model.theta_star(), 0.5, rng);
    const auto full = run_em(model, data, theta0, 10);
    const auto split = run_em_split(model, data, theta0, 10);
    ratios.push_back(split.trace.back().stat_error / full.trace.back().stat_error);
  }
  std::sort(ratios.begin(), ratios.end());
  MESSAGE("median split/full ratio " << ratios[10]);
  CHECK(ratios[10] <= 3);
}

TEST_CASE("run_sgd_em: projection ball and determinism")
{
  const auto model = MorModel{{ParamVec::Constant(10, 2 / std::sqrt(10.0)), 1.0}};
  auto rng = derive_stream(4, "solve", 7);
  const auto theta0 = near(model.theta_star(), 1, rng);
  const auto radius = 0.5;
  const auto a = run_sgd_em(model, theta0, radius,
                            StepSchedule::decaying(1.5, 1), 2000,
                            derive_stream(4, "sgd", 0));
  for (const auto& rec : a.trace.records)
    REQUIRE((rec.theta - theta0).norm() <= radius / 2);
  const auto b = run_sgd_em(model, theta0, radius,
                            StepSchedule::decaying(1.5, 1), 2000,
                            derive_stream(4, "sgd", 0));
  CHECK(a.final_theta == b.final_theta);
  CHECK(a.trace.size() == 2001);
}

TEST_CASE("gradient EM: smaller steps contract less")
{
  const auto model = gmm(10);
  auto rng = derive_stream(4, "solve", 8);
  const auto data = model.sample(100000, rng);
  const auto theta = near(model.theta_star(), 0.5, rng);
  const auto small = contraction_ratio_at(model, data, theta,
                                          OperatorSpec::grad_em(0.3));
  const auto big = contraction_ratio_at(model, data, theta,
                                        OperatorSpec::grad_em(0.9));
  CHECK(small.value >= big.value - 3 * std::hypot(small.stderr, big.stderr));
}

TEST_CASE("run_solver dispatch")
{
  auto rng = derive_stream(4, "solve", 9);
  const auto model = gmm(3);
  const auto data = model.sample(60, rng);
  const auto theta0 = random_vector(3, rng);
  auto config = SolverConfig{Algorithm::em_split, 6, {}, {}, 6};
  CHECK(run_solver(model, data, theta0, config, rng).final_theta ==
        run_em_split(model, data, theta0, 6).final_theta);
  config = SolverConfig{Algorithm::grad, 4, {}, {}, {}};
  CHECK_THROWS_AS(run_solver(model, data, theta0, config, rng), InvalidConfig);
}
