#include "test_util.hpp"

#include <emconv/gmm.hpp>
#include <emconv/population.hpp>

#include <doctest.h>

#include <cmath>


using namespace emconv;
using emconv::test::random_vector;


TEST_CASE("gmm_sample: degenerate noise puts samples on +-theta*")
{
  auto rng = derive_stream(1, "gmm", 0);
  const auto oracle = GmmOracle<>{random_vector(4, rng), 1e-12};
  const auto data = gmm_sample(oracle, 200, rng);
  for (Index i = 0; i < data.size(); ++i)
  {
    const auto plus = (data.y.row(i).transpose() - oracle.theta_star).norm();
    const auto minus = (data.y.row(i).transpose() + oracle.theta_star).norm();
    REQUIRE(std::min(plus, minus) <= 1e-6);
  }
}

TEST_CASE("gmm_sample: moments")
{
  auto rng = derive_stream(1, "gmm", 1);
  const Index d = 5, n = 100000;
  {
    const auto data = gmm_sample(GmmOracle<>{ParamVec::Zero(d), 1.0}, n, rng);
    const ParamVec mean = data.y.colwise().mean().transpose();
    CHECK(mean.norm() <= 4 * std::sqrt(double(d) / n));
  }
  const auto oracle = GmmOracle<>{random_vector(d, rng), 1.5};
  const auto data = gmm_sample(oracle, n, rng);
  for (Index j = 0; j < d; ++j)
  {
    const auto second = data.y.col(j).squaredNorm() / n;
    const auto expect = oracle.theta_star(j) * oracle.theta_star(j) +
                        oracle.sigma * oracle.sigma;
    CHECK(std::abs(second - expect) <= 0.05 * expect);
  }
}

TEST_CASE("gmm_weight")
{
  auto rng = derive_stream(1, "gmm", 2);
  const auto theta = random_vector(3, rng);
  const auto y = random_vector(3, rng);
  CHECK(gmm_weight(theta, ParamVec::Zero(3), 1.0) == 0.5);
  CHECK(gmm_weight(ParamVec::Zero(3), y, 1.0) == 0.5);
  const auto one = ParamVec::Ones(1);
  CHECK(gmm_weight(one, one, 1.0) == doctest::Approx(0.8807971).epsilon(1e-7));

  // Stable far in the tails, monotone in <theta, y>.
  CHECK(gmm_weight(ParamVec::Constant(1, 1e3), one, 1e-3) == 1.0);
  CHECK(gmm_weight(ParamVec::Constant(1, -1e3), one, 1e-3) == 0.0);
  auto prev = 0.0;
  for (int k = -50; k <= 50; ++k)
  {
    const auto w = gmm_weight(ParamVec::Constant(1, 0.1 * k), one, 1.0);
    REQUIRE(w >= prev);
    prev = w;
  }
}

TEST_CASE("gmm_q_value: closed forms")
{
  auto rng = derive_stream(1, "gmm", 3);
  const auto theta = random_vector(3, rng);
  const auto y = random_vector(3, rng);
  const auto single = GmmData<>{y.transpose()};
  CHECK(gmm_q_value(single, ParamVec(ParamVec::Zero(3)), theta, 1.0) ==
        doctest::Approx(-y.squaredNorm() / 2));

  const auto data = gmm_sample(GmmOracle<>{theta, 1.0}, 50, rng);
  CHECK(gmm_q_value(data, ParamVec(ParamVec::Zero(3)), ParamVec(ParamVec::Zero(3)), 1.0) ==
        doctest::Approx(-data.y.squaredNorm() / 100));

  // Agrees with the weighted-squares definition.
  const auto tp = random_vector(3, rng);
  double direct = 0;
  for (Index i = 0; i < data.size(); ++i)
  {
    const ParamVec yi = data.y.row(i).transpose();
    const auto w = gmm_weight(theta, yi, 1.0);
    direct += w * (yi - tp).squaredNorm() + (1 - w) * (yi + tp).squaredNorm();
  }
  direct /= -2.0 * double(data.size());
  CHECK(gmm_q_value(data, tp, theta, 1.0) == doctest::Approx(direct).epsilon(1e-12));

  CHECK_THROWS_AS(gmm_q_value(GmmData<>{MatrixXd(0, 3)}, tp, theta, 1.0),
                  EmptyData);
}

TEST_CASE("gmm: M-step maximizes Q on a 1-d grid")
{
  auto rng = derive_stream(1, "gmm", 4);
  const auto oracle = GmmOracle<>{ParamVec::Constant(1, 1.3), 1.0};
  const auto data = gmm_sample(oracle, 300, rng);
  const auto theta = ParamVec::Constant(1, 0.7);
  const auto m = gmm_m_step(data, ParamVec(theta), 1.0);
  auto best = -HUGE_VAL;
  auto best_t = 0.0;
  constexpr double h = 1e-4;
  for (int k = -40000; k <= 40000; ++k)
  {
    const auto tp = ParamVec::Constant(1, k * h);
    const auto q = gmm_q_value(data, ParamVec(tp), ParamVec(theta), 1.0);
    if (q > best)
    {
      best = q;
      best_t = k * h;
    }
  }
  CHECK(std::abs(best_t - m(0)) <= h);
}

TEST_CASE("gmm_q_grad: stationarity, zero weights, finite differences")
{
  auto rng = derive_stream(1, "gmm", 5);
  for (int k = 0; k < 20; ++k)
  {
    const Index d = 1 + k % 6;
    const auto oracle = GmmOracle<>{random_vector(d, rng), 0.5 + rng.uniform()};
    const auto data = gmm_sample(oracle, 40, rng);
    const auto theta = random_vector(d, rng);
    const auto tp = random_vector(d, rng);
    const auto m = gmm_m_step(data, theta, oracle.sigma);
    REQUIRE(gmm_q_grad(data, m, theta, oracle.sigma).norm() <= 1e-12);
    REQUIRE((gmm_q_grad(data, tp, ParamVec(ParamVec::Zero(d)), oracle.sigma) + tp)
                .norm() <= 1e-12);

    const auto g = gmm_q_grad(data, tp, theta, oracle.sigma);
    const auto fd = test::central_difference(
        [&](const ParamVec& v) {
          return gmm_q_value(data, v, theta, oracle.sigma);
        },
        tp);
    REQUIRE((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));

    const auto per = gmm_per_sample_grad(data, tp, theta, oracle.sigma);
    REQUIRE((ParamVec(per.colwise().mean().transpose()) - g).norm() <= 1e-12);
  }
}

TEST_CASE("gmm_m_step: symmetry, zero fixed point, ascent, grad identity")
{
  auto rng = derive_stream(1, "gmm", 6);
  const Index d = 6;
  const auto oracle = GmmOracle<>{random_vector(d, rng), 1.0};
  const auto data = gmm_sample(oracle, 500, rng);
  CHECK(gmm_m_step(data, ParamVec(ParamVec::Zero(d)), 1.0) == ParamVec::Zero(d));
  for (int k = 0; k < 20; ++k)
  {
    const auto theta = random_vector(d, rng);
    const auto m = gmm_m_step(data, theta, 1.0);
    REQUIRE(gmm_m_step(data, ParamVec(-theta), 1.0) == -m);
    REQUIRE(gmm_q_value(data, m, theta, 1.0) >=
            gmm_q_value(data, theta, theta, 1.0));
    const ParamVec g = theta + gmm_q_grad(data, theta, theta, 1.0);
    REQUIRE((g - m).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("gmm_m_step: hard-assignment limit")
{
  auto rng = derive_stream(1, "gmm", 7);
  const Index d = 4;
  const auto oracle = GmmOracle<>{ParamVec::Ones(d), 1e-12};
  const auto data = gmm_sample(oracle, 100, rng);
  const auto m = gmm_m_step(data, oracle.theta_star, oracle.sigma);
  ParamVec corrected = ParamVec::Zero(d);
  for (Index i = 0; i < data.size(); ++i)
  {
    const ParamVec yi = data.y.row(i).transpose();
    corrected += yi.dot(oracle.theta_star) >= 0 ? yi : ParamVec(-yi);
  }
  corrected /= double(data.size());
  CHECK((m - corrected).norm() <= 1e-3);
}

TEST_CASE("gmm_m_step: self-consistency at n = 1e6")
{
  const Index d = 10;
  const auto model = GmmModel{{ParamVec::Constant(d, 2 / std::sqrt(10.0)), 1.0}};
  const auto r = pop_operator(model, model.theta_star(), OperatorSpec::em(),
                              1000000, derive_stream(1, "gmm", 8));
  CHECK((r.estimate - model.theta_star()).norm() <= 5 * r.stderr);
}
