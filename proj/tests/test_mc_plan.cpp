#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bayesics/dist.hpp"
#include "bayesics/error.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/stats.hpp"

using namespace bayesics;

// Frozen from direct evaluation of the sample-size formulas with
// z = Phi^-1(0.975) = 1.959963985 and phi(-1.96) = 0.0584409443.
TEST_CASE("quantile sample size formula") {
  CHECK(quantile_sample_size(0.025, 0.95, 0.1, 0.058440) == 2742);
  CHECK(quantile_sample_size(0.025, 0.95, 0.1, norm_pdf(-1.96)) == 2742);

  // doubling epsilon quarters L (before ceiling)
  const double l1 = quantile_sample_size_real(0.025, 0.95, 0.1, 0.058440);
  const double l2 = quantile_sample_size_real(0.025, 0.95, 0.2, 0.058440);
  CHECK(l1 / l2 == doctest::Approx(4.0).epsilon(1e-12));

  // 99% CI tail with density phi(-2.5758) = 0.0144597
  CHECK(quantile_sample_size(0.005, 0.95, 0.1, 0.014460) == 9141);
  CHECK(quantile_sample_size(0.005, 0.95, 0.1, norm_pdf(norm_quantile(0.005))) == 9141);

  CHECK_THROWS_AS(quantile_sample_size(0.025, 0.95, 0.1, 0.0), NumericalError);
  CHECK_THROWS_AS(quantile_sample_size(0.6, 0.95, 0.1, 0.05), UserError);
}

TEST_CASE("mean sample size formula") {
  CHECK(mean_sample_size(1.0, 0.95, 0.1) == 385);
  CHECK(mean_sample_size(1.0, 0.95, 0.01) == 38415);
  const double m1 = mean_sample_size_real(1.0, 0.95, 0.1);
  const double m4 = mean_sample_size_real(4.0, 0.95, 0.1);
  CHECK(m4 / m1 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(mean_sample_size(-1.0, 0.95, 0.1), UserError);
}

TEST_CASE("sample size ratio") {
  const double d95 = norm_pdf(norm_quantile(0.025));
  CHECK(sample_size_ratio(0.05, 1.0, d95) == doctest::Approx(7.1359).epsilon(2e-4));
  const double d99 = norm_pdf(norm_quantile(0.005));
  CHECK(sample_size_ratio(0.01, 1.0, d99) == doctest::Approx(23.794).epsilon(2e-4));

  // the ratio is free of epsilon and s by construction; check the identity
  // ratio * M_real == L_real for several (eps, s) pairs instead
  for (double eps : {0.05, 0.2}) {
    for (double s : {0.9, 0.99}) {
      const double L = quantile_sample_size_real(0.025, s, eps, d95);
      const double M = mean_sample_size_real(1.0, s, eps);
      const double r = sample_size_ratio(0.05, 1.0, d95);
      CHECK(std::fabs(r * M - L) < 1e-6 * L);
    }
  }
}

TEST_CASE("monotonicity of L in epsilon, s, density") {
  const double base = quantile_sample_size_real(0.025, 0.95, 0.1, 0.06);
  CHECK(quantile_sample_size_real(0.025, 0.95, 0.12, 0.06) < base);
  CHECK(quantile_sample_size_real(0.025, 0.97, 0.1, 0.06) > base);
  CHECK(quantile_sample_size_real(0.025, 0.95, 0.1, 0.08) < base);
}

TEST_CASE("density at quantile against known densities") {
  RngStream s(3, 0);
  std::vector<double> z(100000);
  for (auto& v : z) v = s.normal();
  CHECK(std::fabs(estimate_density_at_quantile(z, 0.025) - 0.0584) < 0.005);

  std::vector<double> u(100000);
  for (auto& v : u) v = s.uniform();
  CHECK(std::fabs(estimate_density_at_quantile(u, 0.5) - 1.0) < 0.05);

  std::vector<double> constant(500, 3.0);
  CHECK_THROWS(estimate_density_at_quantile(constant, 0.5));
  std::vector<double> few(50, 0.0);
  CHECK_THROWS_AS(estimate_density_at_quantile(few, 0.5), UserError);
}

namespace {
DrawBlockFn normal_generator(double mu = 0.0, double sd = 1.0) {
  return [mu, sd](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c)
        block(r, c) = mu + sd * rng.normal();
  };
}
}  // namespace

TEST_CASE("adaptive sampler plans the dominating bound") {
  PrecisionTarget t;
  t.epsilon = 0.1;
  const RngStream stream(17, 0);
  const auto res = run_adaptive_sampler(normal_generator(), t, 1, stream);
  // quantile bound dominates: roughly 2742 given the exact density
  CHECK(res.total() >= 2000);
  CHECK(res.total() <= 3800);
  CHECK(res.plans[0].total_draws == res.total());
  CHECK(res.plans[0].L_lower > res.plans[0].M);

  // huge epsilon: the pilot suffices
  PrecisionTarget loose;
  loose.epsilon = 1000.0;
  const auto res2 = run_adaptive_sampler(normal_generator(), loose, 1, stream);
  CHECK(res2.total() == 500);

  // two estimands: total is the max of the per-estimand plans
  auto two = [](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      block(r, 0) = rng.normal();
      block(r, 1) = 5.0 * rng.normal();  // wider tail density is lower
    }
  };
  const auto res3 = run_adaptive_sampler(two, t, 2, stream);
  CHECK(res3.total() ==
        std::max(res3.plans[0].total_draws, res3.plans[1].total_draws));
  CHECK(res3.plans[1].total_draws > res3.plans[0].total_draws);
}

TEST_CASE("adaptive sampler is deterministic given the stream") {
  PrecisionTarget t;
  t.epsilon = 0.25;
  const RngStream stream(99, 4);
  const auto a = run_adaptive_sampler(normal_generator(), t, 1, stream);
  const auto b = run_adaptive_sampler(normal_generator(), t, 1, stream);
  REQUIRE(a.total() == b.total());
  CHECK(a.draws == b.draws);
}

TEST_CASE("hard cap trips with a helpful error") {
  PrecisionTarget t;
  t.epsilon = 1e-5;
  t.hard_cap = 100000;
  const RngStream stream(3, 0);
  CHECK_THROWS_AS(run_adaptive_sampler(normal_generator(), t, 1, stream),
                  NumericalError);
}

TEST_CASE("auto epsilon is scale free") {
  PrecisionTarget t;  // epsilon <= 0: auto 0.02 sd
  const RngStream stream(55, 0);
  const auto narrow = run_adaptive_sampler(normal_generator(0, 1), t, 1, stream);
  const auto wide = run_adaptive_sampler(normal_generator(0, 100), t, 1, stream);
  const double rel = static_cast<double>(wide.total()) / narrow.total();
  CHECK(rel > 0.8);
  CHECK(rel < 1.25);
}

// Planner coverage: the empirical alpha/2 quantile of the returned draws
// lands within +-epsilon of the true quantile in at least s - 0.03 of runs.
TEST_CASE("coverage of the planned quantile estimate") {
  PrecisionTarget t;
  t.epsilon = 0.1;
  const double true_q = norm_quantile(0.025);
  int hits = 0;
  const int runs = 500;
  for (int rep = 0; rep < runs; ++rep) {
    const RngStream stream(1000 + rep, 0);
    const auto res = run_adaptive_sampler(normal_generator(), t, 1, stream);
    const std::vector<double> col(res.draws.col(0).data(),
                                  res.draws.col(0).data() + res.total());
    const double qhat = quantile_type7(col, 0.025);
    if (std::fabs(qhat - true_q) <= t.epsilon) ++hits;
  }
  CHECK(static_cast<double>(hits) / runs >= 0.95 - 0.03);
}
