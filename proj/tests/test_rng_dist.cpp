#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bayesics/dist.hpp"
#include "bayesics/rng.hpp"
#include "bayesics/stats.hpp"

using namespace bayesics;

// Reference outputs generated with an independent Philox 4x64-10
// implementation (key = (seed, 0), counter starting at zero).
TEST_CASE("philox known-answer vectors") {
  {
    RngStream s(0, 0);
    const std::uint64_t expect[8] = {
        0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
        0x907d7a052fd5b4dcULL, 0x809bf322883987c3ULL, 0x471128b9e807f7ddULL,
        0xf250ba0dbec065b7ULL, 0xfc6ed66767a457bcULL};
    for (auto e : expect) CHECK(s.next_u64() == e);
  }
  {
    RngStream s(42, 0);
    const std::uint64_t expect[8] = {
        0xd1f8817d4d62880eULL, 0x307266b65cc8797eULL, 0xde1f04e7f084ed03ULL,
        0x65034a8e78cd1e59ULL, 0x5e3daa8961c3e3d3ULL, 0x6f37dea4a04bd05cULL,
        0x31d3a1ae26e190b9ULL, 0x0fef7fae0ab2a01aULL};
    for (auto e : expect) CHECK(s.next_u64() == e);
  }
  {
    RngStream s(0xDEADBEEF, 0);
    const std::uint64_t expect[4] = {0xa4e930dc738acaf1ULL, 0xb1c7ecc6484e9cf0ULL,
                                     0x6b88a411909298aaULL, 0x66f3c896201f7262ULL};
    for (auto e : expect) CHECK(s.next_u64() == e);
  }
}

TEST_CASE("streams are reproducible and children are independent") {
  RngStream a(7, 3), b(7, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream parent(7, 3);
  RngStream c0 = parent.child(0);
  RngStream c1 = parent.child(1);
  CHECK(c0.next_u64() != c1.next_u64());
  RngStream c0_again = parent.child(0);
  CHECK(c0.next_u64() == [&] { c0_again.next_u64(); return c0_again.next_u64(); }());
}

TEST_CASE("draw moments match their laws") {
  RngStream s(2026, 1);
  const int n = 200000;

  std::vector<double> normals(n), gammas(n), betas(n), pois(n);
  for (int i = 0; i < n; ++i) normals[i] = s.normal();
  for (int i = 0; i < n; ++i) gammas[i] = s.gamma(3.0, 2.0);
  for (int i = 0; i < n; ++i) betas[i] = s.beta(2.0, 5.0);
  for (int i = 0; i < n; ++i) pois[i] = static_cast<double>(s.poisson(47.5));

  CHECK(std::fabs(mean(normals)) < 0.01);
  CHECK(sample_sd(normals) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(mean(gammas) == doctest::Approx(1.5).epsilon(0.01));
  CHECK(sample_variance(gammas) == doctest::Approx(0.75).epsilon(0.03));
  CHECK(mean(betas) == doctest::Approx(2.0 / 7.0).epsilon(0.01));
  CHECK(mean(pois) == doctest::Approx(47.5).epsilon(0.005));
  CHECK(sample_variance(pois) == doctest::Approx(47.5).epsilon(0.03));

  // small-mean Poisson branch
  std::vector<double> pois_small(n);
  for (int i = 0; i < n; ++i) pois_small[i] = static_cast<double>(s.poisson(0.8));
  CHECK(mean(pois_small) == doctest::Approx(0.8).epsilon(0.02));

  // negative binomial: var = mu + mu^2/size
  std::vector<double> nb(n);
  for (int i = 0; i < n; ++i) nb[i] = static_cast<double>(s.neg_binomial(4.0, 0.7));
  CHECK(mean(nb) == doctest::Approx(4.0).epsilon(0.03));
  CHECK(sample_variance(nb) == doctest::Approx(4.0 + 16.0 / 0.7).epsilon(0.06));
}

TEST_CASE("dirichlet weights sum to one") {
  RngStream s(1, 1);
  const auto w = s.dirichlet_uniform(50);
  double total = 0;
  for (double wi : w) {
    CHECK(wi > 0);
    total += wi;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scalar distribution wrappers") {
  const ScalarDist n01 = NormalDist{0, 1};
  CHECK(quantile(n01, 0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(pdf(n01, 1.96) == doctest::Approx(0.0584409443).epsilon(1e-8));
  CHECK(cdf(n01, 0.0) == doctest::Approx(0.5));

  const ScalarDist t5 = StudentTDist{2.0, 3.0, 5.0};
  // location-scale: cdf((x-loc)/scale) under the standard t
  CHECK(cdf(t5, 2.0) == doctest::Approx(0.5));
  CHECK(quantile(t5, 0.975) == doctest::Approx(2.0 + 3.0 * 2.5705818366).epsilon(1e-8));

  const ScalarDist g = GammaDist{3.0, 2.0};
  CHECK(dist_mean(g) == doctest::Approx(1.5));
  CHECK(cdf(g, quantile(g, 0.37)) == doctest::Approx(0.37).epsilon(1e-10));

  const ScalarDist ig = InvGammaDist{3.0, 2.0};
  CHECK(dist_mean(ig) == doctest::Approx(1.0));
  CHECK(cdf(ig, quantile(ig, 0.8)) == doctest::Approx(0.8).epsilon(1e-10));

  const ScalarDist b11 = BetaDist{1.0, 1.0};
  CHECK(quantile(b11, 0.025) == doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("type-7 quantiles match the interpolation rule") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(quantile_type7(x, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_type7(x, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_type7(x, 0.0) == doctest::Approx(1.0));
  CHECK(quantile_type7(x, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("kde recovers simple densities") {
  RngStream s(99, 0);
  std::vector<double> z(100000);
  for (auto& v : z) v = s.normal();
  CHECK(kde_gaussian(z, 0.0) == doctest::Approx(0.39894).epsilon(0.02));

  std::vector<double> u(100000);
  for (auto& v : u) v = s.uniform();
  CHECK(kde_gaussian(u, 0.5) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("weighted quantile degenerates to the plain one under equal weights") {
  RngStream s(5, 5);
  std::vector<double> x(2001), w(2001, 1.0);
  for (auto& v : x) v = s.normal();
  const double q = weighted_quantile(x, w, 0.3);
  CHECK(q == doctest::Approx(quantile_type7(x, 0.3)).epsilon(0.01));
}
