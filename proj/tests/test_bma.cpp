#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "bayesics/bma.hpp"
#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

using namespace bayesics;

namespace {

DesignSpec make_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  DesignSpec d;
  d.X = X;
  d.y = y;
  for (int c = 0; c < X.cols(); ++c) {
    const bool inter = c == 0;
    d.labels.push_back(inter ? "(Intercept)" : "x" + std::to_string(c));
    d.kinds.push_back(inter ? ColumnKind::intercept : ColumnKind::numeric);
    const auto col = X.col(c);
    double sd = 1.0;
    if (!inter && X.rows() >= 2)
      sd = sample_sd(std::span<const double>(col.data(),
                                             static_cast<std::size_t>(col.size())));
    d.column_sd.push_back(sd > 0 ? sd : 1.0);
    if (!inter) {
      TermInfo t;
      t.name = d.labels.back();
      t.columns = {static_cast<std::size_t>(c)};
      d.terms.push_back(t);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("p=1: two models, weights are the softmax of the evidences") {
  RngStream rng(1, 0);
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    y[i] = 0.5 + 0.4 * X(i, 1) + rng.normal();
  }
  const auto d = make_design(X, y);
  PrecisionTarget t;
  t.epsilon = 0.05;
  const auto fit = fit_bma(d, RngStream(2, 0), t);
  REQUIRE(fit.models.size() == 2);

  // direct recomputation through the conjugate module
  DesignSpec d0;
  d0.X = X.leftCols(1);
  d0.y = y;
  d0.labels = {"(Intercept)"};
  d0.kinds = {ColumnKind::intercept};
  d0.column_sd = {1.0};
  const double lm0 = fit_lm(d0).log_marginal;
  const double lm1 = fit_lm(d).log_marginal;
  const double w1 = 1.0 / (1.0 + std::exp(lm0 - lm1));
  double got_w1 = 0.0;
  for (const auto& m : fit.models)
    if (!m.covariates.empty()) got_w1 = m.posterior_prob;
  CHECK(got_w1 == doctest::Approx(w1).epsilon(1e-10));
  CHECK(fit.inclusion_prob[0] == doctest::Approx(w1).epsilon(1e-10));

  double total = 0.0;
  for (const auto& m : fit.models) total += m.posterior_prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dominant model takes nearly all the weight") {
  RngStream rng(3, 0);
  const int n = 1500;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
    y[i] = 10.0 * X(i, 1) + rng.normal();  // x1 is a 10-sigma effect, x2 junk
  }
  const auto d = make_design(X, y);
  PrecisionTarget t;
  t.epsilon = 0.02;
  const auto fit = fit_bma(d, RngStream(4, 0), t);
  CHECK(fit.inclusion_prob[0] > 0.99);

  double best_prob = 0.0;
  std::vector<std::size_t> best_cov;
  for (const auto& m : fit.models)
    if (m.posterior_prob > best_prob) {
      best_prob = m.posterior_prob;
      best_cov = m.covariates;
    }
  CHECK(best_prob > 0.95);
  REQUIRE(best_cov.size() == 1);
  CHECK(best_cov[0] == 1);

  // mixture CI for the strong coefficient matches the single-model CI
  const auto single = fit_lm(d);
  const auto marg = single.post.coef_marginal(1);
  const double lo = quantile(ScalarDist{marg}, 0.025);
  const double hi = quantile(ScalarDist{marg}, 0.975);
  CHECK(std::fabs(fit.unconditional[1].ci_lower - lo) < 0.05);
  CHECK(std::fabs(fit.unconditional[1].ci_upper - hi) < 0.05);
}

TEST_CASE("null data keeps junk covariates mostly excluded") {
  RngStream rng(5, 0);
  double total_inclusion = 0.0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const int n = 80;
    Eigen::MatrixXd X(n, 2);
    X.col(0).setOnes();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 1) = rng.normal();
      y[i] = rng.normal();
    }
    PrecisionTarget t;
    t.epsilon = 1e9;  // pilot only; we need probabilities, not tails
    const auto fit = fit_bma(make_design(X, y), RngStream(600 + rep, 0), t);
    total_inclusion += fit.inclusion_prob[0];
  }
  CHECK(total_inclusion / reps < 0.5);
}

TEST_CASE("mixture coherence: draw mean equals the probability-weighted mean") {
  RngStream rng(6, 0);
  const int n = 120;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    X(i, 2) = rng.normal();
    y[i] = 0.3 * X(i, 1) + 0.1 * X(i, 2) + rng.normal();
  }
  const auto d = make_design(X, y);
  PrecisionTarget t;
  t.epsilon = 0.01;
  const auto fit = fit_bma(d, RngStream(7, 0), t);

  // expected coefficient: sum over models of prob * conditional posterior mean
  for (std::size_t j = 1; j <= 2; ++j) {
    double expect = 0.0;
    for (const auto& m : fit.models) {
      if (std::find(m.covariates.begin(), m.covariates.end(), j) ==
          m.covariates.end())
        continue;
      std::vector<std::size_t> cols{0};
      for (std::size_t cv : m.covariates) cols.push_back(cv);
      DesignSpec sub;
      sub.X.resize(n, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t q = 0; q < cols.size(); ++q) {
        sub.X.col(static_cast<Eigen::Index>(q)) =
            X.col(static_cast<Eigen::Index>(cols[q]));
        sub.labels.push_back(d.labels[cols[q]]);
        sub.kinds.push_back(d.kinds[cols[q]]);
        sub.column_sd.push_back(d.column_sd[cols[q]]);
      }
      sub.y = y;
      const auto sf = fit_lm(sub);
      for (std::size_t q = 0; q < cols.size(); ++q)
        if (cols[q] == j)
          expect += m.posterior_prob * sf.post.mu_n[static_cast<Eigen::Index>(q)];
    }
    CHECK(std::fabs(fit.unconditional[j].post_mean - expect) < 0.01);
  }
}

TEST_CASE("duplicate covariate columns are rejected") {
  RngStream rng(8, 0);
  const int n = 30;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) X(i, 1) = rng.normal();
  X.col(2) = X.col(1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  CHECK_THROWS_AS(fit_bma(make_design(X, y), RngStream(9, 0)), NumericalError);
}

TEST_CASE("covariate cap errors with guidance") {
  RngStream rng(10, 0);
  const int n = 20, k = 5;
  Eigen::MatrixXd X(n, k + 1);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= k; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  CHECK_THROWS_AS(fit_bma(make_design(X, y), RngStream(11, 0), {}, 0.95,
                          ModelPrior::uniform, 3),
                  UserError);
}

TEST_CASE("bma p-values: calibration and a forced location bug") {
  RngStream rng(12, 0);
  int calibrated_runs = 0;
  const int reps = 5;
  for (int rep = 0; rep < reps; ++rep) {
    const int n = 100;
    Eigen::MatrixXd X(n, 2);
    X.col(0).setOnes();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 1) = rng.normal();
      y[i] = 1.0 + 0.5 * X(i, 1) + rng.normal();
    }
    PrecisionTarget t;
    t.epsilon = 0.03;
    const auto fit = fit_bma(make_design(X, y), RngStream(700 + rep, 0), t);
    const auto pvals = bma_bayesian_pvalue(fit, RngStream(800 + rep, 0), {0.25, 0.5, 0.75}, t);
    bool all_inside = true;
    for (const auto& pv : pvals)
      if (pv.p < 0.05 || pv.p > 0.95) all_inside = false;
    if (all_inside) ++calibrated_runs;
  }
  CHECK(calibrated_runs >= 4);

  // forced bug oracle: shift the observed response after fitting
  const int n = 100;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    y[i] = 1.0 + 0.5 * X(i, 1) + rng.normal();
  }
  PrecisionTarget t;
  t.epsilon = 0.03;
  auto fit = fit_bma(make_design(X, y), RngStream(13, 0), t);
  fit.design.y.array() += 25.0;  // predictive now far below the observed quantiles
  const auto pvals = bma_bayesian_pvalue(fit, RngStream(14, 0), {0.5}, t);
  CHECK(pvals[0].p > 0.99);
}

TEST_CASE("p-values are stable under covariate reordering") {
  RngStream rng(20, 0);
  const int n = 90;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    X(i, 2) = rng.uniform(0, 2);
    y[i] = 0.4 * X(i, 1) - 0.3 * X(i, 2) + rng.normal();
  }
  Eigen::MatrixXd Xp = X;
  Xp.col(1) = X.col(2);
  Xp.col(2) = X.col(1);

  PrecisionTarget t;
  t.epsilon = 0.02;
  const auto f1 = fit_bma(make_design(X, y), RngStream(21, 0), t);
  const auto f2 = fit_bma(make_design(Xp, y), RngStream(21, 0), t);
  const auto p1 = bma_bayesian_pvalue(f1, RngStream(22, 0), {0.25, 0.5, 0.75}, t);
  const auto p2 = bma_bayesian_pvalue(f2, RngStream(22, 0), {0.25, 0.5, 0.75}, t);
  for (std::size_t q = 0; q < p1.size(); ++q)
    CHECK(std::fabs(p1[q].p - p2[q].p) < 0.05);  // same law, different draws
}
