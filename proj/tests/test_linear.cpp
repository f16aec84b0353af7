#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <vector>

#include "bayesics/dist.hpp"
#include "bayesics/error.hpp"
#include "bayesics/linear.hpp"
#include "bayesics/stats.hpp"

using namespace bayesics;

namespace {

// ---------------------------------------------------------------------------
// Quadrature oracle for the marginal posterior of one coefficient under the
// NIG model, integrating the raw likelihood x prior on a grid. The only
// analytic step is a single complete-the-square Gaussian integral over the
// other coefficient (p = 2); sigma^2 is integrated by Simpson on log scale.

struct OracleMarginal {
  std::vector<double> grid;   // beta_j values
  std::vector<double> dens;   // unnormalized marginal density
  double norm = 0.0;

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      m += 0.5 * (grid[i] - grid[i - 1]) *
           (grid[i] * dens[i] + grid[i - 1] * dens[i - 1]);
    return m / norm;
  }

  double cdf(double x) const {
    double c = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (grid[i] <= x) {
        c += 0.5 * (grid[i] - grid[i - 1]) * (dens[i] + dens[i - 1]);
      } else {
        const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
        const double dx_mid = dens[i - 1] + t * (dens[i] - dens[i - 1]);
        c += 0.5 * (x - grid[i - 1]) * (dens[i - 1] + dx_mid);
        break;
      }
    }
    return c / norm;
  }

  double pdf_at(double x) const {
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] >= x) {
        const double t = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
        return (dens[i - 1] + t * (dens[i] - dens[i - 1])) / norm;
      }
    return 0.0;
  }

  double quantile(double p) const {
    double lo = grid.front(), hi = grid.back();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) lo = mid;
      else hi = mid;
    }
    double q = 0.5 * (lo + hi);
    // one Newton polish step
    const double f = pdf_at(q);
    if (f > 0) q += (p - cdf(q)) / f;
    return q;
  }
};

OracleMarginal oracle_coef_marginal(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y,
                                    const NIGPrior& prior, int j,
                                    double center, double scale) {
  const int p = static_cast<int>(X.cols());
  REQUIRE(p <= 2);
  const int o = 1 - j;  // the other coordinate when p == 2
  const double n = static_cast<double>(X.rows());

  OracleMarginal out;
  const int n_grid = 8001;
  const double span = 50.0 * scale;
  const int n_sig = 801;  // Simpson nodes over log sigma^2

  // integration range for sigma^2 around the data scale
  const double s2_data = (y.array() - y.mean()).square().sum() / n + 1e-12;
  const double lo_ls = std::log(s2_data) - 14.0, hi_ls = std::log(s2_data) + 14.0;
  const double h_ls = (hi_ls - lo_ls) / (n_sig - 1);

  out.grid.resize(n_grid);
  out.dens.resize(n_grid);
  for (int gi = 0; gi < n_grid; ++gi) {
    const double bj = center - span + 2.0 * span * gi / (n_grid - 1);
    out.grid[gi] = bj;
    double total = 0.0;
    for (int si = 0; si < n_sig; ++si) {
      const double ls = lo_ls + h_ls * si;
      const double s2 = std::exp(ls);
      // log IG(s2; a/2, b/2) with exponent -(a/2+1), plus the log-transform
      // Jacobian s2: net power of s2 is -a/2
      double lp = (prior.a / 2.0) * std::log(prior.b / 2.0) -
                  std::lgamma(prior.a / 2.0) - (prior.a / 2.0) * ls -
                  prior.b / (2.0 * s2);
      // gaussian pieces: likelihood and prior, with beta_other integrated
      // analytically by completing the square when p == 2
      if (p == 1) {
        const double rss = (y - X.col(0) * bj).squaredNorm();
        const double pr = (bj - prior.mu[0]) * (bj - prior.mu[0]) * prior.V(0, 0);
        lp += -0.5 * (n + 1.0) * std::log(2.0 * M_PI * s2) +
              0.5 * std::log(prior.V(0, 0)) - (rss + pr) / (2.0 * s2);
      } else {
        // quadratic in t = beta_other: A t^2 - 2 B t + C
        const Eigen::VectorXd r = y - X.col(j) * bj;
        const double A = X.col(o).squaredNorm() + prior.V(o, o);
        const double B = X.col(o).dot(r) + prior.V(o, o) * prior.mu[o] -
                         prior.V(o, j) * (bj - prior.mu[j]);
        double C = r.squaredNorm();
        C += (bj - prior.mu[j]) * (bj - prior.mu[j]) * prior.V(j, j) +
             prior.V(o, o) * prior.mu[o] * prior.mu[o];
        const double logdet_V = std::log(prior.V.determinant());
        lp += -0.5 * (n + 2.0) * std::log(2.0 * M_PI * s2) + 0.5 * logdet_V -
              (C - B * B / A) / (2.0 * s2) + 0.5 * std::log(2.0 * M_PI * s2 / A);
      }
      const double w = (si == 0 || si == n_sig - 1) ? 1.0 : (si % 2 ? 4.0 : 2.0);
      total += w * std::exp(lp);
    }
    out.dens[gi] = total * h_ls / 3.0;
  }
  for (std::size_t i = 1; i < out.grid.size(); ++i)
    out.norm += 0.5 * (out.grid[i] - out.grid[i - 1]) *
                (out.dens[i] + out.dens[i - 1]);
  return out;
}

DesignSpec make_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       bool intercept_first = true) {
  DesignSpec d;
  d.X = X;
  d.y = y;
  for (int c = 0; c < X.cols(); ++c) {
    const bool inter = intercept_first && c == 0;
    d.labels.push_back(inter ? "(Intercept)" : "x" + std::to_string(c));
    d.kinds.push_back(inter ? ColumnKind::intercept : ColumnKind::numeric);
    const auto col = X.col(c);
    const double sd = X.rows() >= 2
                          ? sample_sd(std::span<const double>(
                                col.data(), static_cast<std::size_t>(col.size())))
                          : 1.0;
    d.column_sd.push_back(inter ? 1.0 : (sd > 0 ? sd : 1.0));
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

TEST_CASE("conjugacy oracle: coefficient marginals match raw quadrature") {
  RngStream rng(42, 0);
  int checked = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const int n = 4 + static_cast<int>(rng.uniform() * 7);  // 4..10
    const int p = rep % 2 == 0 ? 1 : 2;
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    if (p == 2)
      for (int i = 0; i < n; ++i) X(i, 1) = rng.normal();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 1.0 + 0.8 * rng.normal();

    NIGPrior prior;
    prior.mu = Eigen::VectorXd::Zero(p);
    prior.mu[0] = 0.5;
    prior.V = Eigen::MatrixXd::Identity(p, p);
    prior.V(0, 0) = 0.5 + rng.uniform();
    if (p == 2) prior.V(1, 1) = 0.5 + rng.uniform();
    prior.a = 3.0 + 2.0 * rng.uniform();
    prior.b = 1.0 + rng.uniform();
    prior.kind = NIGPrior::Kind::custom;

    const auto fit = fit_lm(make_design(X, y), prior);
    for (int j = 0; j < p; ++j) {
      const auto marg = fit.post.coef_marginal(j);
      const auto oracle =
          oracle_coef_marginal(X, y, prior, j, marg.loc, marg.scale);

      const double tol = 1e-4;
      const double denom = std::max(std::fabs(marg.loc), marg.scale);
      CHECK(std::fabs(oracle.mean() - marg.loc) / denom < tol);

      const double ci_lo = quantile(ScalarDist{marg}, 0.025);
      const double ci_hi = quantile(ScalarDist{marg}, 0.975);
      CHECK(std::fabs(oracle.quantile(0.025) - ci_lo) /
                std::max(std::fabs(ci_lo), marg.scale) <
            tol);
      CHECK(std::fabs(oracle.quantile(0.975) - ci_hi) /
                std::max(std::fabs(ci_hi), marg.scale) <
            tol);

      const double pdir = std::max(cdf(ScalarDist{marg}, 0.0),
                                   1.0 - cdf(ScalarDist{marg}, 0.0));
      const double opdir = std::max(oracle.cdf(0.0), 1.0 - oracle.cdf(0.0));
      CHECK(std::fabs(pdir - opdir) < tol);
      ++checked;
    }
  }
  CHECK(checked >= 18);
}

TEST_CASE("marginal likelihood matches quadrature on a 2-point dataset") {
  // p = 1 intercept model, full 2-D integration of likelihood x prior
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y(2);
  y << 0.7, 1.9;
  NIGPrior prior;
  prior.mu = Eigen::VectorXd::Constant(1, 0.3);
  prior.V = Eigen::MatrixXd::Constant(1, 1, 0.8);
  prior.a = 4.0;
  prior.b = 2.0;
  const auto fit = fit_lm(make_design(X, y), prior);

  auto integrand = [&](double beta, double ls) {
    const double s2 = std::exp(ls);
    double lp = -std::lgamma(prior.a / 2.0) +
                (prior.a / 2.0) * std::log(prior.b / 2.0) -
                (prior.a / 2.0 + 1.0) * ls - prior.b / (2.0 * s2) + ls;
    const double rss = (y.array() - beta).square().sum();
    const double pr = (beta - prior.mu[0]) * (beta - prior.mu[0]) * prior.V(0, 0);
    lp += -1.5 * std::log(2.0 * M_PI * s2) + 0.5 * std::log(prior.V(0, 0)) -
          (rss + pr) / (2.0 * s2);
    return std::exp(lp);
  };

  auto evidence = [&](int nb, int ns) {
    const double b_lo = -40.0, b_hi = 42.0;
    const double l_lo = -16.0, l_hi = 14.0;
    const double hb = (b_hi - b_lo) / (nb - 1), hs = (l_hi - l_lo) / (ns - 1);
    double total = 0.0;
    for (int i = 0; i < nb; ++i) {
      const double wb = (i == 0 || i == nb - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double inner = 0.0;
      for (int k = 0; k < ns; ++k) {
        const double ws = (k == 0 || k == ns - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        inner += ws * integrand(b_lo + hb * i, l_lo + hs * k);
      }
      total += wb * inner * hs / 3.0;
    }
    return total * hb / 3.0;
  };

  const double e1 = evidence(1601, 801);
  const double e2 = evidence(2401, 1201);
  CHECK(std::fabs(e1 / e2 - 1.0) < 1e-8);  // quadrature has converged
  CHECK(std::fabs(std::exp(fit.log_marginal) / e2 - 1.0) < 1e-6);
}

TEST_CASE("vague-prior limit approaches OLS") {
  RngStream rng(7, 0);
  const int n = 30;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) X(i, 1) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = 2.0 - 1.2 * X(i, 1) + 0.5 * rng.normal();

  const Eigen::VectorXd ols = X.colPivHouseholderQr().solve(y);
  const double rss = (y - X * ols).squaredNorm();
  const Eigen::MatrixXd target_cov = (rss / n) * (X.transpose() * X).inverse();

  double prev_gap = 1e100;
  for (double tau : {1e-2, 1e-4, 1e-6, 1e-8}) {
    NIGPrior prior;
    prior.mu = Eigen::VectorXd::Zero(2);
    prior.V = tau * Eigen::MatrixXd::Identity(2, 2);
    prior.a = tau;
    prior.b = tau;
    const auto fit = fit_lm(make_design(X, y), prior);
    const double gap = (fit.post.mu_n - ols).norm() +
                       ((fit.post.b_n / fit.post.a_n) * fit.post.V_n_inv - target_cov).norm();
    CHECK(gap < prev_gap + 1e-12);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-7);
}

TEST_CASE("intercept-only fit shrinks to ybar under a vague prior") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
  Eigen::VectorXd y(6);
  y << 1, 2, 3, 4, 5, 6;
  NIGPrior prior;
  prior.mu = Eigen::VectorXd::Zero(1);
  prior.V = Eigen::MatrixXd::Constant(1, 1, 1e-10);
  prior.a = 1.0;
  prior.b = 1.0;
  const auto fit = fit_lm(make_design(X, y), prior);
  CHECK(fit.post.mu_n[0] == doctest::Approx(3.5).epsilon(1e-8));
}

TEST_CASE("simulated slope-0.25 regression recovers the slope") {
  RngStream rng(2026, 0);
  int ok = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 25;
    Eigen::MatrixXd X(n, 2);
    X.col(0).setOnes();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 1) = rng.normal();
      y[i] = 0.25 * X(i, 1) + rng.normal();
    }
    const auto fit = fit_lm(make_design(X, y));  // default Zellner prior
    const auto marg = fit.post.coef_marginal(1);
    const double sd = marg.scale * std::sqrt(marg.df / (marg.df - 2.0));
    if (std::fabs(marg.loc - 0.25) < 3.0 * sd) ++ok;
  }
  CHECK(ok >= 19);  // 3-sigma misses should be rare
}

TEST_CASE("row permutation leaves the fit unchanged") {
  RngStream rng(5, 0);
  const int n = 14;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    y[i] = 0.3 + X(i, 1) + 0.4 * rng.normal();
  }
  const auto fit = fit_lm(make_design(X, y));

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::reverse(idx.begin(), idx.end());
  std::swap(idx[2], idx[9]);
  Eigen::MatrixXd Xp(n, 2);
  Eigen::VectorXd yp(n);
  for (int i = 0; i < n; ++i) {
    Xp.row(i) = X.row(idx[i]);
    yp[i] = y[idx[i]];
  }
  const auto fitp = fit_lm(make_design(Xp, yp));
  CHECK(fitp.log_marginal == doctest::Approx(fit.log_marginal).epsilon(1e-12));
  CHECK((fitp.post.mu_n - fit.post.mu_n).norm() < 1e-10);
}

TEST_CASE("rank deficiency is rejected") {
  Eigen::MatrixXd X(5, 2);
  X.col(0).setOnes();
  X.col(1).setOnes();  // duplicate of the intercept
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  CHECK_THROWS_AS(fit_lm(make_design(X, y)), NumericalError);
}

TEST_CASE("savage-dickey coefficient BFs") {
  RngStream rng(11, 0);
  const int n = 200;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    y[i] = 0.0 * X(i, 1) + rng.normal();  // true null slope
  }
  const auto fit = fit_lm(make_design(X, y));
  const auto bfs = coefficient_bayes_factors(fit);
  REQUIRE(bfs.per_coefficient.size() == 1);
  // posterior tight at 0, diffuse prior: evidence against the coefficient
  CHECK(bfs.per_coefficient[0].value < 1.0);
  CHECK(bfs.full_vs_null.value < 1.0);
}

TEST_CASE("null-data full-vs-null BF usually favors the null") {
  RngStream rng(13, 0);
  int favored_null = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    const int n = 120;
    Eigen::MatrixXd X(n, 2);
    X.col(0).setOnes();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 1) = rng.normal();
      y[i] = rng.normal();
    }
    const auto fit = fit_lm(make_design(X, y));
    if (coefficient_bayes_factors(fit).full_vs_null.value < 1.0) ++favored_null;
  }
  CHECK(favored_null >= 45);
}

TEST_CASE("zellner BFs are invariant to covariate rescaling") {
  RngStream rng(17, 0);
  const int n = 60;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = 2.0 + rng.normal();
    y[i] = 1.0 + 0.6 * X(i, 1) + rng.normal();
  }
  const auto fit1 = fit_lm(make_design(X, y));
  Eigen::MatrixXd Xs = X;
  Xs.col(1) *= 3.7;
  const auto fit2 = fit_lm(make_design(Xs, y));
  const auto bf1 = coefficient_bayes_factors(fit1);
  const auto bf2 = coefficient_bayes_factors(fit2);
  CHECK(bf1.per_coefficient[0].value ==
        doctest::Approx(bf2.per_coefficient[0].value).epsilon(1e-10));
  CHECK(bf1.full_vs_null.value ==
        doctest::Approx(bf2.full_vs_null.value).epsilon(1e-10));
}

TEST_CASE("information criteria identities and WAIC oracle") {
  RngStream rng(23, 0);
  const int n = 5;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.normal();
    y[i] = 0.5 + X(i, 1) + 0.7 * rng.normal();
  }
  NIGPrior prior;
  prior.mu = Eigen::VectorXd::Zero(2);
  prior.V = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  prior.a = 5.0;
  prior.b = 2.0;
  const auto fit = fit_lm(make_design(X, y), prior);
  const RngStream stream(101, 0);
  const auto ic = information_criteria(fit, stream);

  const double p1 = static_cast<double>(X.cols()) + 1.0;
  CHECK(ic.aic - ic.bic ==
        doctest::Approx(2.0 * p1 - p1 * std::log(static_cast<double>(n))).epsilon(1e-10));
  CHECK(ic.p_d > 0.0);
  CHECK(ic.p_waic > 0.0);

  // brute-force WAIC from a million independent joint draws
  RngStream big(555, 0);
  const auto joint = draw_nig_joint(fit.post, big, 1000000);
  double lppd = 0.0, p_waic = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::ArrayXd logp(joint.rows());
    for (Eigen::Index s = 0; s < joint.rows(); ++s) {
      const double s2 = joint(s, 2);
      const double mu = X(i, 0) * joint(s, 0) + X(i, 1) * joint(s, 1);
      logp[s] = -0.5 * std::log(2.0 * M_PI * s2) -
                0.5 * (y[i] - mu) * (y[i] - mu) / s2;
    }
    const double mx = logp.maxCoeff();
    lppd += mx + std::log((logp - mx).exp().mean());
    const double m = logp.mean();
    p_waic += (logp - m).square().sum() / (logp.size() - 1.0);
  }
  const double waic_oracle = -2.0 * (lppd - p_waic);
  CHECK(std::fabs(ic.waic - waic_oracle) < 0.1);
}

TEST_CASE("diagnostics data") {
  // perfect fit: residuals all zero
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y = 2.0 * X.col(1);
  NIGPrior prior;
  prior.mu = Eigen::VectorXd::Zero(2);
  prior.V = 1e-12 * Eigen::MatrixXd::Identity(2, 2);
  prior.a = 1e-10;
  prior.b = 1e-10;
  const auto fit = fit_lm(make_design(X, y), prior);
  const auto d = diagnostics_data(fit);
  for (double r : d.residuals) CHECK(std::fabs(r) < 1e-6);

  // normal residuals: qq slope near 1
  RngStream rng(31, 0);
  const int n = 4000;
  Eigen::MatrixXd Xn = Eigen::MatrixXd::Ones(n, 1);
  Eigen::VectorXd yn(n);
  for (int i = 0; i < n; ++i) yn[i] = rng.normal();
  const auto fit_n = fit_lm(make_design(Xn, yn));
  const auto dn = diagnostics_data(fit_n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < dn.qq_sample.size(); ++i) {
    sxy += dn.qq_theoretical[i] * dn.qq_sample[i];
    sxx += dn.qq_theoretical[i] * dn.qq_theoretical[i];
  }
  CHECK(sxy / sxx == doctest::Approx(1.0).epsilon(0.05));

  // heavy tails: qq extremes overshoot the normal line
  Eigen::VectorXd yt(n);
  for (int i = 0; i < n; ++i) yt[i] = rng.student_t(2);
  const auto fit_t = fit_lm(make_design(Xn, yt));
  const auto dt = diagnostics_data(fit_t);
  CHECK(dt.qq_sample.back() > 2.0 * dt.qq_theoretical.back());
}

TEST_CASE("medoid and credible band") {
  // single-row dataset: the medoid is that row
  Eigen::MatrixXd X1(1, 2);
  X1 << 1, 3.3;
  Eigen::VectorXd y1(1);
  y1 << 2.0;
  CHECK(medoid_row(make_design(X1, y1)) == 0);

  RngStream rng(41, 0);
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 1) = rng.uniform(0, 10);
    y[i] = 1.0 + 0.5 * X(i, 1) + rng.normal();
  }
  const auto fit = fit_lm(make_design(X, y));
  const auto band = credible_band(fit, "x1", 0.95, std::nullopt, 50);
  REQUIRE(band.points.size() == 50);

  // at the grid start (an observed x), the band matches the closed form
  Eigen::VectorXd xstar = fit.design.X.row(medoid_row(fit.design)).transpose();
  Eigen::Index minrow;
  X.col(1).minCoeff(&minrow);
  xstar[1] = X(minrow, 1);
  const auto cf = summarize_closed_form(
      ScalarDist{fit.post.linear_marginal(xstar)}, "band", 0.95);
  CHECK(band.points.front().center == doctest::Approx(cf.post_mean).epsilon(1e-8));
  CHECK(band.points.front().lower == doctest::Approx(cf.ci_lower).epsilon(1e-8));
  CHECK(band.points.front().upper == doctest::Approx(cf.ci_upper).epsilon(1e-8));

  // intercept-only model: flat band
  Eigen::MatrixXd Xi = Eigen::MatrixXd::Ones(10, 1);
  Eigen::VectorXd yi(10);
  for (int i = 0; i < 10; ++i) yi[i] = rng.normal();
  auto dfit = fit_lm(make_design(Xi, yi));
  CHECK_THROWS_AS(credible_band(dfit, "x9"), UserError);
}

namespace {
DesignSpec factor_design(const std::vector<std::vector<double>>& groups,
                         const std::vector<std::string>& levels) {
  DesignSpec d;
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  const std::size_t k = groups.size();
  d.X = Eigen::MatrixXd::Zero(n, k);
  d.X.col(0).setOnes();
  d.y.resize(n);
  d.labels = {"(Intercept)"};
  d.kinds = {ColumnKind::intercept};
  d.column_sd = {1.0};
  TermInfo t;
  t.name = "g";
  t.is_factor = true;
  t.levels = levels;
  t.reference_level = levels[0];
  std::size_t row = 0;
  for (std::size_t g = 0; g < k; ++g) {
    if (g > 0) {
      t.columns.push_back(g);
      d.labels.push_back("g" + levels[g]);
      d.kinds.push_back(ColumnKind::factor_contrast);
      d.column_sd.push_back(1.0);
    }
    for (double v : groups[g]) {
      if (g > 0) d.X(row, g) = 1.0;
      d.y[static_cast<Eigen::Index>(row)] = v;
      ++row;
    }
  }
  d.terms.push_back(t);
  return d;
}
}  // namespace

TEST_CASE("aov: identical groups give symmetric answers") {
  RngStream rng(61, 0);
  std::vector<std::vector<double>> gs(2, std::vector<double>(40));
  for (auto& v : gs[0]) v = rng.normal();
  gs[1] = gs[0];
  const auto d = factor_design(gs, {"A", "B"});
  const auto fit = fit_aov(d, RngStream(71, 0));
  REQUIRE(fit.diff_summaries.size() == 1);
  CHECK(std::fabs(fit.diff_summaries[0].prob_direction - 0.5) < 0.55);
  CHECK(fit.diff_summaries[0].post_mean ==
        doctest::Approx(0.0).scale(1).epsilon(0.1));
  CHECK(fit.epr_summaries[0].post_mean == doctest::Approx(0.5).epsilon(0.05));
  // identical groups: pooling is favored
  CHECK(fit.full_vs_null.value < 1.0);
}

TEST_CASE("aov level-mean CI matches a 1-D quadrature oracle") {
  RngStream rng(81, 0);
  std::vector<double> g1(8), g2(6);
  for (auto& v : g1) v = 2.0 + rng.normal();
  for (auto& v : g2) v = rng.normal();
  const auto d = factor_design({g1, g2}, {"A", "B"});
  const auto fit = fit_aov(d, RngStream(91, 0));

  // group A intercept-only model: oracle via the same machinery as the lm one
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(g1.size()), 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(g1.size()));
  for (std::size_t i = 0; i < g1.size(); ++i) y[static_cast<Eigen::Index>(i)] = g1[i];

  // reconstruct the pooled hyperpriors used by fit_aov
  std::vector<double> all = g1;
  all.insert(all.end(), g2.begin(), g2.end());
  const double ybar = mean(all);
  const double s2 = sample_variance(all);
  NIGPrior prior;
  prior.mu = Eigen::VectorXd::Constant(1, ybar);
  prior.V = Eigen::MatrixXd::Constant(1, 1, 1.0 / (100.0 * s2));
  const auto ig = find_invgamma_parms_rsq(s2);
  prior.a = 2.0 * ig.shape;
  prior.b = 2.0 * ig.rate;

  const auto marg = fit.groups[0].mean_marginal();
  const auto oracle = oracle_coef_marginal(X, y, prior, 0, marg.loc, marg.scale);
  CHECK(std::fabs(oracle.quantile(0.025) - fit.mean_summaries[0].ci_lower) /
            marg.scale <
        1e-4);
  CHECK(std::fabs(oracle.quantile(0.975) - fit.mean_summaries[0].ci_upper) /
            marg.scale <
        1e-4);
}

TEST_CASE("heteroscedasticity BF") {
  // identical data in both groups: equal variances not disfavored
  std::vector<double> g{0.3, -1.2, 0.8, 1.4, -0.7, 0.1};
  CHECK(heteroscedasticity_bf({g, g}).value >= 1.0);

  RngStream rng(123, 0);
  int equal_favored = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(30), b(30);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    if (heteroscedasticity_bf({a, b}).value > 1.0) ++equal_favored;
  }
  CHECK(equal_favored >= 140);  // >= 70% of same-variance replicates

  int decisive_unequal = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(100), b(100);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 5.0 * rng.normal();
    if (std::log10(heteroscedasticity_bf({a, b}).value) < -2.0) ++decisive_unequal;
  }
  CHECK(decisive_unequal >= 190);  // >= 95%

  CHECK_THROWS_AS(heteroscedasticity_bf({{1.0, 2.0}}), UserError);
  CHECK_THROWS_AS(heteroscedasticity_bf({{1.0, 2.0}, {1.0}}), UserError);
}
