#include "bayesics/linear.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bayesics/dist.hpp"
#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double spd_logdet(const Eigen::MatrixXd& A, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void check_full_rank(const Eigen::MatrixXd& X) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols())
    throw NumericalError(
        "design matrix is rank deficient; drop collinear or duplicate columns");
}

struct ResponseScale {
  double ybar;
  double s2;  // sample variance of y
};

ResponseScale response_scale(const Eigen::VectorXd& y) {
  const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
  ResponseScale rs{mean(ys), sample_variance(ys)};
  if (!(rs.s2 > 0)) throw UserError("response variable is constant");
  return rs;
}

// sigma^2 ~ IG(a/2, b/2) hyperparameters from the R^2 elicitation
std::pair<double, double> variance_hyperparms(double s2) {
  const auto ig = find_invgamma_parms_rsq(s2);
  return {2.0 * ig.shape, 2.0 * ig.rate};
}

struct NigUpdate {
  NIGPosterior post;
  double log_marginal;
  bool jittered = false;
};

NigUpdate nig_update(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const NIGPrior& prior) {
  const auto n = static_cast<double>(X.rows());
  NigUpdate u;
  Eigen::MatrixXd V = prior.V;
  const double logdet_V = spd_logdet(V, "prior precision V");

  for (int attempt = 0; attempt < 2; ++attempt) {
    u.post.V_n = V + X.transpose() * X;
    Eigen::LLT<Eigen::MatrixXd> llt(u.post.V_n);
    if (llt.info() != Eigen::Success)
      throw NumericalError("posterior precision is not positive definite");
    u.post.mu_n = llt.solve(V * prior.mu + X.transpose() * y);
    u.post.V_n_inv = llt.solve(Eigen::MatrixXd::Identity(V.rows(), V.cols()));
    u.post.a_n = prior.a + n;
    // stable form of b + y'y + mu'V mu - mu_n' V_n mu_n
    u.post.b_n = prior.b + y.dot(y - X * u.post.mu_n) +
                 (prior.mu - u.post.mu_n).dot(V * prior.mu);
    if (u.post.b_n > 0) break;
    V.diagonal().array() += 1e-10 * u.post.V_n.trace() / V.rows();
    u.jittered = true;
  }
  if (!(u.post.b_n > 0))
    throw NumericalError("posterior scale b_n non-positive after jitter");

  const double logdet_Vn =
      2.0 * Eigen::LLT<Eigen::MatrixXd>(u.post.V_n)
                .matrixL()
                .toDenseMatrix()
                .diagonal()
                .array()
                .log()
                .sum();
  u.log_marginal = -0.5 * n * kLog2Pi + 0.5 * (logdet_V - logdet_Vn) +
                   lgamma_fn(u.post.a_n / 2.0) - lgamma_fn(prior.a / 2.0) +
                   (prior.a / 2.0) * std::log(prior.b / 2.0) -
                   (u.post.a_n / 2.0) * std::log(u.post.b_n / 2.0);
  return u;
}

// scalar intercept-only model for group posteriors
GroupPosterior scalar_nig(std::span<const double> y, double mu0, double v0,
                          double a, double b, const std::string& level) {
  const double n = static_cast<double>(y.size());
  GroupPosterior g;
  g.level = level;
  g.n = y.size();
  const double sum_y = std::accumulate(y.begin(), y.end(), 0.0);
  g.kappa_n = v0 + n;
  g.mu_n = (v0 * mu0 + sum_y) / g.kappa_n;
  g.a_n = a + n;
  double resid = 0.0;
  for (double yi : y) resid += yi * (yi - g.mu_n);
  g.b_n = b + resid + (mu0 - g.mu_n) * v0 * mu0;
  if (!(g.b_n > 0)) throw NumericalError("group posterior scale non-positive");
  g.log_marginal = -0.5 * n * kLog2Pi + 0.5 * (std::log(v0) - std::log(g.kappa_n)) +
                   lgamma_fn(g.a_n / 2.0) - lgamma_fn(a / 2.0) +
                   (a / 2.0) * std::log(b / 2.0) -
                   (g.a_n / 2.0) * std::log(g.b_n / 2.0);
  return g;
}

}  // namespace

StudentTDist NIGPosterior::coef_marginal(std::size_t j) const {
  return StudentTDist{mu_n[static_cast<Eigen::Index>(j)],
                      std::sqrt(b_n / a_n * V_n_inv(j, j)), a_n};
}

StudentTDist NIGPosterior::linear_marginal(const Eigen::VectorXd& x) const {
  const double scale2 = (b_n / a_n) * x.dot(V_n_inv * x);
  return StudentTDist{x.dot(mu_n), std::sqrt(scale2), a_n};
}

InvGammaDist NIGPosterior::sigma2_posterior() const {
  return InvGammaDist{a_n / 2.0, b_n / 2.0};
}

StudentTDist GroupPosterior::mean_marginal() const {
  return StudentTDist{mu_n, std::sqrt(b_n / (a_n * kappa_n)), a_n};
}

InvGammaDist GroupPosterior::var_posterior() const {
  return InvGammaDist{a_n / 2.0, b_n / 2.0};
}

NIGPrior default_zellner_prior(const DesignSpec& design) {
  if (!design.has_intercept())
    throw UserError("the default Zellner prior expects an intercept column");
  const auto rs = response_scale(design.y);
  const auto p = static_cast<Eigen::Index>(design.p());
  const auto n = static_cast<double>(design.n());
  if (!(n > static_cast<double>(p)))
    throw UserError("default priors need n > p");

  NIGPrior prior;
  prior.kind = NIGPrior::Kind::zellner_g;
  prior.mu = Eigen::VectorXd::Zero(p);
  prior.mu[0] = rs.ybar;
  prior.V = Eigen::MatrixXd::Zero(p, p);
  prior.V(0, 0) = 1.0 / (100.0 * rs.s2);
  if (p > 1) {
    const Eigen::MatrixXd Xc = design.X.rightCols(p - 1);
    prior.V.bottomRightCorner(p - 1, p - 1) = (Xc.transpose() * Xc) / n;
  }
  std::tie(prior.a, prior.b) = variance_hyperparms(rs.s2);
  return prior;
}

NIGPrior conjugate_elicited_prior(const DesignSpec& design) {
  if (!design.has_intercept())
    throw UserError("the conjugate elicited prior expects an intercept column");
  const auto rs = response_scale(design.y);
  const auto p = static_cast<Eigen::Index>(design.p());

  NIGPrior prior;
  prior.kind = NIGPrior::Kind::conjugate;
  prior.mu = Eigen::VectorXd::Zero(p);
  prior.mu[0] = rs.ybar;
  std::tie(prior.a, prior.b) = variance_hyperparms(rs.s2);
  prior.V = Eigen::MatrixXd::Zero(p, p);
  prior.V(0, 0) = 1.0 / (100.0 * rs.s2);
  const double z95 = 1.959963984540054;
  for (Eigen::Index j = 1; j < p; ++j) {
    const double target = 5.0 * std::sqrt(rs.s2) /
                          (z95 * design.column_sd[static_cast<std::size_t>(j)]);
    // marginal prior t-scale of beta_j equals the elicited value
    prior.V(j, j) = (prior.b / prior.a) / (target * target);
  }
  return prior;
}

LinearFit fit_lm(const DesignSpec& design, std::optional<NIGPrior> prior) {
  if (design.is_survival) throw UserError("fit_lm expects a numeric response");
  check_full_rank(design.X);
  LinearFit fit;
  fit.design = design;
  fit.prior = prior ? std::move(*prior) : default_zellner_prior(design);
  if (fit.prior.mu.size() != static_cast<Eigen::Index>(design.p()) ||
      fit.prior.V.rows() != fit.prior.V.cols() ||
      fit.prior.V.rows() != static_cast<Eigen::Index>(design.p()))
    throw UserError("prior dimensions do not match the design");
  if (!(fit.prior.a > 0) || !(fit.prior.b > 0))
    throw UserError("variance hyperparameters must be positive");

  auto u = nig_update(design.X, design.y, fit.prior);
  fit.post = std::move(u.post);
  fit.log_marginal = u.log_marginal;
  if (u.jittered)
    fit.warnings.push_back("prior precision jittered to keep b_n positive");
  fit.fitted = design.X * fit.post.mu_n;
  fit.residuals = design.y - fit.fitted;
  return fit;
}

Eigen::MatrixXd draw_nig_joint(const NIGPosterior& post, RngStream& rng,
                               std::size_t n_draws) {
  const Eigen::Index p = post.mu_n.size();
  Eigen::LLT<Eigen::MatrixXd> llt(post.V_n_inv);
  if (llt.info() != Eigen::Success)
    throw NumericalError("posterior covariance factorization failed");
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd out(n_draws, p + 1);
  Eigen::VectorXd z(p);
  for (std::size_t s = 0; s < n_draws; ++s) {
    const double sigma2 = rng.inv_gamma(post.a_n / 2.0, post.b_n / 2.0);
    for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
    out.row(static_cast<Eigen::Index>(s)).head(p) =
        (post.mu_n + std::sqrt(sigma2) * (L * z)).transpose();
    out(static_cast<Eigen::Index>(s), p) = sigma2;
  }
  return out;
}

CoefficientBFs coefficient_bayes_factors(const LinearFit& fit) {
  CoefficientBFs out;
  const auto p = static_cast<Eigen::Index>(fit.design.p());

  Eigen::LLT<Eigen::MatrixXd> llt(fit.prior.V);
  if (llt.info() != Eigen::Success)
    throw NumericalError("prior precision is not positive definite");
  const Eigen::MatrixXd V_inv =
      llt.solve(Eigen::MatrixXd::Identity(p, p));

  for (Eigen::Index j = 0; j < p; ++j) {
    if (fit.design.kinds[static_cast<std::size_t>(j)] == ColumnKind::intercept)
      continue;
    const StudentTDist prior_m{fit.prior.mu[j],
                               std::sqrt(fit.prior.b / fit.prior.a * V_inv(j, j)),
                               fit.prior.a};
    const StudentTDist post_m = fit.post.coef_marginal(static_cast<std::size_t>(j));
    const double prior0 = pdf(ScalarDist{prior_m}, 0.0);
    const double post0 = pdf(ScalarDist{post_m}, 0.0);
    BayesFactor bf;
    bf.orientation = fit.design.labels[static_cast<std::size_t>(j)] +
                     ": nonzero coefficient vs. zero";
    if (prior0 <= 0.0 || !std::isfinite(prior0) || !std::isfinite(post0)) {
      bf.value = std::numeric_limits<double>::quiet_NaN();
      bf.jeffreys_label = "undefined (zero prior density at the null)";
    } else {
      bf.value = prior0 / post0;  // Savage-Dickey, alternative over null
      bf.jeffreys_label = jeffreys_label(bf.value);
      bf.direction_text =
          interpret_bf(bf.value, "keeping in the model", "excluding from the model");
    }
    out.per_coefficient.push_back(std::move(bf));
  }

  // null model: intercept-only with the same variance hyperprior
  Formula f0;
  f0.response = "y";
  DesignSpec d0;
  d0.X = Eigen::MatrixXd::Ones(fit.design.X.rows(), 1);
  d0.y = fit.design.y;
  d0.labels = {"(Intercept)"};
  d0.kinds = {ColumnKind::intercept};
  d0.column_sd = {1.0};
  const auto rs = response_scale(fit.design.y);
  NIGPrior p0;
  p0.kind = fit.prior.kind;
  p0.mu = Eigen::VectorXd::Constant(1, rs.ybar);
  p0.V = Eigen::MatrixXd::Constant(1, 1, 1.0 / (100.0 * rs.s2));
  p0.a = fit.prior.a;
  p0.b = fit.prior.b;
  const auto null_fit = nig_update(d0.X, d0.y, p0);

  out.full_vs_null.value = std::exp(fit.log_marginal - null_fit.log_marginal);
  out.full_vs_null.orientation = "full model vs. intercept-only null";
  out.full_vs_null.jeffreys_label = jeffreys_label(out.full_vs_null.value);
  out.full_vs_null.direction_text =
      interpret_bf(out.full_vs_null.value, "the full model", "the null model");
  return out;
}

InfoCriteria information_criteria(const LinearFit& fit, const RngStream& stream,
                                  const PrecisionTarget& targets) {
  InfoCriteria ic;
  const auto& X = fit.design.X;
  const auto& y = fit.design.y;
  const double n = static_cast<double>(X.rows());
  const double p = static_cast<double>(X.cols());

  // maximum likelihood: OLS coefficients, sigma^2 = RSS / n
  const Eigen::VectorXd beta_hat = X.colPivHouseholderQr().solve(y);
  const double rss_mle = (y - X * beta_hat).squaredNorm();
  const double sigma2_mle = rss_mle / n;
  const double max_ll = -0.5 * n * (kLog2Pi + std::log(sigma2_mle) + 1.0);
  ic.aic = -2.0 * max_ll + 2.0 * (p + 1.0);
  ic.bic = -2.0 * max_ll + (p + 1.0) * std::log(n);

  // DIC with theta_bar = posterior mean, in closed form
  const auto& post = fit.post;
  if (!(post.a_n > 2)) throw NumericalError("DIC needs a_n > 2");
  const double sigma2_bar = post.b_n / (post.a_n - 2.0);
  const double rss_n = fit.residuals.squaredNorm();
  const double ll_at_mean =
      -0.5 * n * (kLog2Pi + std::log(sigma2_bar)) - 0.5 * rss_n / sigma2_bar;
  const double e_log_sigma2 =
      std::log(post.b_n / 2.0) - digamma_fn(post.a_n / 2.0);
  const double e_quad = rss_n * (post.a_n / post.b_n) +
                        (X.transpose() * X * post.V_n_inv).trace();
  const double e_ll = -0.5 * n * (kLog2Pi + e_log_sigma2) - 0.5 * e_quad;
  ic.p_d = 2.0 * (ll_at_mean - e_ll);
  ic.dic = -2.0 * ll_at_mean + 2.0 * ic.p_d;

  // WAIC from planned posterior draws of the pointwise log densities
  PrecisionTarget t = targets;
  t.mean_only = true;
  const auto draws = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        const auto joint = draw_nig_joint(post, rng,
                                          static_cast<std::size_t>(block.rows()));
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const double sigma2 = joint(r, joint.cols() - 1);
          const Eigen::VectorXd mu = X * joint.row(r).head(X.cols()).transpose();
          for (Eigen::Index i = 0; i < block.cols(); ++i) {
            const double resid = y[i] - mu[i];
            block(r, i) = -0.5 * (kLog2Pi + std::log(sigma2)) -
                          0.5 * resid * resid / sigma2;
          }
        }
      },
      t, static_cast<std::size_t>(X.rows()), stream);

  double lppd = 0.0, p_waic = 0.0;
  const auto S = static_cast<double>(draws.total());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto col = draws.draws.col(i);
    const double max_l = col.maxCoeff();
    const double log_mean = max_l + std::log((col.array() - max_l).exp().mean());
    lppd += log_mean;
    const double m = col.mean();
    p_waic += (col.array() - m).square().sum() / (S - 1.0);
  }
  ic.p_waic = p_waic;
  ic.waic = -2.0 * (lppd - p_waic);
  ic.waic_plan = draws.plans.front();
  ic.waic_plan.total_draws = draws.total();
  return ic;
}

DiagnosticsData diagnostics_data(const LinearFit& fit) {
  DiagnosticsData d;
  const auto n = static_cast<std::size_t>(fit.residuals.size());
  d.fitted.assign(fit.fitted.data(), fit.fitted.data() + n);
  d.residuals.assign(fit.residuals.data(), fit.residuals.data() + n);

  const double sd = n >= 2 ? sample_sd(d.residuals) : 1.0;
  d.qq_sample = d.residuals;
  std::sort(d.qq_sample.begin(), d.qq_sample.end());
  for (auto& v : d.qq_sample) v /= (sd > 0 ? sd : 1.0);
  d.qq_theoretical.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    d.qq_theoretical[i] =
        norm_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return d;
}

std::size_t medoid_row(const DesignSpec& design) {
  const std::size_t n = design.n();
  if (n == 1) return 0;

  // per-variable normalized dissimilarities
  struct Var {
    bool factor;
    std::vector<double> value;  // numeric value or level index
    double range = 1.0;
  };
  std::vector<Var> vars;
  for (const auto& term : design.terms) {
    Var v;
    v.factor = term.is_factor;
    v.value.resize(n);
    if (term.is_factor) {
      for (std::size_t i = 0; i < n; ++i) {
        double level = 0;  // reference
        for (std::size_t k = 0; k < term.columns.size(); ++k)
          if (design.X(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(term.columns[k])) == 1.0)
            level = static_cast<double>(k + 1);
        v.value[i] = level;
      }
    } else {
      const auto col = design.X.col(static_cast<Eigen::Index>(term.columns[0]));
      for (std::size_t i = 0; i < n; ++i) v.value[i] = col[static_cast<Eigen::Index>(i)];
      v.range = col.maxCoeff() - col.minCoeff();
      if (v.range <= 0) v.range = 1.0;
    }
    vars.push_back(std::move(v));
  }
  if (vars.empty()) return 0;

  std::size_t best = 0;
  double best_total = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& v : vars)
        total += v.factor ? (v.value[i] != v.value[j] ? 1.0 : 0.0)
                          : std::fabs(v.value[i] - v.value[j]) / v.range;
    }
    if (total < best_total) {
      best_total = total;
      best = i;
    }
  }
  return best;
}

namespace {

// covariate row for prediction, starting from a dataset row and overriding
// the swept variable
Eigen::VectorXd base_row(const DesignSpec& design, std::size_t row,
                         const std::optional<Exemplar>& exemplar) {
  Eigen::VectorXd x = design.X.row(static_cast<Eigen::Index>(row)).transpose();
  if (exemplar) {
    for (const auto& [name, value] : *exemplar) {
      const auto& term = design.terms[design.term_index(name)];
      if (term.is_factor) {
        auto it = std::find(term.levels.begin(), term.levels.end(), value);
        if (it == term.levels.end())
          throw UserError("exemplar level '" + value + "' not found for '" + name + "'");
        const auto idx = static_cast<std::size_t>(it - term.levels.begin());
        for (std::size_t k = 0; k < term.columns.size(); ++k)
          x[static_cast<Eigen::Index>(term.columns[k])] = (idx == k + 1) ? 1.0 : 0.0;
      } else {
        try {
          x[static_cast<Eigen::Index>(term.columns[0])] = std::stod(value);
        } catch (const std::exception&) {
          throw UserError("exemplar value for '" + name + "' must be numeric");
        }
      }
    }
  }
  return x;
}

}  // namespace

CredibleBand credible_band(const LinearFit& fit, const std::string& variable,
                           double ci_level, const std::optional<Exemplar>& exemplar,
                           std::size_t grid_size) {
  const auto& design = fit.design;
  const auto& term = design.terms[design.term_index(variable)];
  CredibleBand band;
  band.variable = variable;
  band.medoid_row = medoid_row(design);
  Eigen::VectorXd x = base_row(design, band.medoid_row, exemplar);

  const double alpha = (1.0 - ci_level) / 2.0;
  auto eval = [&](const Eigen::VectorXd& row, double grid_x,
                  const std::string& level) {
    const StudentTDist m = fit.post.linear_marginal(row);
    BandPoint pt;
    pt.x = grid_x;
    pt.level = level;
    pt.center = m.loc;
    pt.lower = quantile(ScalarDist{m}, alpha);
    pt.upper = quantile(ScalarDist{m}, 1.0 - alpha);
    band.points.push_back(pt);
  };

  if (term.is_factor) {
    for (std::size_t lv = 0; lv < term.levels.size(); ++lv) {
      Eigen::VectorXd row = x;
      for (std::size_t k = 0; k < term.columns.size(); ++k)
        row[static_cast<Eigen::Index>(term.columns[k])] = (lv == k + 1) ? 1.0 : 0.0;
      eval(row, static_cast<double>(lv), term.levels[lv]);
    }
  } else {
    const auto col = design.X.col(static_cast<Eigen::Index>(term.columns[0]));
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    const std::size_t g = std::max<std::size_t>(grid_size, 2);
    for (std::size_t i = 0; i < g; ++i) {
      const double v = lo + (hi - lo) * static_cast<double>(i) / (g - 1.0);
      Eigen::VectorXd row = x;
      row[static_cast<Eigen::Index>(term.columns[0])] = v;
      eval(row, v, "");
    }
  }
  return band;
}

AnovaFit fit_aov(const DesignSpec& design, const RngStream& stream,
                 const PrecisionTarget& targets, double ci_level,
                 std::optional<RopeBounds> diff_rope) {
  if (design.terms.size() != 1 || !design.terms[0].is_factor)
    throw UserError("one-way ANOVA expects exactly one factor term");
  const auto& term = design.terms[0];
  const std::size_t k = term.levels.size();

  // group the response by factor level
  std::vector<std::vector<double>> y_by_group(k);
  for (std::size_t i = 0; i < design.n(); ++i) {
    std::size_t level = 0;
    for (std::size_t c = 0; c < term.columns.size(); ++c)
      if (design.X(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(term.columns[c])) == 1.0)
        level = c + 1;
    y_by_group[level].push_back(design.y[static_cast<Eigen::Index>(i)]);
  }
  for (std::size_t g = 0; g < k; ++g)
    if (y_by_group[g].size() < 2)
      throw UserError("factor level '" + term.levels[g] +
                      "' has fewer than 2 observations");

  // pooled-data hyperpriors, shared across groups and the pooled null
  const auto rs = response_scale(design.y);
  const double v0 = 1.0 / (100.0 * rs.s2);
  const auto [a0, b0] = variance_hyperparms(rs.s2);

  AnovaFit fit;
  double log_ml_full = 0.0;
  for (std::size_t g = 0; g < k; ++g) {
    fit.groups.push_back(
        scalar_nig(y_by_group[g], rs.ybar, v0, a0, b0, term.levels[g]));
    log_ml_full += fit.groups.back().log_marginal;
  }
  const std::span<const double> all_y(design.y.data(),
                                      static_cast<std::size_t>(design.y.size()));
  const double log_ml_null =
      scalar_nig(all_y, rs.ybar, v0, a0, b0, "pooled").log_marginal;

  fit.full_vs_null.value = std::exp(log_ml_full - log_ml_null);
  fit.full_vs_null.orientation =
      "separate " + term.name + " distributions (full) vs. one pooled distribution (null)";
  fit.full_vs_null.jeffreys_label = jeffreys_label(fit.full_vs_null.value);
  fit.full_vs_null.direction_text = interpret_bf(
      fit.full_vs_null.value, "separate distributions", "a single pooled distribution");

  // closed-form per-level summaries
  for (const auto& g : fit.groups) {
    auto ms = summarize_closed_form(ScalarDist{g.mean_marginal()},
                                    "Mean : " + term.name + " : " + g.level, ci_level);
    fit.mean_summaries.push_back(std::move(ms));
    auto vs = summarize_closed_form(ScalarDist{g.var_posterior()},
                                    "Var : " + term.name + " : " + g.level, ci_level);
    vs.prob_direction = 1.0;  // variances are positive by construction
    fit.var_summaries.push_back(std::move(vs));
  }

  // pooled within-group SD for the default mean-difference ROPE
  double ss = 0.0, dof = 0.0;
  for (std::size_t g = 0; g < k; ++g) {
    const double sg2 = sample_variance(y_by_group[g]);
    ss += (static_cast<double>(y_by_group[g].size()) - 1.0) * sg2;
    dof += static_cast<double>(y_by_group[g].size()) - 1.0;
  }
  fit.pooled_sd = std::sqrt(ss / dof);
  const RopeBounds rope = diff_rope ? *diff_rope
                                    : default_rope(RopeKind::mean_difference,
                                                   std::nullopt, fit.pooled_sd);

  // sampled pairwise differences and EPR
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t g = 0; g < k; ++g)
    for (std::size_t h = g + 1; h < k; ++h) pairs.emplace_back(g, h);
  if (pairs.empty()) return fit;

  PrecisionTarget t = targets;
  t.ci_level = ci_level;
  const std::size_t n_est = 2 * pairs.size();
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        std::vector<double> mu(k), var(k);
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          for (std::size_t g = 0; g < k; ++g) {
            var[g] = rng.inv_gamma(fit.groups[g].a_n / 2.0, fit.groups[g].b_n / 2.0);
            mu[g] = fit.groups[g].mu_n +
                    std::sqrt(var[g] / fit.groups[g].kappa_n) * rng.normal();
          }
          for (std::size_t q = 0; q < pairs.size(); ++q) {
            const auto [g, h] = pairs[q];
            block(r, static_cast<Eigen::Index>(2 * q)) = mu[g] - mu[h];
            block(r, static_cast<Eigen::Index>(2 * q + 1)) =
                norm_cdf((mu[g] - mu[h]) / std::sqrt(var[g] + var[h]));
          }
        }
      },
      t, n_est, stream);
  fit.plans = res.plans;

  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [g, h] = pairs[q];
    const std::string name = term.levels[g] + "-" + term.levels[h];
    const auto diff_col = res.draws.col(static_cast<Eigen::Index>(2 * q));
    const auto epr_col = res.draws.col(static_cast<Eigen::Index>(2 * q + 1));
    fit.diff_summaries.push_back(summarize_draws(
        std::span<const double>(diff_col.data(), res.total()), name, ci_level, rope, 0.0));
    fit.epr_summaries.push_back(summarize_draws(
        std::span<const double>(epr_col.data(), res.total()), "EPR " + name,
        ci_level, std::nullopt, 0.5));
  }
  return fit;
}

BayesFactor heteroscedasticity_bf(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw UserError("need at least 2 groups");
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.size() < 2) throw UserError("every group needs at least 2 observations");
    all.insert(all.end(), g.begin(), g.end());
  }
  const double ybar = mean(all);
  const double s2 = sample_variance(all);
  if (!(s2 > 0)) throw UserError("pooled data are constant");
  const double v0 = 1.0 / (100.0 * s2);
  const auto [a0, b0] = variance_hyperparms(s2);

  // shared sigma^2, per-group means: cell-means design
  const std::size_t n = all.size();
  const std::size_t k = groups.size();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd y(n);
  {
    std::size_t row = 0;
    for (std::size_t g = 0; g < k; ++g)
      for (double v : groups[g]) {
        X(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(g)) = 1.0;
        y[static_cast<Eigen::Index>(row)] = v;
        ++row;
      }
  }
  NIGPrior shared;
  shared.mu = Eigen::VectorXd::Constant(k, ybar);
  shared.V = v0 * Eigen::MatrixXd::Identity(k, k);
  shared.a = a0;
  shared.b = b0;
  const double log_ml_shared = nig_update(X, y, shared).log_marginal;

  double log_ml_separate = 0.0;
  for (const auto& g : groups)
    log_ml_separate += scalar_nig(g, ybar, v0, a0, b0, "group").log_marginal;

  BayesFactor bf;
  bf.value = std::exp(log_ml_shared - log_ml_separate);
  bf.orientation = "equal variances vs. unequal variances";
  bf.jeffreys_label = jeffreys_label(bf.value);
  bf.direction_text = interpret_bf(bf.value, "equal variances", "unequal variances");
  return bf;
}

}  // namespace bayesics
