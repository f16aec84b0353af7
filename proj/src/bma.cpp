#include "bayesics/bma.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "bayesics/dist.hpp"
#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

namespace {

struct ModelDrawState {
  std::vector<std::size_t> cols;  // full-design columns incl. intercept
  Eigen::VectorXd mu_n;
  Eigen::MatrixXd chol_Vn_inv;
  double a_n = 0.0, b_n = 0.0;
};

DesignSpec subdesign(const DesignSpec& d, const std::vector<std::size_t>& cols) {
  DesignSpec s;
  s.X.resize(d.X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    s.X.col(static_cast<Eigen::Index>(j)) =
        d.X.col(static_cast<Eigen::Index>(cols[j]));
    s.labels.push_back(d.labels[cols[j]]);
    s.kinds.push_back(d.kinds[cols[j]]);
    s.column_sd.push_back(d.column_sd[cols[j]]);
  }
  s.y = d.y;
  return s;
}

double log_beta_fn(double a, double b) {
  return lgamma_fn(a) + lgamma_fn(b) - lgamma_fn(a + b);
}

}  // namespace

BmaFit fit_bma(const DesignSpec& design, const RngStream& stream,
               const PrecisionTarget& targets, double ci_level,
               ModelPrior model_prior, std::size_t max_covariates) {
  if (!design.has_intercept())
    throw UserError("model averaging expects an intercept column");
  BmaFit fit;
  fit.design = design;
  for (std::size_t j = 0; j < design.p(); ++j)
    if (design.kinds[j] != ColumnKind::intercept) fit.free_columns.push_back(j);
  const std::size_t k = fit.free_columns.size();
  if (k == 0) throw UserError("no covariates to average over");
  if (k > max_covariates)
    throw UserError("model space with " + std::to_string(k) +
                    " covariates exceeds the enumeration cap of " +
                    std::to_string(max_covariates) +
                    "; reduce the covariate set");

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.X.cols())
      throw NumericalError(
          "design matrix is rank deficient (duplicate covariate?)");
  }

  // enumerate subsets; cache what mixture sampling needs
  std::vector<ModelDrawState> states;
  const std::size_t n_models = std::size_t{1} << k;
  double max_logpost = -std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < n_models; ++mask) {
    BmaModel m;
    std::vector<std::size_t> cols{0};  // intercept
    for (std::size_t j = 0; j < k; ++j)
      if (mask & (std::size_t{1} << j)) {
        m.covariates.push_back(fit.free_columns[j]);
        cols.push_back(fit.free_columns[j]);
      }
    const auto sub = subdesign(design, cols);
    const auto sub_fit = fit_lm(sub);
    m.log_marginal = sub_fit.log_marginal;
    switch (model_prior) {
      case ModelPrior::uniform:
        m.log_prior = 0.0;
        break;
      case ModelPrior::beta_binomial:
        m.log_prior = log_beta_fn(1.0 + static_cast<double>(m.covariates.size()),
                                  1.0 + static_cast<double>(k - m.covariates.size()));
        break;
    }
    max_logpost = std::max(max_logpost, m.log_marginal + m.log_prior);
    fit.models.push_back(std::move(m));

    ModelDrawState st;
    st.cols = cols;
    st.mu_n = sub_fit.post.mu_n;
    Eigen::LLT<Eigen::MatrixXd> llt(sub_fit.post.V_n_inv);
    if (llt.info() != Eigen::Success)
      throw NumericalError("posterior covariance factorization failed");
    st.chol_Vn_inv = llt.matrixL();
    st.a_n = sub_fit.post.a_n;
    st.b_n = sub_fit.post.b_n;
    states.push_back(std::move(st));
  }

  double norm = 0.0;
  for (auto& m : fit.models)
    norm += std::exp(m.log_marginal + m.log_prior - max_logpost);
  for (auto& m : fit.models)
    m.posterior_prob = std::exp(m.log_marginal + m.log_prior - max_logpost) / norm;

  fit.inclusion_prob.assign(k, 0.0);
  for (const auto& m : fit.models)
    for (std::size_t c : m.covariates)
      for (std::size_t j = 0; j < k; ++j)
        if (fit.free_columns[j] == c) fit.inclusion_prob[j] += m.posterior_prob;

  // mixture draws over the full coefficient layout (+ sigma^2)
  std::vector<double> cdf(fit.models.size());
  double c = 0.0;
  for (std::size_t i = 0; i < fit.models.size(); ++i) {
    c += fit.models[i].posterior_prob;
    cdf[i] = c;
  }
  const auto p = static_cast<Eigen::Index>(design.p());
  PrecisionTarget t = targets;
  t.ci_level = ci_level;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const double u = rng.uniform();
          const std::size_t mi = static_cast<std::size_t>(
              std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
          const auto& st = states[std::min(mi, states.size() - 1)];
          const double sigma2 = rng.inv_gamma(st.a_n / 2.0, st.b_n / 2.0);
          block.row(r).setZero();
          Eigen::VectorXd z(st.mu_n.size());
          for (Eigen::Index q = 0; q < z.size(); ++q) z[q] = rng.normal();
          const Eigen::VectorXd beta =
              st.mu_n + std::sqrt(sigma2) * (st.chol_Vn_inv * z);
          for (std::size_t q = 0; q < st.cols.size(); ++q)
            block(r, static_cast<Eigen::Index>(st.cols[q])) = beta[static_cast<Eigen::Index>(q)];
          block(r, p) = sigma2;
        }
      },
      t, design.p() + 1, stream);
  fit.draws = res.draws;
  fit.plans = res.plans;

  const std::span<const double> ys(design.y.data(),
                                   static_cast<std::size_t>(design.y.size()));
  const double s_y = sample_sd(ys);
  for (std::size_t j = 0; j < design.p(); ++j) {
    const auto col = fit.draws.col(static_cast<Eigen::Index>(j));
    std::optional<RopeBounds> rope;
    if (design.kinds[j] == ColumnKind::numeric)
      rope = default_rope(RopeKind::linear_slope, design.column_sd[j], s_y);
    else if (design.kinds[j] == ColumnKind::factor_contrast)
      rope = default_rope(RopeKind::mean_difference, std::nullopt, s_y);
    auto unc = summarize_draws(std::span<const double>(col.data(), res.total()),
                               design.labels[j] + " (unconditional)", ci_level,
                               rope, 0.0);
    fit.unconditional.push_back(std::move(unc));

    std::vector<double> present;
    for (Eigen::Index r = 0; r < fit.draws.rows(); ++r)
      if (fit.draws(r, static_cast<Eigen::Index>(j)) != 0.0)
        present.push_back(fit.draws(r, static_cast<Eigen::Index>(j)));
    if (present.size() >= 2) {
      fit.conditional.push_back(summarize_draws(
          present, design.labels[j] + " (given inclusion)", ci_level, rope, 0.0));
    } else {
      InferenceSummary s;
      s.label = design.labels[j] + " (given inclusion: too few draws)";
      s.ci_level = ci_level;
      fit.conditional.push_back(std::move(s));
    }
  }
  return fit;
}

std::vector<BmaPValue> bma_bayesian_pvalue(const BmaFit& fit,
                                           const RngStream& stream,
                                           const std::vector<double>& quantile_probs,
                                           const PrecisionTarget& targets) {
  if (quantile_probs.empty()) throw UserError("no quantile probabilities given");
  const auto n = static_cast<Eigen::Index>(fit.design.n());
  const auto p = static_cast<Eigen::Index>(fit.design.p());

  std::vector<double> t_obs;
  const std::vector<double> yv(fit.design.y.data(), fit.design.y.data() + n);
  for (double q : quantile_probs) t_obs.push_back(quantile_type7(yv, q));

  PrecisionTarget t = targets;
  t.mean_only = true;
  RngStream noise = stream.child(0xBEEF);
  std::size_t batch_no = 0;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        RngStream sim = noise.child(batch_no++);
        std::vector<double> y_rep(static_cast<std::size_t>(n));
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          // the stored mixture draws already weight models by posterior
          // probability; a uniform index gives one (beta, sigma^2) draw
          const Eigen::Index pick = std::min(
              static_cast<Eigen::Index>(rng.uniform() *
                                        static_cast<double>(fit.draws.rows())),
              fit.draws.rows() - 1);
          const Eigen::VectorXd beta = fit.draws.row(pick).head(p);
          const double sigma = std::sqrt(fit.draws(pick, p));
          const Eigen::VectorXd mu = fit.design.X * beta;
          for (Eigen::Index i = 0; i < n; ++i)
            y_rep[static_cast<std::size_t>(i)] = mu[i] + sigma * sim.normal();
          for (std::size_t q = 0; q < quantile_probs.size(); ++q) {
            const double t_rep = quantile_type7(y_rep, quantile_probs[q]);
            block(r, static_cast<Eigen::Index>(q)) = t_rep < t_obs[q] ? 1.0 : 0.0;
          }
        }
      },
      t, quantile_probs.size(), stream);

  std::vector<BmaPValue> out;
  for (std::size_t q = 0; q < quantile_probs.size(); ++q) {
    BmaPValue pv;
    pv.quantile_prob = quantile_probs[q];
    pv.p = res.draws.col(static_cast<Eigen::Index>(q)).mean();
    pv.plan = res.plans[q];
    out.push_back(pv);
  }
  return out;
}

}  // namespace bayesics
