#pragma once

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bayesics/design.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

/// Normal-inverse-gamma prior: beta | sigma^2 ~ N(mu, sigma^2 V^-1),
/// sigma^2 ~ InvGamma(a/2, b/2).
struct NIGPrior {
  enum class Kind { zellner_g, conjugate, custom };

  Eigen::VectorXd mu;
  Eigen::MatrixXd V;
  double a = 1.0;
  double b = 1.0;
  Kind kind = Kind::custom;
};

struct NIGPosterior {
  Eigen::VectorXd mu_n;
  Eigen::MatrixXd V_n;
  Eigen::MatrixXd V_n_inv;
  double a_n = 0.0;
  double b_n = 0.0;

  /// Marginal law of one coefficient: t(df = a_n, loc, scale).
  StudentTDist coef_marginal(std::size_t j) const;
  /// Marginal law of x'beta for a covariate row x.
  StudentTDist linear_marginal(const Eigen::VectorXd& x) const;
  /// sigma^2 | y.
  InvGammaDist sigma2_posterior() const;
};

struct LinearFit {
  DesignSpec design;
  NIGPrior prior;
  NIGPosterior post;
  double log_marginal = 0.0;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  std::vector<std::string> warnings;
};

/// Zellner-g default (g = n) on non-intercept columns; vague independent
/// intercept prior centered at ybar; (a, b) from the R^2-motivated
/// inverse-gamma elicitation.
NIGPrior default_zellner_prior(const DesignSpec& design);

/// "Factor of five" elicitation: independent coefficient priors whose
/// marginal t scale is 5 s_y / (1.96 s_xj); same intercept/variance
/// treatment as the Zellner default.
NIGPrior conjugate_elicited_prior(const DesignSpec& design);

LinearFit fit_lm(const DesignSpec& design,
                 std::optional<NIGPrior> prior = std::nullopt);

/// Joint posterior draws: each row is (beta..., sigma^2).
Eigen::MatrixXd draw_nig_joint(const NIGPosterior& post, RngStream& rng,
                               std::size_t n_draws);

struct CoefficientBFs {
  std::vector<BayesFactor> per_coefficient;  // Savage-Dickey, alternative vs null
  BayesFactor full_vs_null;                  // evidence ratio vs intercept-only
};

CoefficientBFs coefficient_bayes_factors(const LinearFit& fit);

struct InfoCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double dic = 0.0;
  double waic = 0.0;
  double p_d = 0.0;      // DIC effective parameters
  double p_waic = 0.0;
  SamplePlan waic_plan;  // draw plan behind the WAIC expectations
};

InfoCriteria information_criteria(const LinearFit& fit, const RngStream& stream,
                                  const PrecisionTarget& targets = {});

struct DiagnosticsData {
  std::vector<double> fitted;
  std::vector<double> residuals;
  std::vector<double> qq_theoretical;  // standard-normal quantiles
  std::vector<double> qq_sample;       // sorted standardized residuals
};

DiagnosticsData diagnostics_data(const LinearFit& fit);

/// Exemplar covariate settings by variable name; numeric variables take a
/// number rendered as text, factors take a level name.
using Exemplar = std::map<std::string, std::string>;

struct BandPoint {
  double x = 0.0;        // grid value (factor level index for factors)
  std::string level;     // factor level name, empty for numeric variables
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct CredibleBand {
  std::string variable;
  std::vector<BandPoint> points;
  std::size_t medoid_row = 0;   // row used for the off-axis covariates
};

/// Row index minimizing the summed Gower distance to all rows.
std::size_t medoid_row(const DesignSpec& design);

CredibleBand credible_band(const LinearFit& fit, const std::string& variable,
                           double ci_level = 0.95,
                           const std::optional<Exemplar>& exemplar = std::nullopt,
                           std::size_t grid_size = 100);

// ---------------------------------------------------------------------------
// one-way ANOVA with per-group variances

struct GroupPosterior {
  std::string level;
  std::size_t n = 0;
  double mu_n = 0.0;
  double kappa_n = 0.0;  // scalar precision factor
  double a_n = 0.0;
  double b_n = 0.0;
  double log_marginal = 0.0;

  StudentTDist mean_marginal() const;
  InvGammaDist var_posterior() const;
};

struct AnovaFit {
  std::vector<GroupPosterior> groups;
  std::vector<InferenceSummary> mean_summaries;  // closed form
  std::vector<InferenceSummary> var_summaries;   // closed form
  std::vector<InferenceSummary> diff_summaries;  // sampled pairwise differences
  std::vector<InferenceSummary> epr_summaries;   // sampled pairwise EPR
  BayesFactor full_vs_null;  // separate group distributions vs pooled
  double pooled_sd = 0.0;
  std::vector<SamplePlan> plans;
};

/// One-way ANOVA: independent conjugate normal-inverse-gamma models per
/// factor level (separate variances), pooled-data hyperpriors shared across
/// groups and across the pooled null model.
AnovaFit fit_aov(const DesignSpec& design, const RngStream& stream,
                 const PrecisionTarget& targets = {}, double ci_level = 0.95,
                 std::optional<RopeBounds> diff_rope = std::nullopt);

/// Equal-variances Bayes factor: evidence(shared sigma^2, per-group means)
/// over evidence(per-group sigma^2), matched hyperpriors.
BayesFactor heteroscedasticity_bf(const std::vector<std::vector<double>>& groups);

}  // namespace bayesics
