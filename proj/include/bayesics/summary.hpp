#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bayesics/dist.hpp"

namespace bayesics {

struct RopeBounds {
  double lo = 0.0, hi = 0.0;
};

/// Per-estimand inferential record: point estimate, equal-tailed CI,
/// probability of direction, ROPE probability, and optional Bayes factor.
struct InferenceSummary {
  std::string label;
  double post_mean = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double ci_level = 0.95;
  double prob_direction = 0.5;
  std::optional<double> rope_prob;
  std::optional<RopeBounds> rope_bounds;
  std::optional<double> bayes_factor;
  std::optional<std::string> bf_interpretation;
};

struct BayesFactor {
  double value = 1.0;
  std::string orientation;   // names the hypothesis pair, e.g. "full vs. null model"
  std::string jeffreys_label;
  std::string direction_text;  // which side the evidence favors
};

/// Equal-tailed type-7 quantile CI, mean, PDir relative to null_value
/// (0 for signed estimands, 1 for ratios), ROPE fraction when bounds given.
InferenceSummary summarize_draws(std::span<const double> draws,
                                 const std::string& label, double ci_level,
                                 std::optional<RopeBounds> rope = std::nullopt,
                                 double null_value = 0.0);

/// Exact version of summarize_draws for closed-form posteriors.
InferenceSummary summarize_closed_form(const ScalarDist& dist,
                                       const std::string& label, double ci_level,
                                       std::optional<RopeBounds> rope = std::nullopt,
                                       double null_value = 0.0);

/// summarize_draws for self-normalized weighted samples (importance fits).
InferenceSummary summarize_weighted_draws(std::span<const double> draws,
                                          std::span<const double> weights,
                                          const std::string& label, double ci_level,
                                          std::optional<RopeBounds> rope = std::nullopt,
                                          double null_value = 0.0);

/// Exceedance-in-pairs rate for two normal populations: per paired draw,
/// EPR = Phi((mu_g - mu_h) / sqrt(var_g + var_h)); summarized around 0.5.
InferenceSummary epr_summary(std::span<const double> mu_g,
                             std::span<const double> var_g,
                             std::span<const double> mu_h,
                             std::span<const double> var_h, double ci_level);

/// Per-draw EPR values (used when the caller wants the raw vector).
std::vector<double> epr_draws(std::span<const double> mu_g,
                              std::span<const double> var_g,
                              std::span<const double> mu_h,
                              std::span<const double> var_h);

/// Evidence-strength label applied to max(bf, 1/bf); step function of
/// log10 with cut points 0.5, 1, 1.5, 2.
std::string jeffreys_label(double bf);

/// Full interpretation string, e.g. "Strong (in favor of keeping in the model)".
std::string interpret_bf(double bf, const std::string& favored_when_above_one,
                         const std::string& favored_when_below_one);

enum class RopeKind { mean_difference, linear_slope, log_odds_slope, log_rate_ratio };

// Default ROPE bounds:
//   mean difference          -> +-0.1 * pooled response SD
//   linear slope             -> +-0.1 * response SD / covariate SD
//   log-odds / log-rate slope, binary covariate     -> +-log(1.125)
//   log-odds / log-rate slope, continuous covariate -> +-log(1.125) / covariate SD
// Link-scale bounds; report ratios by exponentiating.
RopeBounds default_rope(RopeKind kind,
                        std::optional<double> covariate_sd = std::nullopt,
                        std::optional<double> response_sd = std::nullopt);

struct BetaParms {
  double shape1 = 1.0, shape2 = 1.0;
  bool exact = true;  // false: best-effort fit, target not attainable
};

/// Beta shapes matching a mean and one quantile: shape2 is pinned by the
/// mean, shape1 found by bisection so the quantile matches within 1e-8.
BetaParms find_beta_parms(double target_mean, double target_quantile_prob,
                          double target_quantile_value);

struct InvGammaParms {
  double shape = 1.0, rate = 1.0;
  bool exact = true;
};

/// Inverse-gamma (shape, rate) matching two quantiles within 1e-6 relative.
InvGammaParms find_invgamma_parms(double q1_prob, double q1_value,
                                  double q2_prob, double q2_value);

/// Coefficient-of-determination mode: 50% central prior probability that the
/// residual variance lies between 0.19 and 0.99 of the response variance.
InvGammaParms find_invgamma_parms_rsq(double response_variance);

}  // namespace bayesics
