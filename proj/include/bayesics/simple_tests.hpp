#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "bayesics/design.hpp"
#include "bayesics/linear.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

// One- and two-sample analyses. Two-population sampling draws each
// population's parameters from stream.child(pop_streams[k]); passing swapped
// ids reproduces the exact mirrored draws, which the label-exchange
// invariance tests rely on.

struct TTestResult {
  bool two_sample = true;
  AnovaFit anova;  // group posteriors, difference/EPR summaries, BF, plans

  // one-sample path (formula "y ~ 1")
  std::optional<InferenceSummary> mean_summary;
  std::optional<InferenceSummary> var_summary;
  std::optional<BayesFactor> point_null_bf;  // free mean vs mean == null_value

  // diagnostics: standardized qq pairs and centered residuals per group
  std::vector<std::string> diag_levels;
  std::vector<std::vector<double>> qq_theoretical;
  std::vector<std::vector<double>> qq_sample;
  std::vector<std::vector<double>> residuals;
};

/// Unequal-variance normal model: each group its own conjugate
/// normal-inverse-gamma posterior with pooled-data hyperpriors.
TTestResult t_test(const DesignSpec& design, const RngStream& stream,
                   const PrecisionTarget& targets = {}, double ci_level = 0.95,
                   std::optional<RopeBounds> rope = std::nullopt,
                   double null_value = 0.0);

struct PropTestResult {
  std::vector<InferenceSummary> proportions;  // closed-form Beta posteriors
  std::vector<BetaDist> posteriors;
  std::optional<InferenceSummary> odds_ratio; // two-sample, ratio scale
  std::vector<SamplePlan> plans;
};

/// prior_shape1 = prior_shape2 = 0.5 is the Jeffreys default; 1/1 uniform.
PropTestResult prop_test(std::span<const long> successes,
                         std::span<const long> trials, const RngStream& stream,
                         const PrecisionTarget& targets = {},
                         double ci_level = 0.95, double prior_shape1 = 0.5,
                         double prior_shape2 = 0.5,
                         std::optional<RopeBounds> or_rope = std::nullopt,
                         std::array<std::uint64_t, 2> pop_streams = {1, 2});

struct PoissonTestResult {
  std::vector<InferenceSummary> rates;        // closed-form Gamma posteriors
  std::vector<GammaDist> posteriors;
  std::optional<InferenceSummary> rate_ratio; // two-sample, ratio scale
  std::vector<SamplePlan> plans;
};

/// Gamma(a0 + y, b0 + omega) conjugate updates; scale-free default
/// (a0, b0) = (1/2, 0).
PoissonTestResult poisson_test(std::span<const long> counts,
                               std::span<const double> offsets,
                               const RngStream& stream,
                               const PrecisionTarget& targets = {},
                               double ci_level = 0.95, double prior_shape = 0.5,
                               double prior_rate = 0.0,
                               std::optional<RopeBounds> ratio_rope = std::nullopt,
                               std::array<std::uint64_t, 2> pop_streams = {1, 2});

struct SignTestResult {
  InferenceSummary p_positive;  // Pr(positive difference), closed form
  BetaDist posterior;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_zero = 0;  // dropped
};

SignTestResult sign_test(std::span<const double> differences,
                         double prior_shape1 = 1.0, double prior_shape2 = 1.0,
                         double ci_level = 0.95,
                         std::optional<RopeBounds> rope = std::nullopt);

struct ChisqTestResult {
  BayesFactor independence_bf;  // independence vs saturated
  double log_ml_independent = 0.0;
  double log_ml_saturated = 0.0;
  std::vector<InferenceSummary> cell_probs;  // Dirichlet(1 + y) marginals
};

/// Independence Bayes factor for an r x c table under the joint-multinomial
/// scheme with uniform Dirichlet priors on the joint and on both margins.
ChisqTestResult chisq_test(const Eigen::MatrixXd& table);

struct CaseControlResult {
  InferenceSummary exposure_cases;
  InferenceSummary exposure_controls;
  InferenceSummary odds_ratio;  // sampled, ratio scale
  std::vector<SamplePlan> plans;
};

CaseControlResult case_control(long cases_exposed, long cases_unexposed,
                               long controls_exposed, long controls_unexposed,
                               const RngStream& stream,
                               const PrecisionTarget& targets = {},
                               double ci_level = 0.95,
                               std::optional<RopeBounds> or_rope = std::nullopt,
                               double prior_shape1 = 0.5, double prior_shape2 = 0.5,
                               std::array<std::uint64_t, 2> pop_streams = {1, 2});

/// Ratio-scale summary built from log-scale draws: CI endpoints are
/// exponentiated log-scale quantiles, PDir/ROPE computed on the log scale,
/// point estimate is the mean of the ratio draws.
InferenceSummary summarize_ratio_from_log_draws(std::span<const double> log_draws,
                                                const std::string& label,
                                                double ci_level,
                                                std::optional<RopeBounds> ratio_rope);

}  // namespace bayesics
