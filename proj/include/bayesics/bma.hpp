#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "bayesics/design.hpp"
#include "bayesics/linear.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

enum class ModelPrior { uniform, beta_binomial };

struct BmaModel {
  std::vector<std::size_t> covariates;  // included non-intercept column indices
  double log_marginal = 0.0;
  double log_prior = 0.0;
  double posterior_prob = 0.0;
};

struct BmaFit {
  DesignSpec design;
  std::vector<BmaModel> models;           // complete enumeration
  std::vector<std::size_t> free_columns;  // non-intercept design columns
  std::vector<double> inclusion_prob;     // aligned with free_columns
  std::vector<InferenceSummary> unconditional;  // absent coefficients count as 0
  std::vector<InferenceSummary> conditional;    // given inclusion
  Eigen::MatrixXd draws;  // mixture draws: p coefficients + sigma^2
  std::vector<SamplePlan> plans;
};

/// Exhaustive Bayesian model averaging over covariate subsets (intercept
/// always included) with Zellner-g evidences and mixture posterior draws
/// sized by the planner. Caps at max_covariates (enumeration only).
BmaFit fit_bma(const DesignSpec& design, const RngStream& stream,
               const PrecisionTarget& targets = {}, double ci_level = 0.95,
               ModelPrior model_prior = ModelPrior::uniform,
               std::size_t max_covariates = 15);

struct BmaPValue {
  double quantile_prob = 0.5;
  double p = 0.5;
  SamplePlan plan;
};

/// Posterior-predictive p-values with data quantiles as the test statistics,
/// replicated through the model mixture.
std::vector<BmaPValue> bma_bayesian_pvalue(
    const BmaFit& fit, const RngStream& stream,
    const std::vector<double>& quantile_probs = {0.1, 0.25, 0.5, 0.75, 0.9},
    const PrecisionTarget& targets = {});

}  // namespace bayesics
