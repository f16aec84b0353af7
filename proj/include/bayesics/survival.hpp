#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "bayesics/design.hpp"
#include "bayesics/dist.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

/// One hazard interval: conjugate Gamma posterior from events and exposure.
struct HazardInterval {
  double t_lo = 0.0;
  double t_hi = 0.0;  // +inf on the last interval
  double prior_shape = 0.0;
  double prior_rate = 0.0;
  double events = 0.0;
  double exposure = 0.0;

  GammaDist posterior() const {
    return GammaDist{prior_shape + events, prior_rate + exposure};
  }
};

struct GroupHazard {
  std::string level;
  std::size_t n = 0;
  std::size_t n_events = 0;
  std::vector<HazardInterval> intervals;
  double log_marginal = 0.0;
};

/// Piecewise-exponential model: step hazard between shared knots, conjugate
/// gamma posteriors per (group, interval), closed-form marginal likelihood.
struct PiecewiseExpModel {
  std::vector<double> boundaries;  // interior knots, increasing (may be empty)
  std::vector<GroupHazard> groups;
  double log_marginal = 0.0;       // sum over groups
  double t_max_observed = 0.0;     // longest follow-up, for default curve grids
  std::string group_variable;      // empty for pooled fits
  std::vector<std::pair<std::size_t, double>> knot_search;  // (K, log ML)
};

/// Fits with interior knots at event-time quantiles, choosing the interval
/// count K in 1..k_max by maximizing the total closed-form marginal
/// likelihood. Knots are shared across groups.
PiecewiseExpModel fit_survival(const DesignSpec& design, std::size_t k_max = 10,
                               double prior_rate = 0.1);

/// Closed-form single-interval log marginal likelihood (exposed for tests):
/// integral of lambda^d e^(-lambda T) against a Gamma(shape, rate) prior.
double interval_log_marginal(double prior_shape, double prior_rate, double events,
                             double exposure);

/// Cumulative-hazard draws for one group at the requested times
/// (rows = draws, cols = times).
Eigen::MatrixXd cumulative_hazard_draws(const PiecewiseExpModel& model,
                                        std::size_t group, RngStream& rng,
                                        std::size_t n_draws,
                                        std::span<const double> times);

struct SurvivalCurve {
  std::string level;
  std::vector<double> times;
  std::vector<double> median;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<SamplePlan> plans;
};

/// Pointwise S(t) bands via planned draws; quantiles computed on the
/// cumulative hazard and mapped through exp(-H).
SurvivalCurve survival_curve(const PiecewiseExpModel& model, std::size_t group,
                             const RngStream& stream,
                             const PrecisionTarget& targets = {},
                             double ci_level = 0.95,
                             std::span<const double> times = {});

/// Evidence ratio of two fits of the same data (e.g. pooled vs by-group).
BayesFactor survival_group_bf(const PiecewiseExpModel& model_a,
                              const PiecewiseExpModel& model_b,
                              const std::string& label_a = "pooled",
                              const std::string& label_b = "by group");

}  // namespace bayesics
