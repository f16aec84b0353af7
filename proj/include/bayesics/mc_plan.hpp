#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

#include "bayesics/rng.hpp"

namespace bayesics {

/// Requested Monte Carlo accuracy. epsilon <= 0 selects the scale-free
/// default of 0.02 posterior SDs per estimand, measured on the pilot.
struct PrecisionTarget {
  double epsilon = 0.0;
  double s = 0.95;          // coverage probability of the MC error bound
  double ci_level = 0.95;   // credible level whose tails are planned
  std::size_t pilot_size = 500;
  std::size_t hard_cap = 10'000'000;
  bool mean_only = false;   // plan the posterior mean only (indicator-type estimands)
  bool clamp_to_cap = false;  // truncate the plan at hard_cap instead of failing
};

/// Resolved draw-count plan for one estimand.
struct SamplePlan {
  std::size_t pilot_size = 0;
  double epsilon = 0.0;           // resolved absolute tolerance
  double density_at_lower = 0.0;  // KDE at the alpha/2 pilot quantile
  double density_at_upper = 0.0;  // KDE at the 1-alpha/2 pilot quantile
  std::size_t L_lower = 0;
  std::size_t L_upper = 0;
  std::size_t M = 0;
  std::size_t total_draws = 0;    // max(pilot, L_lower, L_upper, M)
};

// Draw count for a posterior quantile: the order-statistic CLT gives
//   sqrt(L) (qhat - q) -> N(0, p(1-p)/density^2),
// so hitting +-epsilon with probability s needs
//   L = ceil( p(1-p) (z / (epsilon * density))^2 ),  p = alpha_half.
double quantile_sample_size_real(double alpha_half, double s, double epsilon,
                                 double density);
std::size_t quantile_sample_size(double alpha_half, double s, double epsilon,
                                 double density);

/// Draw count for the posterior mean: M = ceil( var * (z/epsilon)^2 ).
double mean_sample_size_real(double variance, double s, double epsilon);
std::size_t mean_sample_size(double variance, double s, double epsilon);

/// Quantile-to-mean draw-count ratio (alpha/2)(1-alpha/2) / (var * density^2);
/// free of epsilon and s.
double sample_size_ratio(double alpha, double variance, double density_at_quantile);

/// Gaussian KDE (Silverman bandwidth) evaluated at the type-7 empirical
/// p-quantile of the pilot draws. Requires >= 100 finite draws.
double estimate_density_at_quantile(std::span<const double> draws, double p);

struct AdaptiveDraws {
  Eigen::MatrixXd draws;           // total_draws x n_estimands
  std::vector<SamplePlan> plans;   // one per estimand
  std::size_t total() const { return static_cast<std::size_t>(draws.rows()); }
};

/// Fills a (batch x n_estimands) block with iid joint posterior draws.
using DrawBlockFn = std::function<void(RngStream&, Eigen::Ref<Eigen::MatrixXd>)>;

/// Pilot-then-top-up driver: draws the pilot, resolves one SamplePlan per
/// estimand, and extends the sample to the max planned size. Batch b uses
/// stream.child(b), so results are byte-stable regardless of scheduling.
AdaptiveDraws run_adaptive_sampler(const DrawBlockFn& draw_fn,
                                   const PrecisionTarget& targets,
                                   std::size_t n_estimands,
                                   const RngStream& stream);

}  // namespace bayesics
