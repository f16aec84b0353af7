#include "bayesics/mc_plan.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bayesics/dist.hpp"
#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

namespace {

double z_for_coverage(double s) {
  if (!(s > 0 && s < 1)) throw UserError("coverage probability s must lie in (0,1)");
  return norm_quantile(0.5 + s / 2.0);
}

std::size_t to_count(double real) {
  if (!(real < 1e18)) throw NumericalError("sample-size formula overflowed");
  return static_cast<std::size_t>(std::ceil(real));
}

constexpr std::size_t kBatch = 8192;

}  // namespace

double quantile_sample_size_real(double alpha_half, double s, double epsilon,
                                 double density) {
  if (!(alpha_half > 0 && alpha_half < 0.5))
    throw UserError("alpha/2 must lie in (0, 0.5)");
  if (!(epsilon > 0)) throw UserError("epsilon must be positive");
  if (!(density > 0))
    throw NumericalError(
        "estimated posterior density at the quantile is not positive; "
        "increase the pilot sample");
  const double z = z_for_coverage(s);
  const double r = z / (epsilon * density);
  return alpha_half * (1.0 - alpha_half) * r * r;
}

std::size_t quantile_sample_size(double alpha_half, double s, double epsilon,
                                 double density) {
  return to_count(quantile_sample_size_real(alpha_half, s, epsilon, density));
}

double mean_sample_size_real(double variance, double s, double epsilon) {
  if (!(variance > 0)) throw UserError("variance must be positive");
  if (!(epsilon > 0)) throw UserError("epsilon must be positive");
  const double z = z_for_coverage(s);
  return variance * (z / epsilon) * (z / epsilon);
}

std::size_t mean_sample_size(double variance, double s, double epsilon) {
  return to_count(mean_sample_size_real(variance, s, epsilon));
}

double sample_size_ratio(double alpha, double variance, double density_at_quantile) {
  if (!(alpha > 0 && alpha < 1)) throw UserError("alpha must lie in (0,1)");
  if (!(variance > 0) || !(density_at_quantile > 0))
    throw UserError("variance and density must be positive");
  const double p = alpha / 2.0;
  return p * (1.0 - p) / (variance * density_at_quantile * density_at_quantile);
}

double estimate_density_at_quantile(std::span<const double> draws, double p) {
  if (draws.size() < 100)
    throw UserError("density estimation needs at least 100 pilot draws");
  for (double d : draws)
    if (!std::isfinite(d)) throw NumericalError("non-finite pilot draw");
  const double q = quantile_type7(draws, p);
  return kde_gaussian(draws, q);  // throws on zero bandwidth
}

AdaptiveDraws run_adaptive_sampler(const DrawBlockFn& draw_fn,
                                   const PrecisionTarget& targets,
                                   std::size_t n_estimands,
                                   const RngStream& stream) {
  if (n_estimands == 0) throw UserError("no estimands to monitor");
  if (!(targets.s > 0 && targets.s < 1) ||
      !(targets.ci_level > 0 && targets.ci_level < 1))
    throw UserError("invalid precision target");
  const std::size_t pilot = std::max<std::size_t>(targets.pilot_size, 100);

  AdaptiveDraws out;
  out.draws.resize(static_cast<Eigen::Index>(pilot),
                   static_cast<Eigen::Index>(n_estimands));
  {
    RngStream pilot_stream = stream.child(0);
    draw_fn(pilot_stream, out.draws.topRows(static_cast<Eigen::Index>(pilot)));
  }

  const double alpha_half = (1.0 - targets.ci_level) / 2.0;
  out.plans.resize(n_estimands);
  std::size_t total = pilot;
  for (std::size_t k = 0; k < n_estimands; ++k) {
    SamplePlan& plan = out.plans[k];
    plan.pilot_size = pilot;
    const auto col = std::span<const double>(out.draws.col(static_cast<Eigen::Index>(k)).data(),
                                             pilot);
    const double sd = sample_sd(col);
    if (!std::isfinite(sd)) throw NumericalError("non-finite pilot draws");
    if (sd == 0.0) {
      // degenerate estimand: every draw reproduces it exactly
      plan.epsilon = targets.epsilon > 0 ? targets.epsilon : 0.0;
      plan.total_draws = pilot;
      continue;
    }
    plan.epsilon = targets.epsilon > 0 ? targets.epsilon : 0.02 * sd;
    plan.M = mean_sample_size(sd * sd, targets.s, plan.epsilon);
    if (!targets.mean_only) {
      plan.density_at_lower = estimate_density_at_quantile(col, alpha_half);
      plan.density_at_upper = estimate_density_at_quantile(col, 1.0 - alpha_half);
      plan.L_lower = quantile_sample_size(alpha_half, targets.s, plan.epsilon,
                                          plan.density_at_lower);
      plan.L_upper = quantile_sample_size(alpha_half, targets.s, plan.epsilon,
                                          plan.density_at_upper);
    }
    plan.total_draws = std::max({pilot, plan.L_lower, plan.L_upper, plan.M});
    total = std::max(total, plan.total_draws);
  }

  if (total > targets.hard_cap) {
    if (!targets.clamp_to_cap)
      throw NumericalError(
          "planned draw count " + std::to_string(total) + " exceeds the cap of " +
          std::to_string(targets.hard_cap) +
          "; increase the accuracy tolerance epsilon");
    total = targets.hard_cap;
    for (auto& plan : out.plans) plan.total_draws = std::min(plan.total_draws, total);
  }

  if (total > pilot) {
    out.draws.conservativeResize(static_cast<Eigen::Index>(total), Eigen::NoChange);
    std::size_t done = pilot;
    std::uint64_t batch_index = 1;
    while (done < total) {
      const std::size_t take = std::min(kBatch, total - done);
      RngStream batch_stream = stream.child(batch_index++);
      draw_fn(batch_stream,
              out.draws.middleRows(static_cast<Eigen::Index>(done),
                                   static_cast<Eigen::Index>(take)));
      done += take;
    }
  }
  return out;
}

}  // namespace bayesics
