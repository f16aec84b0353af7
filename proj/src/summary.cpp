#include "bayesics/summary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

InferenceSummary summarize_draws(std::span<const double> draws,
                                 const std::string& label, double ci_level,
                                 std::optional<RopeBounds> rope,
                                 double null_value) {
  if (draws.size() < 2) throw UserError("summarize_draws needs at least 2 draws");
  for (double d : draws)
    if (!std::isfinite(d)) throw NumericalError("non-finite draw in summary");
  if (!(ci_level > 0 && ci_level < 1)) throw UserError("ci_level must lie in (0,1)");

  InferenceSummary s;
  s.label = label;
  s.ci_level = ci_level;
  s.post_mean = mean(draws);
  const double a = (1.0 - ci_level) / 2.0;
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  s.ci_lower = quantile_type7_sorted(sorted, a);
  s.ci_upper = quantile_type7_sorted(sorted, 1.0 - a);

  std::size_t above = 0, below = 0;
  for (double d : draws) {
    if (d > null_value) ++above;
    else if (d < null_value) ++below;
  }
  const double n = static_cast<double>(draws.size());
  s.prob_direction = std::max(static_cast<double>(above), static_cast<double>(below)) / n;

  if (rope) {
    if (!(rope->lo < rope->hi)) throw UserError("ROPE bounds must satisfy lo < hi");
    std::size_t inside = 0;
    for (double d : draws)
      if (d > rope->lo && d < rope->hi) ++inside;
    s.rope_prob = static_cast<double>(inside) / n;
    s.rope_bounds = *rope;
  }
  return s;
}

InferenceSummary summarize_closed_form(const ScalarDist& dist,
                                       const std::string& label, double ci_level,
                                       std::optional<RopeBounds> rope,
                                       double null_value) {
  if (!(ci_level > 0 && ci_level < 1)) throw UserError("ci_level must lie in (0,1)");
  InferenceSummary s;
  s.label = label;
  s.ci_level = ci_level;
  s.post_mean = dist_mean(dist);
  const double a = (1.0 - ci_level) / 2.0;
  s.ci_lower = quantile(dist, a);
  s.ci_upper = quantile(dist, 1.0 - a);
  const double F0 = cdf(dist, null_value);
  s.prob_direction = std::max(F0, 1.0 - F0);
  if (rope) {
    if (!(rope->lo < rope->hi)) throw UserError("ROPE bounds must satisfy lo < hi");
    s.rope_prob = cdf(dist, rope->hi) - cdf(dist, rope->lo);
    s.rope_bounds = *rope;
  }
  return s;
}

InferenceSummary summarize_weighted_draws(std::span<const double> draws,
                                          std::span<const double> weights,
                                          const std::string& label, double ci_level,
                                          std::optional<RopeBounds> rope,
                                          double null_value) {
  if (draws.size() != weights.size() || draws.size() < 2)
    throw UserError("weighted summary: mismatched or too-short inputs");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0)) throw UserError("weights must be nonnegative");
    wsum += w;
  }
  if (!(wsum > 0)) throw UserError("total weight must be positive");

  InferenceSummary s;
  s.label = label;
  s.ci_level = ci_level;
  double m = 0.0, above = 0.0, below = 0.0, inside = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    m += weights[i] * draws[i];
    if (draws[i] > null_value) above += weights[i];
    else if (draws[i] < null_value) below += weights[i];
    if (rope && draws[i] > rope->lo && draws[i] < rope->hi) inside += weights[i];
  }
  s.post_mean = m / wsum;
  const double a = (1.0 - ci_level) / 2.0;
  s.ci_lower = weighted_quantile(draws, weights, a);
  s.ci_upper = weighted_quantile(draws, weights, 1.0 - a);
  s.prob_direction = std::max(above, below) / wsum;
  if (rope) {
    if (!(rope->lo < rope->hi)) throw UserError("ROPE bounds must satisfy lo < hi");
    s.rope_prob = inside / wsum;
    s.rope_bounds = *rope;
  }
  return s;
}

std::vector<double> epr_draws(std::span<const double> mu_g,
                              std::span<const double> var_g,
                              std::span<const double> mu_h,
                              std::span<const double> var_h) {
  const std::size_t n = mu_g.size();
  if (var_g.size() != n || mu_h.size() != n || var_h.size() != n)
    throw UserError("EPR requires paired draw vectors of equal length");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = norm_cdf((mu_g[i] - mu_h[i]) / std::sqrt(var_g[i] + var_h[i]));
  return out;
}

InferenceSummary epr_summary(std::span<const double> mu_g,
                             std::span<const double> var_g,
                             std::span<const double> mu_h,
                             std::span<const double> var_h, double ci_level) {
  const auto draws = epr_draws(mu_g, var_g, mu_h, var_h);
  return summarize_draws(draws, "EPR", ci_level, std::nullopt, 0.5);
}

std::string jeffreys_label(double bf) {
  if (!(bf > 0)) throw UserError("Bayes factor must be positive");
  const double mag = std::log10(std::max(bf, 1.0 / bf));
  if (mag < 0.5) return "Barely worth mentioning";
  if (mag < 1.0) return "Substantial";
  if (mag < 1.5) return "Strong";
  if (mag < 2.0) return "Very strong";
  return "Decisive";
}

std::string interpret_bf(double bf, const std::string& favored_when_above_one,
                         const std::string& favored_when_below_one) {
  const std::string& side = bf >= 1.0 ? favored_when_above_one : favored_when_below_one;
  return jeffreys_label(bf) + " (in favor of " + side + ")";
}

RopeBounds default_rope(RopeKind kind, std::optional<double> covariate_sd,
                        std::optional<double> response_sd) {
  const double log_small_effect = std::log(1.125);
  auto need = [](const std::optional<double>& v, const char* what) {
    if (!v || !(*v > 0))
      throw UserError(std::string("default ROPE needs a positive ") + what);
    return *v;
  };
  switch (kind) {
    case RopeKind::mean_difference: {
      const double h = 0.1 * need(response_sd, "response SD");
      return {-h, h};
    }
    case RopeKind::linear_slope: {
      const double h = 0.1 * need(response_sd, "response SD") /
                       need(covariate_sd, "covariate SD");
      return {-h, h};
    }
    case RopeKind::log_odds_slope:
    case RopeKind::log_rate_ratio: {
      double h = log_small_effect;
      if (covariate_sd) h /= need(covariate_sd, "covariate SD");
      return {-h, h};
    }
  }
  throw UserError("unknown ROPE kind");
}

namespace {

// Bisection on log10(x) over [-3, 3]; falls back to the grid minimizer of
// |f| when no sign change exists (best-effort fit).
struct RootResult {
  double x;
  bool exact;
};

RootResult bisect_log_grid(const std::function<double(double)>& f, double tol) {
  constexpr int kGrid = 121;
  double best_x = 1.0, best_abs = std::numeric_limits<double>::infinity();
  double prev_x = 0.0, prev_f = 0.0;
  bool have_prev = false, bracketed = false;
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double x = std::pow(10.0, -3.0 + 6.0 * i / (kGrid - 1.0));
    double fx;
    try {
      fx = f(x);
    } catch (const std::exception&) {
      have_prev = false;
      continue;
    }
    if (!std::isfinite(fx)) {
      have_prev = false;
      continue;
    }
    if (std::fabs(fx) < best_abs) {
      best_abs = std::fabs(fx);
      best_x = x;
    }
    if (have_prev && prev_f * fx <= 0.0) {
      lo = prev_x;
      hi = x;
      bracketed = true;
      break;
    }
    prev_x = x;
    prev_f = fx;
    have_prev = true;
  }
  if (!bracketed) return {best_x, best_abs <= tol};

  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);  // geometric midpoint
    const double fm = f(mid);
    if (std::fabs(fm) <= tol || (hi - lo) / mid < 1e-14) return {mid, true};
    if (flo * fm <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return {std::sqrt(lo * hi), true};
}

}  // namespace

BetaParms find_beta_parms(double target_mean, double target_quantile_prob,
                          double target_quantile_value) {
  if (!(target_mean > 0 && target_mean < 1))
    throw UserError("target mean must lie in (0,1)");
  if (!(target_quantile_prob > 0 && target_quantile_prob < 1))
    throw UserError("quantile probability must lie in (0,1)");
  if (!(target_quantile_value > 0 && target_quantile_value < 1))
    throw UserError("quantile value must lie in (0,1)");

  // symmetric convention
  if (target_mean == 0.5 && target_quantile_prob == 0.5 &&
      target_quantile_value == 0.5)
    return {1.0, 1.0, true};

  const double m = target_mean;
  auto shape2_of = [m](double a) { return a * (1.0 - m) / m; };
  auto gap = [&](double a) {
    return quantile(BetaDist{a, shape2_of(a)}, target_quantile_prob) -
           target_quantile_value;
  };
  const auto r = bisect_log_grid(gap, 1e-8);
  BetaParms out{r.x, shape2_of(r.x), r.exact};
  if (std::fabs(gap(out.shape1)) > 1e-8) out.exact = false;
  return out;
}

InvGammaParms find_invgamma_parms(double q1_prob, double q1_value, double q2_prob,
                                  double q2_value) {
  if (!(q1_value > 0) || !(q2_value > 0))
    throw UserError("quantile values must be positive");
  if (!(q1_value < q2_value))
    throw UserError("quantile values must be strictly increasing");
  if (!(q1_prob > 0 && q2_prob < 1 && q1_prob < q2_prob))
    throw UserError("quantile probabilities must be increasing within (0,1)");

  // Rate is a pure scale: for fixed shape, pin the first quantile exactly
  // and bisect the shape until the second matches.
  auto rate_of = [&](double shape) {
    return q1_value / quantile(InvGammaDist{shape, 1.0}, q1_prob);
  };
  auto gap = [&](double shape) {
    const double q2 = quantile(InvGammaDist{shape, rate_of(shape)}, q2_prob);
    return q2 / q2_value - 1.0;  // relative mismatch
  };
  const auto r = bisect_log_grid(gap, 1e-9);
  InvGammaParms out{r.x, rate_of(r.x), r.exact};
  if (std::fabs(gap(out.shape)) > 1e-6) out.exact = false;
  return out;
}

InvGammaParms find_invgamma_parms_rsq(double response_variance) {
  if (!(response_variance > 0))
    throw UserError("response variance must be positive");
  return find_invgamma_parms(0.25, 0.19 * response_variance, 0.75,
                             0.99 * response_variance);
}

}  // namespace bayesics
