#include "bayesics/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

double interval_log_marginal(double prior_shape, double prior_rate, double events,
                             double exposure) {
  return prior_shape * std::log(prior_rate) - lgamma_fn(prior_shape) +
         lgamma_fn(prior_shape + events) -
         (prior_shape + events) * std::log(prior_rate + exposure);
}

namespace {

struct GroupData {
  std::string level;
  std::vector<double> time;
  std::vector<double> event;
};

GroupHazard tally_group(const GroupData& g, const std::vector<double>& boundaries,
                        double prior_shape, double prior_rate) {
  GroupHazard out;
  out.level = g.level;
  out.n = g.time.size();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> lo{0.0}, hi;
  for (double b : boundaries) {
    hi.push_back(b);
    lo.push_back(b);
  }
  hi.push_back(inf);

  for (std::size_t k = 0; k < lo.size(); ++k) {
    HazardInterval iv;
    iv.t_lo = lo[k];
    iv.t_hi = hi[k];
    iv.prior_shape = prior_shape;
    iv.prior_rate = prior_rate;
    for (std::size_t i = 0; i < g.time.size(); ++i) {
      const double t = g.time[i];
      iv.exposure += std::max(0.0, std::min(t, iv.t_hi) - iv.t_lo);
      if (g.event[i] == 1.0 && t >= iv.t_lo && t < iv.t_hi) iv.events += 1.0;
    }
    out.n_events += static_cast<std::size_t>(iv.events);
    out.log_marginal +=
        interval_log_marginal(prior_shape, prior_rate, iv.events, iv.exposure);
    out.intervals.push_back(iv);
  }
  return out;
}

}  // namespace

PiecewiseExpModel fit_survival(const DesignSpec& design, std::size_t k_max,
                               double prior_rate) {
  if (!design.is_survival)
    throw UserError("fit_survival expects a Surv(time,event) response");
  if (design.terms.size() > 1 ||
      (design.terms.size() == 1 && !design.terms[0].is_factor))
    throw UserError("fit_survival supports '~ 1' or a single factor term");
  if (!(prior_rate > 0)) throw UserError("prior rate must be positive");

  const auto n = static_cast<std::size_t>(design.surv_time.size());
  double total_time = 0.0;
  double t_max = 0.0;
  std::vector<double> event_times;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = design.surv_time[static_cast<Eigen::Index>(i)];
    if (!(t > 0)) throw UserError("survival times must be positive");
    total_time += t;
    t_max = std::max(t_max, t);
    if (design.surv_event[static_cast<Eigen::Index>(i)] == 1.0)
      event_times.push_back(t);
  }
  if (event_times.empty()) throw UserError("no events observed");
  std::sort(event_times.begin(), event_times.end());

  // groups
  std::vector<GroupData> groups;
  if (design.terms.empty()) {
    GroupData g;
    g.level = "all";
    for (std::size_t i = 0; i < n; ++i) {
      g.time.push_back(design.surv_time[static_cast<Eigen::Index>(i)]);
      g.event.push_back(design.surv_event[static_cast<Eigen::Index>(i)]);
    }
    groups.push_back(std::move(g));
  } else {
    const auto& term = design.terms[0];
    groups.resize(term.levels.size());
    for (std::size_t k = 0; k < term.levels.size(); ++k)
      groups[k].level = term.levels[k];
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t level = 0;
      for (std::size_t c = 0; c < term.columns.size(); ++c)
        if (design.X(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(term.columns[c])) == 1.0)
          level = c + 1;
      groups[level].time.push_back(design.surv_time[static_cast<Eigen::Index>(i)]);
      groups[level].event.push_back(design.surv_event[static_cast<Eigen::Index>(i)]);
    }
    for (const auto& g : groups) {
      if (g.time.empty())
        throw UserError("group '" + g.level + "' has no observations");
      if (std::none_of(g.event.begin(), g.event.end(),
                       [](double e) { return e == 1.0; }))
        throw UserError("group '" + g.level + "' has no events");
    }
  }

  // rate-matched prior: alpha_k = beta_k * overall event rate
  const double overall_rate = static_cast<double>(event_times.size()) / total_time;
  const double prior_shape = prior_rate * overall_rate;

  PiecewiseExpModel best;
  double best_ml = -std::numeric_limits<double>::infinity();
  PiecewiseExpModel trace_holder;

  for (std::size_t K = 1; K <= k_max; ++K) {
    // interior knots at event-time quantiles
    std::vector<double> boundaries;
    bool distinct = true;
    for (std::size_t j = 1; j < K; ++j) {
      const double q = quantile_type7_sorted(
          event_times, static_cast<double>(j) / static_cast<double>(K));
      if (!boundaries.empty() && q <= boundaries.back() + 1e-12) {
        distinct = false;
        break;
      }
      boundaries.push_back(q);
    }
    if (!distinct) continue;

    PiecewiseExpModel cand;
    cand.boundaries = boundaries;
    cand.t_max_observed = t_max;
    if (!design.terms.empty()) cand.group_variable = design.terms[0].name;
    for (const auto& g : groups) {
      cand.groups.push_back(tally_group(g, boundaries, prior_shape, prior_rate));
      cand.log_marginal += cand.groups.back().log_marginal;
    }
    trace_holder.knot_search.emplace_back(K, cand.log_marginal);
    if (cand.log_marginal > best_ml) {
      best_ml = cand.log_marginal;
      best = std::move(cand);
    }
  }
  best.knot_search = trace_holder.knot_search;
  return best;
}

Eigen::MatrixXd cumulative_hazard_draws(const PiecewiseExpModel& model,
                                        std::size_t group, RngStream& rng,
                                        std::size_t n_draws,
                                        std::span<const double> times) {
  const auto& g = model.groups.at(group);
  const std::size_t K = g.intervals.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_draws),
                      static_cast<Eigen::Index>(times.size()));
  std::vector<double> lambda(K);
  for (std::size_t s = 0; s < n_draws; ++s) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto post = g.intervals[k].posterior();
      lambda[k] = rng.gamma(post.shape, post.rate);
    }
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      if (t < 0) throw UserError("survival curve time must be nonnegative");
      double H = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const auto& iv = g.intervals[k];
        H += lambda[k] * std::max(0.0, std::min(t, iv.t_hi) - iv.t_lo);
      }
      out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(ti)) = H;
    }
  }
  return out;
}

SurvivalCurve survival_curve(const PiecewiseExpModel& model, std::size_t group,
                             const RngStream& stream,
                             const PrecisionTarget& targets, double ci_level,
                             std::span<const double> times) {
  const auto& g = model.groups.at(group);
  SurvivalCurve curve;
  curve.level = g.level;

  if (times.empty()) {
    double t_max = model.t_max_observed;
    if (t_max <= 0) t_max = 1.0;
    for (int i = 0; i <= 100; ++i) curve.times.push_back(t_max * i / 100.0);
  } else {
    curve.times.assign(times.begin(), times.end());
  }

  PrecisionTarget t = targets;
  t.ci_level = ci_level;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        block = cumulative_hazard_draws(model, group, rng,
                                        static_cast<std::size_t>(block.rows()),
                                        curve.times);
      },
      t, curve.times.size(), stream);
  curve.plans = res.plans;

  const double a = (1.0 - ci_level) / 2.0;
  for (std::size_t ti = 0; ti < curve.times.size(); ++ti) {
    const auto col = res.draws.col(static_cast<Eigen::Index>(ti));
    std::vector<double> h(col.data(), col.data() + res.total());
    std::sort(h.begin(), h.end());
    // upper hazard quantile is the lower survival band
    curve.median.push_back(std::exp(-quantile_type7_sorted(h, 0.5)));
    curve.lower.push_back(std::exp(-quantile_type7_sorted(h, 1.0 - a)));
    curve.upper.push_back(std::exp(-quantile_type7_sorted(h, a)));
  }
  return curve;
}

BayesFactor survival_group_bf(const PiecewiseExpModel& model_a,
                              const PiecewiseExpModel& model_b,
                              const std::string& label_a,
                              const std::string& label_b) {
  std::size_t n_a = 0, n_b = 0, e_a = 0, e_b = 0;
  for (const auto& g : model_a.groups) {
    n_a += g.n;
    e_a += g.n_events;
  }
  for (const auto& g : model_b.groups) {
    n_b += g.n;
    e_b += g.n_events;
  }
  if (n_a != n_b || e_a != e_b)
    throw UserError("Bayes factor requires both fits to use the same data");

  BayesFactor bf;
  bf.value = std::exp(model_a.log_marginal - model_b.log_marginal);
  bf.orientation = label_a + " vs. " + label_b + " survival distributions";
  bf.jeffreys_label = jeffreys_label(bf.value);
  bf.direction_text = interpret_bf(bf.value, label_a, label_b);
  return bf;
}

}  // namespace bayesics
