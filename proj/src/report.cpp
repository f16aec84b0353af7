#include "bayesics/report.hpp"

namespace bayesics {

namespace {

Json summaries_json(const std::vector<InferenceSummary>& v) {
  Json arr = Json::array();
  for (const auto& s : v) arr.push_back(to_json(s));
  return arr;
}

Json plans_json(const std::vector<SamplePlan>& v) {
  Json arr = Json::array();
  for (const auto& p : v) arr.push_back(to_json(p));
  return arr;
}

}  // namespace

Json to_json(const RopeBounds& rope) { return Json{{"lo", rope.lo}, {"hi", rope.hi}}; }

Json to_json(const InferenceSummary& s) {
  Json j;
  j["label"] = s.label;
  j["post_mean"] = s.post_mean;
  j["ci_lower"] = s.ci_lower;
  j["ci_upper"] = s.ci_upper;
  j["ci_level"] = s.ci_level;
  j["prob_direction"] = s.prob_direction;
  if (s.rope_prob) j["rope_prob"] = *s.rope_prob;
  if (s.rope_bounds) j["rope_bounds"] = to_json(*s.rope_bounds);
  if (s.bayes_factor) j["bayes_factor"] = *s.bayes_factor;
  if (s.bf_interpretation) j["bf_interpretation"] = *s.bf_interpretation;
  return j;
}

Json to_json(const BayesFactor& bf) {
  Json j;
  j["value"] = bf.value;
  j["orientation"] = bf.orientation;
  j["jeffreys_label"] = bf.jeffreys_label;
  j["interpretation"] = bf.direction_text;
  return j;
}

Json to_json(const SamplePlan& plan) {
  Json j;
  j["pilot_size"] = plan.pilot_size;
  j["epsilon"] = plan.epsilon;
  j["density_at_lower"] = plan.density_at_lower;
  j["density_at_upper"] = plan.density_at_upper;
  j["L_lower"] = plan.L_lower;
  j["L_upper"] = plan.L_upper;
  j["M"] = plan.M;
  j["total_draws"] = plan.total_draws;
  return j;
}

Json to_json(const DiagnosticsData& d) {
  Json j;
  j["fitted"] = d.fitted;
  j["residuals"] = d.residuals;
  j["qq_theoretical"] = d.qq_theoretical;
  j["qq_sample"] = d.qq_sample;
  return j;
}

Json to_json(const CredibleBand& band) {
  Json j;
  j["variable"] = band.variable;
  j["medoid_row"] = band.medoid_row;
  Json pts = Json::array();
  for (const auto& p : band.points) {
    Json pj{{"x", p.x}, {"center", p.center}, {"lower", p.lower}, {"upper", p.upper}};
    if (!p.level.empty()) pj["level"] = p.level;
    pts.push_back(pj);
  }
  j["points"] = pts;
  return j;
}

Json to_json(const GroupPosterior& g) {
  Json j;
  j["level"] = g.level;
  j["n"] = g.n;
  j["mu_n"] = g.mu_n;
  j["kappa_n"] = g.kappa_n;
  j["a_n"] = g.a_n;
  j["b_n"] = g.b_n;
  return j;
}

Json to_json(const AnovaFit& fit) {
  Json j;
  Json groups = Json::array();
  for (const auto& g : fit.groups) groups.push_back(to_json(g));
  j["groups"] = groups;
  j["level_means"] = summaries_json(fit.mean_summaries);
  j["level_variances"] = summaries_json(fit.var_summaries);
  j["pairwise_differences"] = summaries_json(fit.diff_summaries);
  j["pairwise_epr"] = summaries_json(fit.epr_summaries);
  j["full_vs_null_bf"] = to_json(fit.full_vs_null);
  j["pooled_sd"] = fit.pooled_sd;
  j["sample_plans"] = plans_json(fit.plans);
  return j;
}

Json to_json(const TTestResult& r) {
  Json j;
  j["two_sample"] = r.two_sample;
  if (r.two_sample) {
    j["anova"] = to_json(r.anova);
  } else {
    j["mean"] = to_json(*r.mean_summary);
    j["variance"] = to_json(*r.var_summary);
    j["point_null_bf"] = to_json(*r.point_null_bf);
  }
  Json diag;
  diag["levels"] = r.diag_levels;
  diag["qq_theoretical"] = r.qq_theoretical;
  diag["qq_sample"] = r.qq_sample;
  diag["residuals"] = r.residuals;
  j["diagnostics"] = diag;
  return j;
}

Json to_json(const PropTestResult& r) {
  Json j;
  j["proportions"] = summaries_json(r.proportions);
  Json posts = Json::array();
  for (const auto& p : r.posteriors)
    posts.push_back(Json{{"shape1", p.a}, {"shape2", p.b}});
  j["beta_posteriors"] = posts;
  if (r.odds_ratio) j["odds_ratio"] = to_json(*r.odds_ratio);
  j["sample_plans"] = plans_json(r.plans);
  return j;
}

Json to_json(const PoissonTestResult& r) {
  Json j;
  j["rates"] = summaries_json(r.rates);
  Json posts = Json::array();
  for (const auto& p : r.posteriors)
    posts.push_back(Json{{"shape", p.shape}, {"rate", p.rate}});
  j["gamma_posteriors"] = posts;
  if (r.rate_ratio) j["rate_ratio"] = to_json(*r.rate_ratio);
  j["sample_plans"] = plans_json(r.plans);
  return j;
}

Json to_json(const SignTestResult& r) {
  Json j;
  j["p_positive"] = to_json(r.p_positive);
  j["posterior"] = Json{{"shape1", r.posterior.a}, {"shape2", r.posterior.b}};
  j["n_positive"] = r.n_positive;
  j["n_negative"] = r.n_negative;
  j["n_zero_dropped"] = r.n_zero;
  return j;
}

Json to_json(const ChisqTestResult& r) {
  Json j;
  j["independence_bf"] = to_json(r.independence_bf);
  j["log_ml_independent"] = r.log_ml_independent;
  j["log_ml_saturated"] = r.log_ml_saturated;
  j["cell_probabilities"] = summaries_json(r.cell_probs);
  return j;
}

Json to_json(const CaseControlResult& r) {
  Json j;
  j["exposure_cases"] = to_json(r.exposure_cases);
  j["exposure_controls"] = to_json(r.exposure_controls);
  j["odds_ratio"] = to_json(r.odds_ratio);
  j["sample_plans"] = plans_json(r.plans);
  return j;
}

Json to_json(const SurvivalCurve& c) {
  Json j;
  j["level"] = c.level;
  j["t"] = c.times;
  j["median"] = c.median;
  j["lower"] = c.lower;
  j["upper"] = c.upper;
  return j;
}

Json to_json(const PiecewiseExpModel& m) {
  Json j;
  j["interior_knots"] = m.boundaries;
  j["log_marginal"] = m.log_marginal;
  if (!m.group_variable.empty()) j["group_variable"] = m.group_variable;
  Json groups = Json::array();
  for (const auto& g : m.groups) {
    Json gj;
    gj["level"] = g.level;
    gj["n"] = g.n;
    gj["events"] = g.n_events;
    gj["log_marginal"] = g.log_marginal;
    Json ivs = Json::array();
    for (const auto& iv : g.intervals) {
      ivs.push_back(Json{{"t_lo", iv.t_lo},
                         {"t_hi", iv.t_hi},
                         {"events", iv.events},
                         {"exposure", iv.exposure},
                         {"post_shape", iv.prior_shape + iv.events},
                         {"post_rate", iv.prior_rate + iv.exposure}});
    }
    gj["intervals"] = ivs;
    groups.push_back(gj);
  }
  j["groups"] = groups;
  Json search = Json::array();
  for (const auto& [k, ml] : m.knot_search)
    search.push_back(Json{{"intervals", k}, {"log_marginal", ml}});
  j["knot_search"] = search;
  return j;
}

Json to_json(const NpGlmFit& fit) {
  Json j;
  j["family"] = fit.family.text();
  j["replicates"] = fit.replicates.rows();
  j["coefficients"] = summaries_json(fit.summaries);
  j["sample_plans"] = plans_json(fit.plans);
  return j;
}

Json to_json(const BmaFit& fit) {
  Json j;
  Json models = Json::array();
  for (const auto& m : fit.models) {
    Json mj;
    Json cov = Json::array();
    for (std::size_t c : m.covariates) cov.push_back(fit.design.labels[c]);
    mj["covariates"] = cov;
    mj["log_marginal"] = m.log_marginal;
    mj["posterior_prob"] = m.posterior_prob;
    models.push_back(mj);
  }
  j["models"] = models;
  Json incl;
  for (std::size_t k = 0; k < fit.free_columns.size(); ++k)
    incl[fit.design.labels[fit.free_columns[k]]] = fit.inclusion_prob[k];
  j["inclusion_probabilities"] = incl;
  j["unconditional"] = summaries_json(fit.unconditional);
  j["conditional_on_inclusion"] = summaries_json(fit.conditional);
  j["sample_plans"] = plans_json(fit.plans);
  return j;
}

Json to_json(const MediationResult& r) {
  Json j;
  j["treatment"] = r.treatment;
  j["mediator"] = r.mediator;
  j["acme_control"] = to_json(r.acme_t0);
  j["acme_treated"] = to_json(r.acme_t1);
  j["ade_control"] = to_json(r.ade_t0);
  j["ade_treated"] = to_json(r.ade_t1);
  j["total_effect"] = to_json(r.total_effect);
  if (r.proportion_mediated)
    j["proportion_mediated"] = to_json(*r.proportion_mediated);
  j["n_units"] = r.n_units;
  j["sample_plans"] = plans_json(r.plans);
  return j;
}

Json to_json(const InfoCriteria& ic) {
  Json j;
  j["aic"] = ic.aic;
  j["bic"] = ic.bic;
  j["dic"] = ic.dic;
  j["waic"] = ic.waic;
  j["p_d"] = ic.p_d;
  j["p_waic"] = ic.p_waic;
  j["waic_sample_plan"] = to_json(ic.waic_plan);
  return j;
}

Json to_json(const BayesianPValue& pv) {
  Json j;
  j["p_value"] = pv.p;
  j["sample_plan"] = to_json(pv.plan);
  Json pred = Json::array(), obs = Json::array();
  for (const auto& [tp, to] : pv.pairs) {
    pred.push_back(tp);
    obs.push_back(to);
  }
  j["t_pred"] = pred;
  j["t_obs"] = obs;
  return j;
}

}  // namespace bayesics
