#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "bayesics/error.hpp"
#include "bayesics/report.hpp"
#include "bayesics/stats.hpp"

using namespace bayesics;

namespace {

struct CommonOpts {
  std::string data_path;
  std::string formula_text;
  double ci_level = 0.95;
  double mc_epsilon = 0.0;  // 0 = auto (0.02 posterior SD)
  double mc_confidence = 0.95;
  std::uint64_t seed = 20260811;
  std::string rope_text;
  std::string out_path;
  bool pretty = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_data = true) {
  if (needs_data)
    cmd->add_option("--data", o.data_path, "CSV input file")->required();
  cmd->add_option("--ci", o.ci_level, "credible level (default 0.95)");
  cmd->add_option("--mc-epsilon", o.mc_epsilon,
                  "absolute Monte Carlo tolerance (default: 0.02 posterior SD)");
  cmd->add_option("--mc-confidence", o.mc_confidence,
                  "coverage probability of the MC error bound (default 0.95)");
  cmd->add_option("--seed", o.seed, "RNG seed (env BAYESICS_SEED overrides)");
  cmd->add_option("--rope", o.rope_text, "ROPE bounds override as 'lo,hi'");
  cmd->add_option("--out", o.out_path, "write the JSON report here (default stdout)");
  cmd->add_flag("--pretty", o.pretty, "print a human-readable table instead of JSON");
  cmd->add_option("--threads", o.threads, "worker cap (env BAYESICS_THREADS overrides)");
}

void apply_env(CommonOpts& o) {
  if (const char* s = std::getenv("BAYESICS_SEED")) o.seed = std::strtoull(s, nullptr, 10);
  if (const char* s = std::getenv("BAYESICS_THREADS")) o.threads = std::atoi(s);
}

PrecisionTarget targets_of(const CommonOpts& o) {
  PrecisionTarget t;
  t.epsilon = o.mc_epsilon;
  t.s = o.mc_confidence;
  t.ci_level = o.ci_level;
  return t;
}

std::optional<Exemplar> exemplar_of(const std::string& text) {
  if (text.empty()) return std::nullopt;
  Exemplar ex;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw UserError("--exemplar expects 'var=value,var=value'");
    ex[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return ex;
}

std::optional<RopeBounds> rope_of(const CommonOpts& o) {
  if (o.rope_text.empty()) return std::nullopt;
  std::istringstream in(o.rope_text);
  double lo, hi;
  char comma;
  if (!(in >> lo >> comma >> hi) || comma != ',')
    throw UserError("--rope expects 'lo,hi'");
  return RopeBounds{lo, hi};
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ','))
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw UserError(std::string("could not parse ") + what + ": '" + tok + "'");
    }
  if (out.empty()) throw UserError(std::string("empty list for ") + what);
  return out;
}

Eigen::MatrixXd parse_table(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string row;
  while (std::getline(in, row, ';')) rows.push_back(parse_list(row, "table row"));
  if (rows.empty()) throw UserError("empty table");
  const std::size_t c = rows[0].size();
  Eigen::MatrixXd t(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != c) throw UserError("ragged table rows");
    for (std::size_t j = 0; j < c; ++j)
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return t;
}

Json config_echo(const std::string& command, const CommonOpts& o) {
  Json c;
  c["command"] = command;
  if (!o.data_path.empty()) c["data"] = o.data_path;
  if (!o.formula_text.empty()) c["formula"] = o.formula_text;
  c["ci_level"] = o.ci_level;
  c["mc_epsilon"] = o.mc_epsilon;
  c["mc_confidence"] = o.mc_confidence;
  c["seed"] = o.seed;
  if (!o.rope_text.empty()) c["rope"] = o.rope_text;
  c["threads"] = o.threads;
  return c;
}

void print_summary_table(std::ostream& os, const std::string& title,
                         const std::vector<InferenceSummary>& rows) {
  if (rows.empty()) return;
  os << "--- " << title << " ---\n";
  os << std::left << std::setw(34) << "Variable" << std::right << std::setw(11)
     << "Post Mean" << std::setw(11) << "Lower" << std::setw(11) << "Upper"
     << std::setw(10) << "Prob Dir" << std::setw(9) << "ROPE" << '\n';
  for (const auto& s : rows) {
    os << std::left << std::setw(34) << s.label << std::right << std::setw(11)
       << std::setprecision(4) << s.post_mean << std::setw(11) << s.ci_lower
       << std::setw(11) << s.ci_upper << std::setw(10) << s.prob_direction;
    if (s.rope_prob)
      os << std::setw(9) << *s.rope_prob;
    os << '\n';
    if (s.rope_bounds)
      os << "    ROPE bounds (" << s.rope_bounds->lo << "," << s.rope_bounds->hi
         << ")";
    if (s.bayes_factor)
      os << "  BF favoring alternative: " << *s.bayes_factor << " ["
         << (s.bf_interpretation ? *s.bf_interpretation : "") << "]";
    if (s.rope_bounds || s.bayes_factor) os << '\n';
  }
  os << '\n';
}

void print_bf(std::ostream& os, const BayesFactor& bf) {
  os << "Bayes factor (" << bf.orientation << "): " << bf.value
     << "\n  => Level of evidence: " << bf.jeffreys_label;
  if (!bf.direction_text.empty()) os << " -- " << bf.direction_text;
  os << "\n\n";
}

int emit(const CommonOpts& o, Json report, const std::string& pretty_text) {
  if (o.pretty) {
    std::cout << pretty_text;
    if (!o.out_path.empty()) {
      std::ofstream f(o.out_path);
      f << report.dump(2) << '\n';
    }
    return 0;
  }
  const std::string text = report.dump(2) + "\n";
  if (o.out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(o.out_path);
    if (!f) throw UserError("cannot write '" + o.out_path + "'");
    f << text;
  }
  return 0;
}

// ratio/positive-scale view of a normal log-scale marginal
InferenceSummary ratio_from_normal(const NormalDist& d, const std::string& label,
                                   double ci_level,
                                   const std::optional<RopeBounds>& ratio_rope) {
  InferenceSummary s;
  s.label = label;
  s.ci_level = ci_level;
  s.post_mean = std::exp(d.mu + 0.5 * d.sigma * d.sigma);  // lognormal mean
  s.ci_lower = std::exp(quantile(ScalarDist{d}, (1 - ci_level) / 2));
  s.ci_upper = std::exp(quantile(ScalarDist{d}, 1 - (1 - ci_level) / 2));
  const double F0 = cdf(ScalarDist{d}, 0.0);
  s.prob_direction = std::max(F0, 1.0 - F0);
  if (ratio_rope) {
    s.rope_prob = cdf(ScalarDist{d}, std::log(ratio_rope->hi)) -
                  cdf(ScalarDist{d}, std::log(ratio_rope->lo));
    s.rope_bounds = *ratio_rope;
  }
  return s;
}

// ratio-scale weighted summary from log-scale importance draws
InferenceSummary ratio_from_weighted(std::span<const double> log_draws,
                                     std::span<const double> weights,
                                     const std::string& label, double ci_level,
                                     const std::optional<RopeBounds>& ratio_rope) {
  std::optional<RopeBounds> log_rope;
  if (ratio_rope)
    log_rope = RopeBounds{std::log(ratio_rope->lo), std::log(ratio_rope->hi)};
  InferenceSummary s =
      summarize_weighted_draws(log_draws, weights, label, ci_level, log_rope, 0.0);
  double wsum = 0.0, m_ratio = 0.0;
  for (std::size_t i = 0; i < log_draws.size(); ++i) {
    m_ratio += weights[i] * std::exp(log_draws[i]);
    wsum += weights[i];
  }
  s.post_mean = m_ratio / wsum;
  s.ci_lower = std::exp(s.ci_lower);
  s.ci_upper = std::exp(s.ci_upper);
  if (ratio_rope) s.rope_bounds = *ratio_rope;
  return s;
}

RopeBounds glm_rope_for(const GLMFit& fit, std::size_t j,
                        const std::optional<RopeBounds>& override_rope) {
  if (override_rope) return *override_rope;
  const auto kind = fit.family.name == FamilyName::binomial
                        ? RopeKind::log_odds_slope
                        : RopeKind::log_rate_ratio;
  if (fit.design.kinds[j] == ColumnKind::numeric)
    return default_rope(kind, fit.design.column_sd[j]);
  return default_rope(kind);
}

int run_lm(const CommonOpts& o, const std::string& prior_name,
           const std::string& band_var, const std::string& exemplar_text) {
  const Dataset data = read_csv(o.data_path);
  const auto design = build_design(parse_formula(o.formula_text), data);
  std::optional<NIGPrior> prior;
  if (prior_name == "conjugate") prior = conjugate_elicited_prior(design);
  else if (prior_name != "zellner") throw UserError("--prior must be zellner|conjugate");
  auto fit = fit_lm(design, prior);

  const auto rope_override = rope_of(o);
  const std::span<const double> ys(design.y.data(),
                                   static_cast<std::size_t>(design.y.size()));
  const double s_y = sample_sd(ys);
  const auto bfs = coefficient_bayes_factors(fit);

  std::vector<InferenceSummary> coefs;
  std::size_t bf_idx = 0;
  for (std::size_t j = 0; j < design.p(); ++j) {
    std::optional<RopeBounds> rope;
    if (design.kinds[j] == ColumnKind::numeric)
      rope = rope_override ? rope_override
                           : default_rope(RopeKind::linear_slope,
                                          design.column_sd[j], s_y);
    else if (design.kinds[j] == ColumnKind::factor_contrast)
      rope = rope_override
                 ? rope_override
                 : default_rope(RopeKind::mean_difference, std::nullopt, s_y);
    auto s = summarize_closed_form(ScalarDist{fit.post.coef_marginal(j)},
                                   design.labels[j], o.ci_level, rope);
    if (design.kinds[j] != ColumnKind::intercept) {
      s.bayes_factor = bfs.per_coefficient[bf_idx].value;
      s.bf_interpretation = bfs.per_coefficient[bf_idx].direction_text;
      ++bf_idx;
    }
    coefs.push_back(std::move(s));
  }

  const RngStream stream(o.seed, 0);
  const auto ic = information_criteria(fit, stream, targets_of(o));

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("lm", o);
  report["n"] = design.n();
  report["dropped_missing"] = design.n_dropped_missing;
  Json cj = Json::array();
  for (const auto& s : coefs) cj.push_back(to_json(s));
  report["coefficients"] = cj;
  report["full_vs_null_bf"] = to_json(bfs.full_vs_null);
  report["information_criteria"] = to_json(ic);
  report["log_marginal_likelihood"] = fit.log_marginal;
  report["diagnostics"] = to_json(diagnostics_data(fit));
  if (!band_var.empty())
    report["credible_band"] = to_json(
        credible_band(fit, band_var, o.ci_level, exemplar_of(exemplar_text)));
  for (const auto& w : fit.warnings) report["warnings"].push_back(w);

  std::ostringstream pretty;
  print_summary_table(pretty, "Coefficient summaries", coefs);
  print_bf(pretty, bfs.full_vs_null);
  pretty << "AIC " << ic.aic << "  BIC " << ic.bic << "  DIC " << ic.dic
         << "  WAIC " << ic.waic << "\n";
  return emit(o, report, pretty.str());
}

int run_aov(const CommonOpts& o) {
  const Dataset data = read_csv(o.data_path);
  const auto design = build_design(parse_formula(o.formula_text), data);
  const RngStream stream(o.seed, 0);
  const auto fit = fit_aov(design, stream, targets_of(o), o.ci_level, rope_of(o));

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("aov", o);
  report["n"] = design.n();
  report["anova"] = to_json(fit);

  std::ostringstream pretty;
  print_bf(pretty, fit.full_vs_null);
  print_summary_table(pretty, "Summary of factor level means", fit.mean_summaries);
  print_summary_table(pretty, "Summary of factor level variances", fit.var_summaries);
  print_summary_table(pretty, "Summary of pairwise differences", fit.diff_summaries);
  print_summary_table(pretty, "Exceedance in pairs rate", fit.epr_summaries);
  return emit(o, report, pretty.str());
}

int run_ttest(const CommonOpts& o, double null_value) {
  const Dataset data = read_csv(o.data_path);
  const auto design = build_design(parse_formula(o.formula_text), data);
  const RngStream stream(o.seed, 0);
  const auto res =
      t_test(design, stream, targets_of(o), o.ci_level, rope_of(o), null_value);

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("ttest", o);
  report["n"] = design.n();
  report["ttest"] = to_json(res);

  std::ostringstream pretty;
  if (res.two_sample) {
    print_bf(pretty, res.anova.full_vs_null);
    print_summary_table(pretty, "Summary of factor level means",
                        res.anova.mean_summaries);
    print_summary_table(pretty, "Summary of factor level variances",
                        res.anova.var_summaries);
    print_summary_table(pretty, "Summary of pairwise differences",
                        res.anova.diff_summaries);
    print_summary_table(pretty, "Exceedance in pairs rate", res.anova.epr_summaries);
  } else {
    print_summary_table(pretty, "One-sample summary",
                        {*res.mean_summary, *res.var_summary});
    print_bf(pretty, *res.point_null_bf);
  }
  return emit(o, report, pretty.str());
}

int run_glm(const CommonOpts& o, const std::string& family_name,
            const std::string& method_name, const std::string& band_var,
            const std::string& pairs_out, const std::string& newdata_path,
            const std::string& predict_type, const std::string& offset_col,
            const std::string& exemplar_text) {
  const Dataset data = read_csv(o.data_path);
  auto design = build_design(parse_formula(o.formula_text), data);
  const GLMFamily family = GLMFamily::parse(family_name);
  GLMMethod method = GLMMethod::vb;
  if (method_name == "laplace") method = GLMMethod::laplace;
  else if (method_name == "importance") method = GLMMethod::importance;
  else if (method_name != "vb") throw UserError("--method must be vb|laplace|importance");

  Eigen::VectorXd offset;
  if (!offset_col.empty()) {
    const auto ci = data.column_index(offset_col);
    if (!data.is_numeric(ci)) throw UserError("offset column must be numeric");
    const auto& vals = std::get<NumericColumn>(data.columns[ci]).values;
    offset.resize(static_cast<Eigen::Index>(design.kept_rows.size()));
    for (std::size_t i = 0; i < design.kept_rows.size(); ++i) {
      const double w = vals[design.kept_rows[i]];
      if (!(w > 0)) throw UserError("offsets must be positive");
      offset[static_cast<Eigen::Index>(i)] = std::log(w);
    }
  }

  const RngStream stream(o.seed, 0);
  const auto fit = fit_glm(design, family, std::nullopt, method, stream.child(1),
                           {}, std::move(offset), targets_of(o));

  const auto rope_override = rope_of(o);
  const bool ratio_scale = family.name != FamilyName::gaussian;
  std::vector<InferenceSummary> coefs;
  const auto bfs = glm_coefficient_bfs(fit);
  std::size_t bf_idx = 0;
  for (std::size_t j = 0; j < fit.p(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const NormalDist marginal{fit.approx.m[jj], std::sqrt(fit.approx.C(jj, jj))};
    // importance fits summarize their weighted particles directly
    std::span<const double> idraws, iweights;
    if (fit.is_importance()) {
      idraws = std::span<const double>(fit.importance_draws.col(jj).data(),
                                       static_cast<std::size_t>(fit.importance_draws.rows()));
      iweights = std::span<const double>(fit.importance_weights.data(),
                                         static_cast<std::size_t>(fit.importance_weights.size()));
    }
    InferenceSummary s;
    if (design.kinds[j] == ColumnKind::intercept) {
      s = fit.is_importance()
              ? summarize_weighted_draws(idraws, iweights, design.labels[j], o.ci_level)
              : summarize_closed_form(ScalarDist{marginal}, design.labels[j], o.ci_level);
    } else if (ratio_scale) {
      const auto link_rope = glm_rope_for(fit, j, rope_override);
      const RopeBounds rr{std::exp(link_rope.lo), std::exp(link_rope.hi)};
      s = fit.is_importance()
              ? ratio_from_weighted(idraws, iweights, design.labels[j], o.ci_level, rr)
              : ratio_from_normal(marginal, design.labels[j], o.ci_level, rr);
    } else {
      std::optional<RopeBounds> rope = rope_override;
      if (!rope && design.kinds[j] == ColumnKind::numeric) {
        const std::span<const double> ys(design.y.data(),
                                         static_cast<std::size_t>(design.y.size()));
        rope = default_rope(RopeKind::linear_slope, design.column_sd[j],
                            sample_sd(ys));
      }
      s = fit.is_importance()
              ? summarize_weighted_draws(idraws, iweights, design.labels[j],
                                         o.ci_level, rope)
              : summarize_closed_form(ScalarDist{marginal}, design.labels[j],
                                      o.ci_level, rope);
    }
    if (design.kinds[j] != ColumnKind::intercept) {
      s.bayes_factor = bfs[bf_idx].value;
      s.bf_interpretation = bfs[bf_idx].direction_text;
      ++bf_idx;
    }
    coefs.push_back(std::move(s));
  }

  // auxiliary parameter (sigma^2 or dispersion phi), log scale internally
  std::optional<InferenceSummary> aux_summary;
  if (fit.family.has_aux()) {
    const auto aj = static_cast<Eigen::Index>(fit.p());
    const NormalDist marg{fit.approx.m[aj], std::sqrt(fit.approx.C(aj, aj))};
    const char* label =
        family.name == FamilyName::gaussian ? "sigma^2" : "dispersion phi";
    auto s = ratio_from_normal(marg, label, o.ci_level, std::nullopt);
    s.prob_direction = 1.0;  // positive by construction
    aux_summary = std::move(s);
  }

  const auto pv = bayesian_pvalue(fit, stream.child(2), targets_of(o));
  const auto ic = glm_information_criteria(fit, stream.child(3), targets_of(o));

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("glm", o);
  report["family"] = family.text();
  report["link"] = family.link_name();
  report["method"] = method_name;
  report["n"] = design.n();
  report["dropped_missing"] = design.n_dropped_missing;
  if (ratio_scale) report["scale_note"] = "values given in terms of ratios (exp of link scale)";
  Json cj = Json::array();
  for (const auto& s : coefs) cj.push_back(to_json(s));
  report["coefficients"] = cj;
  if (aux_summary) report["auxiliary"] = to_json(*aux_summary);
  report["bayesian_p_value"] = to_json(pv);
  report["information_criteria"] = to_json(ic);
  if (fit.is_importance()) report["effective_sample_size"] = fit.ess;
  if (!fit.approx.elbo_trace.empty())
    report["elbo_final"] = fit.approx.elbo_trace.back();
  if (!band_var.empty())
    report["credible_band"] = to_json(
        glm_credible_band(fit, band_var, stream.child(4), o.ci_level,
                          exemplar_of(exemplar_text), 50, targets_of(o)));
  if (!newdata_path.empty()) {
    PredictType pt = PredictType::response;
    if (predict_type == "link") pt = PredictType::link;
    else if (predict_type == "predictive") pt = PredictType::predictive;
    else if (predict_type != "response") throw UserError("--predict-type must be link|response|predictive");
    const Dataset nd = read_csv(newdata_path);
    Json pj = Json::array();
    for (const auto& s :
         predict(fit, nd, pt, stream.child(5), o.ci_level, targets_of(o)))
      pj.push_back(to_json(s));
    report["predictions"] = pj;
  }
  for (const auto& w : fit.warnings) report["warnings"].push_back(w);

  if (!pairs_out.empty()) {
    std::ofstream f(pairs_out);
    if (!f) throw UserError("cannot write '" + pairs_out + "'");
    f << "t_pred,t_obs\n";
    for (const auto& [tp, to] : pv.pairs) f << tp << ',' << to << '\n';
  }

  std::ostringstream pretty;
  if (ratio_scale) pretty << "----------\nValues given in terms of "
                          << (family.name == FamilyName::binomial ? "odds ratios"
                                                                  : "rate ratios")
                          << "\n----------\n\n";
  print_summary_table(pretty, "Coefficient summaries", coefs);
  if (aux_summary) print_summary_table(pretty, "Auxiliary parameter", {*aux_summary});
  pretty << "Bayesian p-value (chi-square discrepancy): " << pv.p << "\n";
  pretty << "AIC " << ic.aic << "  BIC " << ic.bic << "  DIC " << ic.dic
         << "  WAIC " << ic.waic << "\n";
  return emit(o, report, pretty.str());
}

int run_npglm(const CommonOpts& o, const std::string& family_name,
              const std::string& band_var, const std::string& loss) {
  if (loss != "self-information")
    throw UserError("only the self-information loss is implemented");
  const Dataset data = read_csv(o.data_path);
  const auto design = build_design(parse_formula(o.formula_text), data);
  const RngStream stream(o.seed, 0);
  const auto fit = fit_np_glm(design, GLMFamily::parse(family_name), stream,
                              targets_of(o), o.ci_level);

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("npglm", o);
  report["n"] = design.n();
  report["np_glm"] = to_json(fit);
  if (!band_var.empty())
    report["credible_band"] = [&] {
      const auto band = np_credible_band(fit, band_var, o.ci_level);
      Json j;
      j["variable"] = band.variable;
      Json pts = Json::array();
      for (const auto& p : band.points)
        pts.push_back(Json{{"x", p.x}, {"center", p.center}, {"lower", p.lower}, {"upper", p.upper}});
      j["points"] = pts;
      return j;
    }();

  std::ostringstream pretty;
  print_summary_table(pretty, "Loss-likelihood bootstrap coefficients",
                      fit.summaries);
  return emit(o, report, pretty.str());
}

int run_survfit(const CommonOpts& o, std::size_t kmax, const std::string& curve_out) {
  const Dataset data = read_csv(o.data_path);
  const auto design = build_design(parse_formula(o.formula_text), data);
  const auto model = fit_survival(design, kmax);
  const RngStream stream(o.seed, 0);

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("survfit", o);
  report["model"] = to_json(model);
  Json curves = Json::array();
  std::vector<SurvivalCurve> all;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    all.push_back(survival_curve(model, g, stream.child(g), targets_of(o), o.ci_level));
    curves.push_back(to_json(all.back()));
  }
  report["curves"] = curves;

  if (!curve_out.empty()) {
    std::ofstream f(curve_out);
    if (!f) throw UserError("cannot write '" + curve_out + "'");
    f << "group,t,median,lower,upper\n";
    for (const auto& c : all)
      for (std::size_t i = 0; i < c.times.size(); ++i)
        f << c.level << ',' << c.times[i] << ',' << c.median[i] << ','
          << c.lower[i] << ',' << c.upper[i] << '\n';
  }

  std::ostringstream pretty;
  pretty << "piecewise-exponential fit: " << model.groups[0].intervals.size()
         << " hazard intervals, log marginal likelihood " << model.log_marginal
         << "\n";
  for (const auto& g : model.groups)
    pretty << "  group " << g.level << ": n=" << g.n << " events=" << g.n_events
           << "\n";
  return emit(o, report, pretty.str());
}

int run_bma(const CommonOpts& o, const std::string& prior_name,
            const std::string& quantiles_text) {
  const Dataset data = read_csv(o.data_path);
  const auto design = build_design(parse_formula(o.formula_text), data);
  const RngStream stream(o.seed, 0);
  const ModelPrior mp = prior_name == "betabinom" ? ModelPrior::beta_binomial
                                                  : ModelPrior::uniform;
  const auto fit = fit_bma(design, stream.child(1), targets_of(o), o.ci_level, mp);
  const auto pvals = bma_bayesian_pvalue(fit, stream.child(2),
                                         parse_list(quantiles_text, "quantiles"),
                                         targets_of(o));

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("bma", o);
  report["bma"] = to_json(fit);
  Json pj = Json::array();
  for (const auto& pv : pvals)
    pj.push_back(Json{{"quantile", pv.quantile_prob}, {"p_value", pv.p}});
  report["quantile_p_values"] = pj;

  std::ostringstream pretty;
  pretty << "--- Posterior model probabilities ---\n";
  for (const auto& m : fit.models) {
    pretty << "  p=" << std::setprecision(4) << m.posterior_prob << " {";
    for (std::size_t c = 0; c < m.covariates.size(); ++c)
      pretty << (c ? "," : "") << fit.design.labels[m.covariates[c]];
    pretty << "}\n";
  }
  pretty << '\n';
  print_summary_table(pretty, "Model-averaged coefficients", fit.unconditional);
  return emit(o, report, pretty.str());
}

int run_mediate(const CommonOpts& o, const std::string& med_formula,
                const std::string& out_formula, const std::string& treatment,
                const std::string& med_family, const std::string& out_family,
                bool gaussian_noise) {
  const Dataset data = read_csv(o.data_path);
  const RngStream stream(o.seed, 0);
  MediationOptions opts;
  opts.ci_level = o.ci_level;
  opts.gaussian_noise = gaussian_noise;
  const auto res =
      mediate(parse_formula(med_formula), parse_formula(out_formula), treatment,
              data, GLMFamily::parse(med_family), GLMFamily::parse(out_family),
              stream, targets_of(o), opts);

  Json report;
  report["schema_version"] = "1";
  report["config"] = config_echo("mediate", o);
  report["config"]["mediator_formula"] = med_formula;
  report["config"]["outcome_formula"] = out_formula;
  report["mediation"] = to_json(res);

  std::ostringstream pretty;
  std::vector<InferenceSummary> rows{res.acme_t0, res.acme_t1, res.ade_t0,
                                     res.ade_t1, res.total_effect};
  if (res.proportion_mediated) rows.push_back(*res.proportion_mediated);
  print_summary_table(pretty, "Causal mediation effects", rows);
  return emit(o, report, pretty.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bayesics: Bayesian counterparts of everyday statistical analyses"};
  app.require_subcommand(1);

  // ---- shared state per subcommand
  CommonOpts o_lm, o_aov, o_glm, o_npglm, o_ttest, o_prop, o_pois, o_sign,
      o_chisq, o_cc, o_surv, o_bma, o_med, o_eb, o_eig, o_het, o_plan;

  auto* lm = app.add_subcommand("lm", "Bayesian linear regression");
  add_common(lm, o_lm);
  lm->add_option("--formula", o_lm.formula_text)->required();
  std::string lm_prior = "zellner", lm_band, lm_exemplar;
  lm->add_option("--prior", lm_prior, "zellner|conjugate");
  lm->add_option("--band", lm_band, "credible band for this variable");
  lm->add_option("--exemplar", lm_exemplar, "fix off-axis covariates: 'var=value,...'");

  auto* aov = app.add_subcommand("aov", "one-way ANOVA");
  add_common(aov, o_aov);
  aov->add_option("--formula", o_aov.formula_text)->required();

  auto* glm = app.add_subcommand("glm", "generalized linear model");
  add_common(glm, o_glm);
  glm->add_option("--formula", o_glm.formula_text)->required();
  std::string glm_family = "binomial", glm_method = "vb", glm_band, glm_pairs,
              glm_newdata, glm_ptype = "response", glm_offset, glm_exemplar;
  glm->add_option("--family", glm_family, "gaussian|binomial|poisson|negbinom");
  glm->add_option("--method", glm_method, "vb|laplace|importance");
  glm->add_option("--band", glm_band);
  glm->add_option("--pairs-out", glm_pairs, "write (t_pred, t_obs) pairs CSV");
  glm->add_option("--newdata", glm_newdata, "CSV of rows to predict");
  glm->add_option("--predict-type", glm_ptype, "link|response|predictive");
  glm->add_option("--offset", glm_offset, "offset column (poisson/negbinom)");
  glm->add_option("--exemplar", glm_exemplar, "fix off-axis covariates: 'var=value,...'");

  auto* npglm = app.add_subcommand("npglm", "loss-likelihood bootstrap GLM");
  add_common(npglm, o_npglm);
  npglm->add_option("--formula", o_npglm.formula_text)->required();
  std::string np_family = "gaussian", np_band, np_loss = "self-information";
  npglm->add_option("--family", np_family);
  npglm->add_option("--band", np_band);
  npglm->add_option("--loss", np_loss);

  auto* ttest = app.add_subcommand("ttest", "one/two-sample normal means");
  add_common(ttest, o_ttest);
  ttest->add_option("--formula", o_ttest.formula_text)->required();
  double ttest_null = 0.0;
  ttest->add_option("--null", ttest_null, "one-sample null mean");

  auto* prop = app.add_subcommand("prop", "one/two-sample proportions");
  add_common(prop, o_prop, false);
  std::string prop_succ, prop_trials, prop_prior = "jeffreys", prop_shapes;
  prop->add_option("--successes", prop_succ)->required();
  prop->add_option("--trials", prop_trials)->required();
  prop->add_option("--prior", prop_prior, "jeffreys|uniform");
  prop->add_option("--prior-shapes", prop_shapes, "custom 'a,b'");

  auto* pois = app.add_subcommand("poisson", "one/two-population rates");
  add_common(pois, o_pois, false);
  std::string pois_counts, pois_offsets, pois_shapes;
  pois->add_option("--counts", pois_counts)->required();
  pois->add_option("--offsets", pois_offsets)->required();
  pois->add_option("--prior-shapes", pois_shapes, "'shape,rate' (default 0.5,0)");

  auto* sign = app.add_subcommand("sign", "sign test for paired differences");
  add_common(sign, o_sign, false);
  std::string sign_values, sign_data, sign_column, sign_shapes;
  sign->add_option("--values", sign_values, "inline differences 'd1,d2,...'");
  sign->add_option("--data", sign_data, "CSV with the differences");
  sign->add_option("--column", sign_column, "difference column in --data");
  sign->add_option("--prior-shapes", sign_shapes, "'a,b' (default 1,1)");

  auto* chisq = app.add_subcommand("chisq", "contingency-table independence");
  add_common(chisq, o_chisq, false);
  std::string chisq_table;
  chisq->add_option("--table", chisq_table, "counts 'a,b;c,d'")->required();

  auto* cc = app.add_subcommand("casecontrol", "2x2 case-control odds ratio");
  add_common(cc, o_cc, false);
  std::string cc_table;
  cc->add_option("--table", cc_table,
                 "'cases_exposed,cases_unexposed;controls_exposed,controls_unexposed'")
      ->required();

  auto* surv = app.add_subcommand("survfit", "piecewise-exponential survival");
  add_common(surv, o_surv);
  surv->add_option("--formula", o_surv.formula_text)->required();
  std::size_t surv_kmax = 10;
  std::string surv_curve_out;
  surv->add_option("--kmax", surv_kmax, "max hazard intervals (default 10)");
  surv->add_option("--curve-out", surv_curve_out, "long-format curve CSV");

  auto* bma = app.add_subcommand("bma", "Bayesian model averaging");
  add_common(bma, o_bma);
  bma->add_option("--formula", o_bma.formula_text)->required();
  std::string bma_prior = "uniform", bma_quantiles = "0.1,0.25,0.5,0.75,0.9";
  bma->add_option("--model-prior", bma_prior, "uniform|betabinom");
  bma->add_option("--quantiles", bma_quantiles, "p-value quantile probs");

  auto* med = app.add_subcommand("mediate", "causal mediation analysis");
  add_common(med, o_med);
  std::string med_formula, med_out_formula, med_treatment, med_mf = "gaussian",
              med_of = "gaussian";
  bool med_noise = false;
  med->add_option("--mediator-formula", med_formula)->required();
  med->add_option("--outcome-formula", med_out_formula)->required();
  med->add_option("--treatment", med_treatment)->required();
  med->add_option("--mediator-family", med_mf);
  med->add_option("--outcome-family", med_of);
  med->add_flag("--gaussian-noise", med_noise, "simulate gaussian noise too");

  auto* eb = app.add_subcommand("elicit-beta", "Beta shapes from mean + quantile");
  add_common(eb, o_eb, false);
  double eb_mean = 0.5, eb_qp = 0.95, eb_qv = 0.9;
  eb->add_option("--mean", eb_mean)->required();
  eb->add_option("--q-prob", eb_qp)->required();
  eb->add_option("--q-value", eb_qv)->required();

  auto* eig = app.add_subcommand("elicit-invgamma",
                                 "inverse-gamma from two quantiles or R^2");
  add_common(eig, o_eig, false);
  double eig_q1p = 0.25, eig_q1v = 0, eig_q2p = 0.75, eig_q2v = 0, eig_rv = 0;
  eig->add_option("--q1-prob", eig_q1p);
  eig->add_option("--q1-value", eig_q1v);
  eig->add_option("--q2-prob", eig_q2p);
  eig->add_option("--q2-value", eig_q2v);
  eig->add_option("--response-variance", eig_rv);

  auto* het = app.add_subcommand("heterosced", "equal-variances Bayes factor");
  add_common(het, o_het);
  het->add_option("--formula", o_het.formula_text)->required();

  auto* plan = app.add_subcommand("mcplan", "Monte Carlo sample-size formulas");
  add_common(plan, o_plan, false);
  double plan_alpha = 0.05, plan_s = 0.95, plan_eps = 0.1, plan_dens = 0,
         plan_var = 0;
  plan->add_option("--alpha", plan_alpha, "CI alpha (both tails alpha/2)");
  plan->add_option("--s", plan_s, "coverage probability");
  plan->add_option("--epsilon", plan_eps, "MC margin of error")->required();
  plan->add_option("--density", plan_dens, "posterior density at the quantile");
  plan->add_option("--variance", plan_var, "posterior variance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage/error text
    return 2;
  }

  try {
    if (*lm) {
      apply_env(o_lm);
      return run_lm(o_lm, lm_prior, lm_band, lm_exemplar);
    }
    if (*aov) {
      apply_env(o_aov);
      return run_aov(o_aov);
    }
    if (*glm) {
      apply_env(o_glm);
      return run_glm(o_glm, glm_family, glm_method, glm_band, glm_pairs,
                     glm_newdata, glm_ptype, glm_offset, glm_exemplar);
    }
    if (*npglm) {
      apply_env(o_npglm);
      return run_npglm(o_npglm, np_family, np_band, np_loss);
    }
    if (*ttest) {
      apply_env(o_ttest);
      return run_ttest(o_ttest, ttest_null);
    }
    if (*prop) {
      apply_env(o_prop);
      double a = 0.5, b = 0.5;
      if (prop_prior == "uniform") a = b = 1.0;
      else if (prop_prior != "jeffreys") throw UserError("--prior must be jeffreys|uniform");
      if (!prop_shapes.empty()) {
        const auto v = parse_list(prop_shapes, "--prior-shapes");
        if (v.size() != 2) throw UserError("--prior-shapes expects 'a,b'");
        a = v[0];
        b = v[1];
      }
      std::vector<long> succ, trials;
      for (double v : parse_list(prop_succ, "--successes")) succ.push_back(static_cast<long>(v));
      for (double v : parse_list(prop_trials, "--trials")) trials.push_back(static_cast<long>(v));
      const auto res = prop_test(succ, trials, RngStream(o_prop.seed, 0),
                                 targets_of(o_prop), o_prop.ci_level, a, b,
                                 rope_of(o_prop));
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("prop", o_prop);
      report["prop_test"] = to_json(res);
      std::ostringstream pretty;
      print_summary_table(pretty, "Proportion summaries", res.proportions);
      if (res.odds_ratio) print_summary_table(pretty, "Odds ratio", {*res.odds_ratio});
      return emit(o_prop, report, pretty.str());
    }
    if (*pois) {
      apply_env(o_pois);
      double shape = 0.5, rate = 0.0;
      if (!pois_shapes.empty()) {
        const auto v = parse_list(pois_shapes, "--prior-shapes");
        if (v.size() != 2) throw UserError("--prior-shapes expects 'shape,rate'");
        shape = v[0];
        rate = v[1];
      }
      std::vector<long> counts;
      for (double v : parse_list(pois_counts, "--counts")) counts.push_back(static_cast<long>(v));
      const auto offsets = parse_list(pois_offsets, "--offsets");
      const auto res = poisson_test(counts, offsets, RngStream(o_pois.seed, 0),
                                    targets_of(o_pois), o_pois.ci_level, shape,
                                    rate, rope_of(o_pois));
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("poisson", o_pois);
      report["poisson_test"] = to_json(res);
      std::ostringstream pretty;
      print_summary_table(pretty, "Rate summaries", res.rates);
      if (res.rate_ratio) print_summary_table(pretty, "Rate ratio", {*res.rate_ratio});
      return emit(o_pois, report, pretty.str());
    }
    if (*sign) {
      apply_env(o_sign);
      std::vector<double> diffs;
      if (!sign_values.empty()) {
        diffs = parse_list(sign_values, "--values");
      } else if (!sign_data.empty() && !sign_column.empty()) {
        const Dataset d = read_csv(sign_data);
        const auto ci = d.column_index(sign_column);
        if (!d.is_numeric(ci)) throw UserError("difference column must be numeric");
        for (double v : std::get<NumericColumn>(d.columns[ci]).values)
          if (!std::isnan(v)) diffs.push_back(v);
      } else {
        throw UserError("give --values or --data with --column");
      }
      double a = 1.0, b = 1.0;
      if (!sign_shapes.empty()) {
        const auto v = parse_list(sign_shapes, "--prior-shapes");
        if (v.size() != 2) throw UserError("--prior-shapes expects 'a,b'");
        a = v[0];
        b = v[1];
      }
      const auto res = sign_test(diffs, a, b, o_sign.ci_level, rope_of(o_sign));
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("sign", o_sign);
      report["sign_test"] = to_json(res);
      std::ostringstream pretty;
      print_summary_table(pretty, "Sign test", {res.p_positive});
      return emit(o_sign, report, pretty.str());
    }
    if (*chisq) {
      apply_env(o_chisq);
      const auto res = chisq_test(parse_table(chisq_table));
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("chisq", o_chisq);
      report["chisq_test"] = to_json(res);
      std::ostringstream pretty;
      print_bf(pretty, res.independence_bf);
      print_summary_table(pretty, "Cell probabilities", res.cell_probs);
      return emit(o_chisq, report, pretty.str());
    }
    if (*cc) {
      apply_env(o_cc);
      const auto t = parse_table(cc_table);
      if (t.rows() != 2 || t.cols() != 2)
        throw UserError("case-control table must be 2x2");
      const auto res = case_control(
          static_cast<long>(t(0, 0)), static_cast<long>(t(0, 1)),
          static_cast<long>(t(1, 0)), static_cast<long>(t(1, 1)),
          RngStream(o_cc.seed, 0), targets_of(o_cc), o_cc.ci_level, rope_of(o_cc));
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("casecontrol", o_cc);
      report["case_control"] = to_json(res);
      std::ostringstream pretty;
      print_summary_table(pretty, "Case-control",
                          {res.exposure_cases, res.exposure_controls, res.odds_ratio});
      return emit(o_cc, report, pretty.str());
    }
    if (*surv) {
      apply_env(o_surv);
      return run_survfit(o_surv, surv_kmax, surv_curve_out);
    }
    if (*bma) {
      apply_env(o_bma);
      return run_bma(o_bma, bma_prior, bma_quantiles);
    }
    if (*med) {
      apply_env(o_med);
      return run_mediate(o_med, med_formula, med_out_formula, med_treatment,
                         med_mf, med_of, med_noise);
    }
    if (*eb) {
      const auto r = find_beta_parms(eb_mean, eb_qp, eb_qv);
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("elicit-beta", o_eb);
      report["shape1"] = r.shape1;
      report["shape2"] = r.shape2;
      report["exact"] = r.exact;
      std::ostringstream pretty;
      pretty << "Beta(" << r.shape1 << ", " << r.shape2 << ")"
             << (r.exact ? "" : "  [best-effort: target not attainable]") << "\n";
      return emit(o_eb, report, pretty.str());
    }
    if (*eig) {
      const auto r = eig_rv > 0
                         ? find_invgamma_parms_rsq(eig_rv)
                         : find_invgamma_parms(eig_q1p, eig_q1v, eig_q2p, eig_q2v);
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("elicit-invgamma", o_eig);
      report["shape"] = r.shape;
      report["rate"] = r.rate;
      report["exact"] = r.exact;
      std::ostringstream pretty;
      pretty << "InvGamma(shape " << r.shape << ", rate " << r.rate << ")"
             << (r.exact ? "" : "  [best-effort]") << "\n";
      return emit(o_eig, report, pretty.str());
    }
    if (*het) {
      apply_env(o_het);
      const Dataset data = read_csv(o_het.data_path);
      const auto design = build_design(parse_formula(o_het.formula_text), data);
      if (design.terms.size() != 1 || !design.terms[0].is_factor)
        throw UserError("heterosced expects 'y ~ factor'");
      const auto& term = design.terms[0];
      std::vector<std::vector<double>> groups(term.levels.size());
      for (std::size_t i = 0; i < design.n(); ++i) {
        std::size_t level = 0;
        for (std::size_t c = 0; c < term.columns.size(); ++c)
          if (design.X(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(term.columns[c])) == 1.0)
            level = c + 1;
        groups[level].push_back(design.y[static_cast<Eigen::Index>(i)]);
      }
      const auto bf = heteroscedasticity_bf(groups);
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("heterosced", o_het);
      report["equal_variances_bf"] = to_json(bf);
      std::ostringstream pretty;
      print_bf(pretty, bf);
      return emit(o_het, report, pretty.str());
    }
    if (*plan) {
      Json report;
      report["schema_version"] = "1";
      report["config"] = config_echo("mcplan", o_plan);
      std::ostringstream pretty;
      if (plan_dens > 0) {
        const auto L = quantile_sample_size(plan_alpha / 2.0, plan_s, plan_eps,
                                            plan_dens);
        report["L"] = L;
        pretty << "L = " << L << "\n";
      }
      if (plan_var > 0) {
        const auto M = mean_sample_size(plan_var, plan_s, plan_eps);
        report["M"] = M;
        pretty << "M = " << M << "\n";
        if (plan_dens > 0)
          report["ratio"] = sample_size_ratio(plan_alpha, plan_var, plan_dens);
      }
      if (!(plan_dens > 0) && !(plan_var > 0))
        throw UserError("give --density and/or --variance");
      return emit(o_plan, report, pretty.str());
    }
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
