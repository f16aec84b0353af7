#include "bayesics/mediation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "bayesics/design.hpp"
#include "bayesics/error.hpp"
#include "bayesics/linear.hpp"

namespace bayesics {

namespace {

Dataset subset_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.names = data.names;
  out.n_rows = rows.size();
  for (const auto& col : data.columns) {
    if (std::holds_alternative<NumericColumn>(col)) {
      NumericColumn c;
      for (std::size_t r : rows)
        c.values.push_back(std::get<NumericColumn>(col).values[r]);
      out.columns.emplace_back(std::move(c));
    } else {
      const auto& cat = std::get<CategoricalColumn>(col);
      CategoricalColumn c;
      c.levels = cat.levels;
      for (std::size_t r : rows) c.codes.push_back(cat.codes[r]);
      out.columns.emplace_back(std::move(c));
    }
  }
  return out;
}

// joint posterior draw generator for one submodel (rows x (p [+aux]))
using DrawFn = std::function<Eigen::MatrixXd(RngStream&, std::size_t)>;

struct Submodel {
  DesignSpec design;
  GLMFamily family;
  DrawFn draw;
  std::size_t treatment_col = 0;  // design column carrying the treatment
};

std::size_t find_treatment_column(const DesignSpec& design,
                                  const std::string& treatment) {
  const auto& term = design.terms[design.term_index(treatment)];
  if (term.is_factor) {
    if (term.levels.size() != 2)
      throw UserError("treatment '" + treatment + "' must be binary (2 levels)");
    return term.columns[0];
  }
  const auto col = design.X.col(static_cast<Eigen::Index>(term.columns[0]));
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (col[i] != 0.0 && col[i] != 1.0)
      throw UserError("treatment '" + treatment + "' must be binary (0/1)");
  return term.columns[0];
}

Submodel build_submodel(const Formula& formula, const Dataset& data,
                        GLMFamily family, const std::string& treatment,
                        const RngStream& stream) {
  Submodel sm;
  sm.design = build_design(formula, data);
  if (sm.design.n_dropped_missing > 0)
    throw NumericalError("internal: rows must be pre-filtered for mediation");
  sm.family = family;
  sm.treatment_col = find_treatment_column(sm.design, treatment);

  if (family.name == FamilyName::gaussian) {
    const auto fit = fit_lm(sm.design);
    const auto post = fit.post;
    sm.draw = [post](RngStream& rng, std::size_t rows) {
      return draw_nig_joint(post, rng, rows);  // betas then sigma^2
    };
  } else {
    const auto fit = fit_glm(sm.design, family, std::nullopt, GLMMethod::vb,
                             stream);
    sm.draw = [fit](RngStream& rng, std::size_t rows) {
      return glm_posterior_draws(fit, rng, rows);
    };
  }
  return sm;
}

}  // namespace

MediationResult mediate(const Formula& mediator_formula,
                        const Formula& outcome_formula,
                        const std::string& treatment, const Dataset& data,
                        GLMFamily mediator_family, GLMFamily outcome_family,
                        const RngStream& stream, const PrecisionTarget& targets,
                        const MediationOptions& options) {
  if (mediator_family.name == FamilyName::negbinom ||
      outcome_family.name == FamilyName::negbinom)
    throw UserError("mediation supports gaussian/binomial/poisson submodels");
  if (mediator_formula.wildcard || outcome_formula.wildcard)
    throw UserError("mediation formulas must name their terms explicitly");
  if (!mediator_formula.response || !outcome_formula.response)
    throw UserError("mediation needs non-survival responses");

  const std::string mediator = *mediator_formula.response;
  const auto& oterms = outcome_formula.terms;
  if (std::find(oterms.begin(), oterms.end(), mediator) == oterms.end())
    throw UserError("the outcome model must include the mediator '" + mediator + "'");
  if (std::find(oterms.begin(), oterms.end(), treatment) == oterms.end() ||
      std::find(mediator_formula.terms.begin(), mediator_formula.terms.end(),
                treatment) == mediator_formula.terms.end())
    throw UserError("both models must include the treatment '" + treatment + "'");

  // common complete-case rows across every variable either model touches
  std::set<std::string> vars;
  for (const auto& f : {mediator_formula, outcome_formula}) {
    for (const auto& v : f.response_names()) vars.insert(v);
    for (const auto& v : f.terms) vars.insert(v);
  }
  std::vector<std::size_t> used_cols;
  for (const auto& v : vars) used_cols.push_back(data.column_index(v));
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < data.n_rows; ++r)
    if (!data.row_missing(r, used_cols)) keep.push_back(r);
  if (keep.empty()) throw UserError("no complete rows for the mediation models");
  const Dataset common = subset_rows(data, keep);

  Submodel med = build_submodel(mediator_formula, common, mediator_family,
                                treatment, stream.child(1));
  Submodel out = build_submodel(outcome_formula, common, outcome_family,
                                treatment, stream.child(2));

  // outcome-design mediator column (single numeric or binary contrast)
  const auto& mterm = out.design.terms[out.design.term_index(mediator)];
  if (mterm.columns.size() != 1)
    throw UserError("the mediator must enter the outcome model as one column");
  const auto med_col = static_cast<Eigen::Index>(mterm.columns[0]);
  const auto trt_col_out = static_cast<Eigen::Index>(out.treatment_col);
  const auto trt_col_med = static_cast<Eigen::Index>(med.treatment_col);

  const auto n = static_cast<Eigen::Index>(out.design.n());
  const auto p_med = static_cast<Eigen::Index>(med.design.p());
  const auto p_out = static_cast<Eigen::Index>(out.design.p());

  // per-unit design rows with the treatment forced to each level;
  // the mediator column is zeroed so eta = base + gamma_M * M
  Eigen::MatrixXd Xmed0 = med.design.X, Xmed1 = med.design.X;
  Xmed0.col(trt_col_med).setZero();
  Xmed1.col(trt_col_med).setOnes();
  Eigen::MatrixXd Xout0 = out.design.X, Xout1 = out.design.X;
  Xout0.col(trt_col_out).setZero();
  Xout1.col(trt_col_out).setOnes();
  Xout0.col(med_col).setZero();
  Xout1.col(med_col).setZero();

  const bool med_noise =
      med.family.name != FamilyName::gaussian || options.gaussian_noise;
  const bool out_noise =
      out.family.name != FamilyName::gaussian || options.gaussian_noise;

  RngStream sim_base = stream.child(3);
  std::size_t batch_no = 0;

  PrecisionTarget t = targets;
  t.ci_level = options.ci_level;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        RngStream sim = sim_base.child(batch_no++);
        const auto rows = static_cast<std::size_t>(block.rows());
        const Eigen::MatrixXd med_draws = med.draw(rng, rows);
        const Eigen::MatrixXd out_draws = out.draw(rng, rows);

        Eigen::VectorXd m0(n), m1(n);
        auto sim_value = [&](const GLMFamily& fam, double eta, double aux,
                             bool noise) {
          const double mu = fam.inverse_link(eta);
          if (!noise) return mu;
          switch (fam.name) {
            case FamilyName::gaussian: return mu + std::sqrt(aux) * sim.normal();
            case FamilyName::binomial:
              return static_cast<double>(sim.bernoulli(mu));
            default: return static_cast<double>(sim.poisson(mu));
          }
        };

        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const Eigen::VectorXd theta_m = med_draws.row(r).head(p_med);
          const double aux_m = med.family.has_aux()
                                   ? (med.family.name == FamilyName::gaussian &&
                                              med_draws.cols() == p_med + 1
                                          ? med_draws(r, p_med)
                                          : std::exp(med_draws(r, p_med)))
                                   : 0.0;
          const Eigen::VectorXd theta_y = out_draws.row(r).head(p_out);
          const double aux_y = out.family.has_aux()
                                   ? (out.family.name == FamilyName::gaussian &&
                                              out_draws.cols() == p_out + 1
                                          ? out_draws(r, p_out)
                                          : std::exp(out_draws(r, p_out)))
                                   : 0.0;
          const double gamma_m = theta_y[med_col];

          const Eigen::VectorXd eta_m0 = Xmed0 * theta_m;
          const Eigen::VectorXd eta_m1 = Xmed1 * theta_m;
          const Eigen::VectorXd eta_y0 = Xout0 * theta_y;
          const Eigen::VectorXd eta_y1 = Xout1 * theta_y;

          double acme0 = 0, acme1 = 0, ade0 = 0, ade1 = 0, total = 0;
          for (Eigen::Index i = 0; i < n; ++i) {
            m0[i] = sim_value(med.family, eta_m0[i], aux_m, med_noise);
            m1[i] = sim_value(med.family, eta_m1[i], aux_m, med_noise);
            const double y00 =
                sim_value(out.family, eta_y0[i] + gamma_m * m0[i], aux_y, out_noise);
            const double y01 =
                sim_value(out.family, eta_y0[i] + gamma_m * m1[i], aux_y, out_noise);
            const double y10 =
                sim_value(out.family, eta_y1[i] + gamma_m * m0[i], aux_y, out_noise);
            const double y11 =
                sim_value(out.family, eta_y1[i] + gamma_m * m1[i], aux_y, out_noise);
            acme0 += y01 - y00;
            acme1 += y11 - y10;
            ade0 += y10 - y00;
            ade1 += y11 - y01;
            total += y11 - y00;
          }
          const double dn = static_cast<double>(n);
          block(r, 0) = acme0 / dn;
          block(r, 1) = acme1 / dn;
          block(r, 2) = ade0 / dn;
          block(r, 3) = ade1 / dn;
          block(r, 4) = total / dn;
          block(r, 5) = theta_m[trt_col_med];  // treatment -> mediator path
          block(r, 6) = gamma_m;               // mediator -> outcome path
        }
      },
      t, 7, stream);

  MediationResult result;
  result.treatment = treatment;
  result.mediator = mediator;
  result.effect_draws = res.draws;
  result.plans = res.plans;
  result.n_units = static_cast<std::size_t>(n);

  auto col_summary = [&](Eigen::Index c, const std::string& label) {
    const auto col = res.draws.col(c);
    return summarize_draws(std::span<const double>(col.data(), res.total()),
                           label, options.ci_level);
  };
  result.acme_t0 = col_summary(0, "ACME (control)");
  result.acme_t1 = col_summary(1, "ACME (treated)");
  result.ade_t0 = col_summary(2, "ADE (control)");
  result.ade_t1 = col_summary(3, "ADE (treated)");
  result.total_effect = col_summary(4, "total effect");

  if (result.total_effect.prob_direction > 0.95) {
    std::vector<double> prop;
    prop.reserve(res.total());
    for (Eigen::Index r = 0; r < res.draws.rows(); ++r) {
      const double tot = res.draws(r, 4);
      if (tot != 0.0)
        prop.push_back(0.5 * (res.draws(r, 0) + res.draws(r, 1)) / tot);
    }
    if (prop.size() >= 2)
      result.proportion_mediated =
          summarize_draws(prop, "proportion mediated", options.ci_level);
  }
  return result;
}

}  // namespace bayesics
