#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>

#include "bayesics/dataset.hpp"
#include "bayesics/formula.hpp"
#include "bayesics/glm.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

// Causal mediation via simulated potential outcomes: per joint posterior
// draw (mediator and outcome submodels independent), each unit's mediator is
// simulated under both treatment levels and the outcome under the four
// (treatment, mediator) combinations. Effects average over units per draw:
//   ACME(t) = mean_i[ Y_i(t, M_i(t1)) - Y_i(t, M_i(t0)) ]
//   ADE(t)  = mean_i[ Y_i(t1, M_i(t)) - Y_i(t0, M_i(t)) ]
//   total   = ACME(t1) + ADE(t0)  (== ACME(t0) + ADE(t1) identically)

struct MediationOptions {
  double ci_level = 0.95;
  /// Gaussian submodels use their mean function ("no-noise") by default;
  /// discrete families always sample. True forces sampling for gaussian too.
  bool gaussian_noise = false;
};

struct MediationResult {
  std::string treatment;
  std::string mediator;
  InferenceSummary acme_t0, acme_t1;
  InferenceSummary ade_t0, ade_t1;
  InferenceSummary total_effect;
  std::optional<InferenceSummary> proportion_mediated;  // when total PDir > 0.95
  // columns: acme0 acme1 ade0 ade1 total, then the treatment->mediator
  // and mediator->outcome path coefficients per draw
  Eigen::MatrixXd effect_draws;
  std::vector<SamplePlan> plans;
  std::size_t n_units = 0;
};

MediationResult mediate(const Formula& mediator_formula,
                        const Formula& outcome_formula,
                        const std::string& treatment, const Dataset& data,
                        GLMFamily mediator_family, GLMFamily outcome_family,
                        const RngStream& stream,
                        const PrecisionTarget& targets = {},
                        const MediationOptions& options = {});

}  // namespace bayesics
