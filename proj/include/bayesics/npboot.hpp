#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bayesics/design.hpp"
#include "bayesics/glm.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

/// Loss-likelihood bootstrap: replicate r draws w ~ Dirichlet(1,...,1) and
/// minimizes sum_i n w_i * loss(beta; y_i, x_i), where the default loss is
/// the family negative log likelihood (self-information loss).
struct NpGlmFit {
  DesignSpec design;
  GLMFamily family;
  Eigen::MatrixXd replicates;  // rows x p coefficient draws
  Eigen::VectorXd mle;         // equal-weights minimizer
  std::vector<InferenceSummary> summaries;
  std::vector<SamplePlan> plans;
};

/// Damped-Newton minimizer of the weighted self-information loss
/// (tolerance 1e-8, 200-iteration cap). Exposed for the exactness tests.
Eigen::VectorXd weighted_loss_minimizer(const DesignSpec& design,
                                        const GLMFamily& family,
                                        std::span<const double> weights,
                                        const Eigen::VectorXd& start,
                                        double tol = 1e-8, int max_iter = 200);

NpGlmFit fit_np_glm(const DesignSpec& design, GLMFamily family,
                    const RngStream& stream, const PrecisionTarget& targets = {},
                    double ci_level = 0.95);

struct NpBandPoint {
  double x = 0.0;
  std::string level;
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct NpBand {
  std::string variable;
  std::vector<NpBandPoint> points;
};

/// Pointwise quantile band of the per-replicate fitted values over a grid;
/// off-axis covariates fixed at the medoid row.
NpBand np_credible_band(const NpGlmFit& fit, const std::string& variable,
                        double ci_level = 0.95, std::size_t grid_size = 100);

}  // namespace bayesics
