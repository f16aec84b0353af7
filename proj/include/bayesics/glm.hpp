#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "bayesics/design.hpp"
#include "bayesics/linear.hpp"
#include "bayesics/mc_plan.hpp"
#include "bayesics/summary.hpp"

namespace bayesics {

enum class FamilyName { gaussian, binomial, poisson, negbinom };

struct GLMFamily {
  FamilyName name = FamilyName::gaussian;

  static GLMFamily parse(const std::string& text);
  const char* text() const;
  const char* link_name() const;  // identity / logit / log
  bool has_aux() const {
    return name == FamilyName::gaussian || name == FamilyName::negbinom;
  }
  bool count_family() const {
    return name == FamilyName::poisson || name == FamilyName::negbinom;
  }
  double inverse_link(double eta) const;
  /// Family variance at mean mu with auxiliary parameter (sigma^2 or phi).
  double variance(double mu, double aux) const;
};

/// Independent normal priors on the link scale. The auxiliary parameter
/// (log sigma^2 or log phi) gets its own normal prior.
struct GLMPrior {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  double aux_mean = 0.0;
  double aux_sd = 3.0;
};

/// Defaults: coefficient N(0, (5/s_xj)^2), binary/contrast columns use
/// s_xj = 1; intercept N(0, 10^2); negbinom log-phi N(0, 3^2); gaussian
/// log-sigma^2 centered at the log sample variance of y.
GLMPrior default_glm_prior(const DesignSpec& design, const GLMFamily& family);

enum class GLMMethod { vb, laplace, importance };

struct VBConfig {
  int mc_samples = 10;
  int max_steps = 50000;
  int min_steps = 200;
  int ma_window = 50;
  double rel_tol = 1e-4;
  double learning_rate = 0.02;
};

struct GaussianApprox {
  Eigen::VectorXd m;   // coefficients, then the auxiliary parameter
  Eigen::MatrixXd C;   // full covariance
  std::vector<double> elbo_trace;
  GLMMethod method = GLMMethod::vb;
};

struct GLMFit {
  DesignSpec design;
  GLMFamily family;
  GLMPrior prior;
  GaussianApprox approx;
  Eigen::VectorXd offset;  // log-offset added to eta (count families)

  // importance method only
  Eigen::MatrixXd importance_draws;    // rows x q
  Eigen::VectorXd importance_weights;  // self-normalized
  double ess = 0.0;

  std::vector<std::string> warnings;

  std::size_t p() const { return design.p(); }
  std::size_t q() const { return design.p() + (family.has_aux() ? 1 : 0); }
  bool is_importance() const { return approx.method == GLMMethod::importance; }
};

/// Log joint density of (y, theta) for a GLM with independent normal priors;
/// theta = (beta, aux). Exposed for the optimizers and for gradient tests.
class GLMLogJoint {
 public:
  GLMLogJoint(const DesignSpec& design, GLMFamily family, GLMPrior prior,
              Eigen::VectorXd offset);

  double value(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  double loglik_only(const Eigen::VectorXd& theta) const;
  double pointwise_loglik(const Eigen::VectorXd& theta, std::size_t i) const;
  std::size_t dim() const { return q_; }

 private:
  const Eigen::MatrixXd X_;
  const Eigen::VectorXd y_;
  GLMFamily family_;
  GLMPrior prior_;
  Eigen::VectorXd offset_;
  std::size_t q_;
};

/// Monte Carlo ELBO for q = N(m, L L') using the supplied standard-normal
/// draws; fills the gradients with respect to m and the lower triangle of L.
double vb_elbo_grad(const GLMLogJoint& joint, const Eigen::VectorXd& m,
                    const Eigen::MatrixXd& L,
                    const std::vector<Eigen::VectorXd>& z_draws,
                    Eigen::VectorXd* grad_m, Eigen::MatrixXd* grad_L);

GLMFit fit_glm(const DesignSpec& design, GLMFamily family,
               std::optional<GLMPrior> prior, GLMMethod method,
               const RngStream& stream, const VBConfig& config = {},
               Eigen::VectorXd offset = {},
               const PrecisionTarget& targets = {});

/// Joint posterior draws (rows x q) from the fitted approximation; the
/// importance method resamples its weighted particles.
Eigen::MatrixXd glm_posterior_draws(const GLMFit& fit, RngStream& rng,
                                    std::size_t n_draws);

struct BayesianPValue {
  double p = 0.5;
  std::vector<std::pair<double, double>> pairs;  // (T_pred, T_obs) per draw
  SamplePlan plan;
};

/// Posterior-predictive check with the chi-square discrepancy
/// T(y, theta) = sum_i (y_i - mu_i)^2 / Var_i(theta).
BayesianPValue bayesian_pvalue(const GLMFit& fit, const RngStream& stream,
                               const PrecisionTarget& targets = {});

std::vector<BayesFactor> glm_coefficient_bfs(const GLMFit& fit);

InfoCriteria glm_information_criteria(const GLMFit& fit, const RngStream& stream,
                                      const PrecisionTarget& targets = {});

/// Pointwise response-scale band over one variable, other covariates fixed
/// at the medoid (or user exemplar).
CredibleBand glm_credible_band(const GLMFit& fit, const std::string& variable,
                               const RngStream& stream, double ci_level = 0.95,
                               const std::optional<Exemplar>& exemplar = std::nullopt,
                               std::size_t grid_size = 50,
                               const PrecisionTarget& targets = {});

enum class PredictType { link, response, predictive };

/// Per-row predictive summaries for new data (columns matched by name).
std::vector<InferenceSummary> predict(const GLMFit& fit, const Dataset& new_data,
                                      PredictType type, const RngStream& stream,
                                      double ci_level = 0.95,
                                      const PrecisionTarget& targets = {});

/// Design rows for new data under an existing design's encoding.
Eigen::MatrixXd design_rows_for(const DesignSpec& design, const Dataset& new_data);

}  // namespace bayesics
