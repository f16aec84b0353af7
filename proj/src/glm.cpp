#include "bayesics/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "bayesics/dist.hpp"
#include "bayesics/error.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

GLMFamily GLMFamily::parse(const std::string& text) {
  if (text == "gaussian") return {FamilyName::gaussian};
  if (text == "binomial") return {FamilyName::binomial};
  if (text == "poisson") return {FamilyName::poisson};
  if (text == "negbinom") return {FamilyName::negbinom};
  throw UserError("unknown family '" + text +
                  "' (expected gaussian|binomial|poisson|negbinom)");
}

const char* GLMFamily::text() const {
  switch (name) {
    case FamilyName::gaussian: return "gaussian";
    case FamilyName::binomial: return "binomial";
    case FamilyName::poisson: return "poisson";
    case FamilyName::negbinom: return "negbinom";
  }
  return "?";
}

const char* GLMFamily::link_name() const {
  switch (name) {
    case FamilyName::gaussian: return "identity";
    case FamilyName::binomial: return "logit";
    default: return "log";
  }
}

double GLMFamily::inverse_link(double eta) const {
  switch (name) {
    case FamilyName::gaussian: return eta;
    case FamilyName::binomial: return sigmoid(eta);
    default: return std::exp(eta);
  }
}

double GLMFamily::variance(double mu, double aux) const {
  switch (name) {
    case FamilyName::gaussian: return aux;              // sigma^2
    case FamilyName::binomial: return mu * (1.0 - mu);
    case FamilyName::poisson: return mu;
    case FamilyName::negbinom: return mu + mu * mu / aux;  // aux = phi
  }
  return 0.0;
}

GLMPrior default_glm_prior(const DesignSpec& design, const GLMFamily& family) {
  const auto p = static_cast<Eigen::Index>(design.p());
  GLMPrior prior;
  prior.mean = Eigen::VectorXd::Zero(p);
  prior.sd.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto kind = design.kinds[static_cast<std::size_t>(j)];
    if (kind == ColumnKind::intercept) {
      prior.sd[j] = 10.0;
    } else if (kind == ColumnKind::numeric) {
      prior.sd[j] = 5.0 / design.column_sd[static_cast<std::size_t>(j)];
    } else {
      prior.sd[j] = 5.0;  // binary contrast columns use s_x = 1
    }
  }
  prior.aux_mean = 0.0;
  prior.aux_sd = 3.0;
  if (family.name == FamilyName::gaussian) {
    const std::span<const double> ys(design.y.data(),
                                     static_cast<std::size_t>(design.y.size()));
    const double s2 = sample_variance(ys);
    prior.aux_mean = std::log(std::max(s2, 1e-12));
  }
  return prior;
}

GLMLogJoint::GLMLogJoint(const DesignSpec& design, GLMFamily family,
                         GLMPrior prior, Eigen::VectorXd offset)
    : X_(design.X),
      y_(design.y),
      family_(family),
      prior_(std::move(prior)),
      offset_(std::move(offset)),
      q_(design.p() + (family.has_aux() ? 1 : 0)) {
  if (offset_.size() != 0 && offset_.size() != X_.rows())
    throw UserError("offset length does not match the data");
}

double GLMLogJoint::pointwise_loglik(const Eigen::VectorXd& theta,
                                     std::size_t i) const {
  const Eigen::Index p = X_.cols();
  double eta = X_.row(static_cast<Eigen::Index>(i)).dot(theta.head(p));
  if (offset_.size()) eta += offset_[static_cast<Eigen::Index>(i)];
  const double y = y_[static_cast<Eigen::Index>(i)];
  switch (family_.name) {
    case FamilyName::gaussian: {
      const double ls2 = theta[p];
      const double r = y - eta;
      return -0.5 * (kLog2Pi + ls2) - 0.5 * r * r * std::exp(-ls2);
    }
    case FamilyName::binomial:
      return y * eta - softplus(eta);
    case FamilyName::poisson:
      return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
    case FamilyName::negbinom: {
      const double lphi = theta[p];
      const double phi = std::exp(lphi);
      const double log_phi_mu = (eta > lphi)
                                    ? eta + std::log1p(std::exp(lphi - eta))
                                    : lphi + std::log1p(std::exp(eta - lphi));
      return std::lgamma(y + phi) - std::lgamma(phi) - std::lgamma(y + 1.0) +
             phi * (lphi - log_phi_mu) + y * (eta - log_phi_mu);
    }
  }
  return 0.0;
}

double GLMLogJoint::loglik_only(const Eigen::VectorXd& theta) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < X_.rows(); ++i)
    total += pointwise_loglik(theta, static_cast<std::size_t>(i));
  return total;
}

double GLMLogJoint::value(const Eigen::VectorXd& theta) const {
  double total = loglik_only(theta);
  const Eigen::Index p = X_.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double z = (theta[j] - prior_.mean[j]) / prior_.sd[j];
    total += -0.5 * z * z - std::log(prior_.sd[j]) - 0.5 * kLog2Pi;
  }
  if (family_.has_aux()) {
    const double z = (theta[p] - prior_.aux_mean) / prior_.aux_sd;
    total += -0.5 * z * z - std::log(prior_.aux_sd) - 0.5 * kLog2Pi;
  }
  return total;
}

Eigen::VectorXd GLMLogJoint::gradient(const Eigen::VectorXd& theta) const {
  const Eigen::Index p = X_.cols();
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q_));
  Eigen::VectorXd eta = X_ * theta.head(p);
  if (offset_.size()) eta += offset_;

  Eigen::VectorXd dl_deta(n);
  double dl_daux = 0.0;
  switch (family_.name) {
    case FamilyName::gaussian: {
      const double inv_s2 = std::exp(-theta[p]);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = y_[i] - eta[i];
        dl_deta[i] = r * inv_s2;
        dl_daux += -0.5 + 0.5 * r * r * inv_s2;
      }
      break;
    }
    case FamilyName::binomial:
      for (Eigen::Index i = 0; i < n; ++i) dl_deta[i] = y_[i] - sigmoid(eta[i]);
      break;
    case FamilyName::poisson:
      for (Eigen::Index i = 0; i < n; ++i) dl_deta[i] = y_[i] - std::exp(eta[i]);
      break;
    case FamilyName::negbinom: {
      const double lphi = theta[p];
      const double phi = std::exp(lphi);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = std::exp(eta[i]);
        const double denom = phi + mu;
        dl_deta[i] = y_[i] - (y_[i] + phi) * mu / denom;
        const double log_phi_mu = (eta[i] > lphi)
                                      ? eta[i] + std::log1p(std::exp(lphi - eta[i]))
                                      : lphi + std::log1p(std::exp(eta[i] - lphi));
        const double dphi = digamma_fn(y_[i] + phi) - digamma_fn(phi) +
                            (lphi - log_phi_mu) + 1.0 - (y_[i] + phi) / denom;
        dl_daux += phi * dphi;
      }
      break;
    }
  }
  g.head(p) = X_.transpose() * dl_deta;
  if (family_.has_aux()) g[p] = dl_daux;

  for (Eigen::Index j = 0; j < p; ++j)
    g[j] -= (theta[j] - prior_.mean[j]) / (prior_.sd[j] * prior_.sd[j]);
  if (family_.has_aux())
    g[p] -= (theta[p] - prior_.aux_mean) / (prior_.aux_sd * prior_.aux_sd);
  return g;
}

namespace {

void check_response(const DesignSpec& design, const GLMFamily& family) {
  const auto& y = design.y;
  switch (family.name) {
    case FamilyName::binomial:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0)
          throw UserError("binomial responses must be 0/1");
      break;
    case FamilyName::poisson:
    case FamilyName::negbinom:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] < 0 || std::fabs(y[i] - std::round(y[i])) > 1e-9)
          throw UserError("count responses must be nonnegative integers");
      break;
    case FamilyName::gaussian:
      break;
  }
}

void check_separation(const DesignSpec& design, const GLMFamily& family,
                      const Eigen::VectorXd& theta) {
  if (family.name == FamilyName::gaussian) return;
  for (std::size_t j = 0; j < design.p(); ++j) {
    if (design.kinds[j] == ColumnKind::intercept) continue;
    const double scaled = std::fabs(theta[static_cast<Eigen::Index>(j)]) *
                          design.column_sd[j];
    if (scaled > 15.0)
      throw NumericalError("separation detected: the likelihood is flat in '" +
                           design.labels[j] + "' (|coefficient| diverging)");
  }
}

struct NewtonResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd neg_hessian;
  double value = 0.0;
  bool converged = false;
};

Eigen::MatrixXd numeric_neg_hessian(const GLMLogJoint& joint,
                                    const Eigen::VectorXd& theta) {
  const auto q = static_cast<Eigen::Index>(joint.dim());
  Eigen::MatrixXd H(q, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double h = 1e-5 * (1.0 + std::fabs(theta[k]));
    Eigen::VectorXd tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    H.col(k) = (joint.gradient(tp) - joint.gradient(tm)) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose()).eval();
  return -H;
}

NewtonResult newton_maximize(const GLMLogJoint& joint,
                             const DesignSpec& design, const GLMFamily& family,
                             Eigen::VectorXd theta, int max_iter = 200) {
  NewtonResult res;
  double f = joint.value(theta);
  for (int it = 0; it < max_iter; ++it) {
    check_separation(design, family, theta);
    const Eigen::VectorXd g = joint.gradient(theta);
    if (g.lpNorm<Eigen::Infinity>() < 1e-8 * (1.0 + std::fabs(f))) {
      res.converged = true;
      break;
    }
    Eigen::MatrixXd nH = numeric_neg_hessian(joint, theta);
    double ridge = 0.0;
    Eigen::VectorXd dir;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::LLT<Eigen::MatrixXd> llt(
          nH + ridge * Eigen::MatrixXd::Identity(nH.rows(), nH.cols()));
      if (llt.info() == Eigen::Success) {
        dir = llt.solve(g);
        break;
      }
      ridge = ridge == 0.0 ? 1e-8 * (1.0 + nH.diagonal().cwiseAbs().maxCoeff())
                           : ridge * 10.0;
    }
    if (dir.size() == 0)
      throw NumericalError("Newton step failed: Hessian could not be stabilized");

    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd cand = theta + alpha * dir;
      const double fc = joint.value(cand);
      if (std::isfinite(fc) && fc > f + 1e-4 * alpha * g.dot(dir)) {
        theta = cand;
        f = fc;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      res.converged = g.lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + std::fabs(f));
      break;
    }
  }
  check_separation(design, family, theta);
  res.theta = theta;
  res.value = f;
  res.neg_hessian = numeric_neg_hessian(joint, theta);
  return res;
}

Eigen::MatrixXd spd_inverse(Eigen::MatrixXd A, const char* what) {
  double ridge = 0.0;
  for (int tries = 0; tries < 12; ++tries) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        A + ridge * Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    if (llt.info() == Eigen::Success)
      return llt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    ridge = ridge == 0.0 ? 1e-10 * (1.0 + A.diagonal().cwiseAbs().maxCoeff())
                         : ridge * 10.0;
  }
  throw NumericalError(std::string(what) + ": matrix could not be inverted");
}

Eigen::MatrixXd chol_lower(const Eigen::MatrixXd& A, const char* what) {
  double ridge = 0.0;
  for (int tries = 0; tries < 12; ++tries) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        A + ridge * Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    if (llt.info() == Eigen::Success) return llt.matrixL();
    ridge = ridge == 0.0 ? 1e-12 * (1.0 + A.diagonal().cwiseAbs().maxCoeff())
                         : ridge * 10.0;
  }
  throw NumericalError(std::string(what) + ": Cholesky failed");
}

Eigen::VectorXd initial_theta(const DesignSpec& design, const GLMFamily& family,
                              std::size_t q) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  const std::span<const double> ys(design.y.data(),
                                   static_cast<std::size_t>(design.y.size()));
  const double ybar = mean(ys);
  if (design.has_intercept()) {
    switch (family.name) {
      case FamilyName::gaussian: theta[0] = ybar; break;
      case FamilyName::binomial:
        theta[0] = std::log((ybar + 0.01) / (1.0 - ybar + 0.01));
        break;
      default: theta[0] = std::log(ybar + 0.01); break;
    }
  }
  if (family.name == FamilyName::gaussian)
    theta[static_cast<Eigen::Index>(q) - 1] =
        std::log(std::max(sample_variance(ys), 1e-8));
  return theta;
}

}  // namespace

double vb_elbo_grad(const GLMLogJoint& joint, const Eigen::VectorXd& m,
                    const Eigen::MatrixXd& L,
                    const std::vector<Eigen::VectorXd>& z_draws,
                    Eigen::VectorXd* grad_m, Eigen::MatrixXd* grad_L) {
  const auto q = static_cast<Eigen::Index>(joint.dim());
  double elbo = 0.0;
  if (grad_m) grad_m->setZero(q);
  if (grad_L) grad_L->setZero(q, q);
  for (const auto& z : z_draws) {
    const Eigen::VectorXd theta = m + L * z;
    elbo += joint.value(theta);
    if (grad_m || grad_L) {
      const Eigen::VectorXd g = joint.gradient(theta);
      if (grad_m) *grad_m += g;
      if (grad_L) grad_L->triangularView<Eigen::Lower>() += g * z.transpose();
    }
  }
  const double S = static_cast<double>(z_draws.size());
  elbo /= S;
  if (grad_m) *grad_m /= S;
  if (grad_L) *grad_L /= S;

  // Gaussian entropy: q/2 log(2 pi e) + sum log L_ii (exact, not sampled)
  elbo += 0.5 * q * (kLog2Pi + 1.0);
  for (Eigen::Index i = 0; i < q; ++i) {
    elbo += std::log(L(i, i));
    if (grad_L) (*grad_L)(i, i) += 1.0 / L(i, i);
  }
  return elbo;
}

namespace {

GaussianApprox run_vb(const GLMLogJoint& joint, const DesignSpec& design,
                      const GLMFamily& family, const VBConfig& cfg,
                      const RngStream& stream, Eigen::VectorXd m0,
                      Eigen::MatrixXd L0) {
  const auto q = static_cast<Eigen::Index>(joint.dim());
  Eigen::VectorXd m = std::move(m0);
  Eigen::MatrixXd L = std::move(L0);

  // Adam state over (m, strict lower triangle of L, log diag of L)
  const auto n_par = static_cast<std::size_t>(q + q * (q + 1) / 2);
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_par));
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_par));
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  GaussianApprox approx;
  approx.method = GLMMethod::vb;
  RngStream rng = stream.child(0xE1B0);
  std::vector<Eigen::VectorXd> z(static_cast<std::size_t>(cfg.mc_samples),
                                 Eigen::VectorXd(q));

  Eigen::VectorXd gm(q);
  Eigen::MatrixXd gL(q, q);
  std::deque<double> window;

  // averaging the plateau iterates removes the stochastic-gradient jitter
  std::deque<std::pair<Eigen::VectorXd, Eigen::MatrixXd>> plateau;
  const auto plateau_cap = static_cast<std::size_t>(std::max(4 * cfg.ma_window, 1));

  for (int step = 1; step <= cfg.max_steps; ++step) {
    for (auto& zi : z)
      for (Eigen::Index k = 0; k < q; ++k) zi[k] = rng.normal();
    const double elbo = vb_elbo_grad(joint, m, L, z, &gm, &gL);
    approx.elbo_trace.push_back(elbo);

    // pack gradients (chain rule for the log-diagonal)
    Eigen::VectorXd grad(static_cast<Eigen::Index>(n_par));
    Eigen::Index idx = 0;
    for (Eigen::Index k = 0; k < q; ++k) grad[idx++] = gm[k];
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < i; ++j) grad[idx++] = gL(i, j);
    for (Eigen::Index i = 0; i < q; ++i) grad[idx++] = gL(i, i) * L(i, i);

    const double bc1 = 1.0 - std::pow(b1, step);
    const double bc2 = 1.0 - std::pow(b2, step);
    adam_m = b1 * adam_m + (1.0 - b1) * grad;
    adam_v = b2 * adam_v.array().matrix() +
             (1.0 - b2) * grad.array().square().matrix();

    idx = 0;
    auto take = [&](double cur) {
      const double mhat = adam_m[idx] / bc1;
      const double vhat = adam_v[idx] / bc2;
      ++idx;
      return cur + cfg.learning_rate * mhat / (std::sqrt(vhat) + eps);
    };
    for (Eigen::Index k = 0; k < q; ++k) m[k] = take(m[k]);
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < i; ++j) L(i, j) = take(L(i, j));
    for (Eigen::Index i = 0; i < q; ++i)
      L(i, i) = std::exp(take(std::log(L(i, i))));

    check_separation(design, family, m);

    plateau.emplace_back(m, L);
    if (plateau.size() > plateau_cap) plateau.pop_front();

    // moving-average convergence rule
    window.push_back(elbo);
    if (window.size() > static_cast<std::size_t>(2 * cfg.ma_window))
      window.pop_front();
    if (step >= cfg.min_steps &&
        window.size() == static_cast<std::size_t>(2 * cfg.ma_window) &&
        step % cfg.ma_window == 0) {
      double ma_old = 0.0, ma_new = 0.0;
      for (int i = 0; i < cfg.ma_window; ++i) {
        ma_old += window[static_cast<std::size_t>(i)];
        ma_new += window[static_cast<std::size_t>(i + cfg.ma_window)];
      }
      ma_old /= cfg.ma_window;
      ma_new /= cfg.ma_window;
      if (std::fabs(ma_new - ma_old) < cfg.rel_tol * (1.0 + std::fabs(ma_new)))
        break;
    }
    if (step == cfg.max_steps)
      throw NumericalError(
          "variational optimization failed to converge after " +
          std::to_string(cfg.max_steps) + " steps (final ELBO " +
          std::to_string(elbo) + ")");
  }

  Eigen::VectorXd m_avg = Eigen::VectorXd::Zero(q);
  Eigen::MatrixXd L_avg = Eigen::MatrixXd::Zero(q, q);
  for (const auto& [mi, Li] : plateau) {
    m_avg += mi;
    L_avg += Li;
  }
  m_avg /= static_cast<double>(plateau.size());
  L_avg /= static_cast<double>(plateau.size());
  approx.m = m_avg;
  approx.C = L_avg * L_avg.transpose();
  return approx;
}

}  // namespace

GLMFit fit_glm(const DesignSpec& design, GLMFamily family,
               std::optional<GLMPrior> prior, GLMMethod method,
               const RngStream& stream, const VBConfig& config,
               Eigen::VectorXd offset, const PrecisionTarget& targets) {
  if (design.is_survival) throw UserError("fit_glm expects a non-survival response");
  check_response(design, family);
  if (offset.size() && !family.count_family())
    throw UserError("offsets are only supported for poisson/negbinom");

  GLMFit fit;
  fit.design = design;
  fit.family = family;
  fit.prior = prior ? std::move(*prior) : default_glm_prior(design, family);
  if (fit.prior.mean.size() != static_cast<Eigen::Index>(design.p()) ||
      fit.prior.sd.size() != static_cast<Eigen::Index>(design.p()))
    throw UserError("prior dimensions do not match the design");
  fit.offset = std::move(offset);

  const GLMLogJoint joint(design, family, fit.prior, fit.offset);
  const auto q = static_cast<Eigen::Index>(fit.q());

  // Posterior mode and curvature anchor every method.
  const auto mode = newton_maximize(joint, design, family,
                                    initial_theta(design, family, fit.q()));
  if (!mode.converged)
    fit.warnings.push_back("posterior mode search hit its iteration cap");
  const Eigen::MatrixXd C_lap = spd_inverse(mode.neg_hessian, "Laplace covariance");

  switch (method) {
    case GLMMethod::laplace: {
      fit.approx.method = GLMMethod::laplace;
      fit.approx.m = mode.theta;
      fit.approx.C = C_lap;
      break;
    }
    case GLMMethod::vb: {
      const Eigen::MatrixXd L0 = chol_lower(C_lap, "VB init");
      fit.approx = run_vb(joint, design, family, config, stream, mode.theta, L0);
      break;
    }
    case GLMMethod::importance: {
      fit.approx.method = GLMMethod::importance;
      fit.approx.m = mode.theta;
      fit.approx.C = C_lap;

      const double df = 5.0;
      const Eigen::MatrixXd L = chol_lower(C_lap, "importance proposal");
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < q; ++i) logdet += std::log(L(i, i));
      const double qd = static_cast<double>(q);
      const double log_norm = std::lgamma((df + qd) / 2.0) -
                              std::lgamma(df / 2.0) -
                              0.5 * qd * std::log(df * M_PI) - logdet;

      RngStream rng = stream.child(0x1A7);
      auto draw_batch = [&](std::size_t count, Eigen::MatrixXd& draws,
                            Eigen::VectorXd& logw) {
        draws.resize(static_cast<Eigen::Index>(count), q);
        logw.resize(static_cast<Eigen::Index>(count));
        Eigen::VectorXd t(q);
        for (std::size_t s = 0; s < count; ++s) {
          const double u = rng.chi_squared(df);
          for (Eigen::Index k = 0; k < q; ++k) t[k] = rng.normal();
          t *= std::sqrt(df / u);
          const Eigen::VectorXd theta = mode.theta + L * t;
          const double logq =
              log_norm - 0.5 * (df + qd) * std::log1p(t.squaredNorm() / df);
          draws.row(static_cast<Eigen::Index>(s)) = theta.transpose();
          logw[static_cast<Eigen::Index>(s)] = joint.value(theta) - logq;
        }
      };

      Eigen::MatrixXd pilot_draws;
      Eigen::VectorXd pilot_logw;
      const std::size_t pilot = std::max<std::size_t>(targets.pilot_size, 100);
      draw_batch(pilot, pilot_draws, pilot_logw);

      auto normalize = [](Eigen::VectorXd logw) {
        const double mx = logw.maxCoeff();
        Eigen::VectorXd w = (logw.array() - mx).exp();
        w /= w.sum();
        return w;
      };
      const Eigen::VectorXd wp = normalize(pilot_logw);
      const double ess_pilot = 1.0 / wp.array().square().sum();

      // plan per coefficient on the weighted pilot, inflated by the
      // weight-induced efficiency loss
      const double inflate = static_cast<double>(pilot) / std::max(ess_pilot, 2.0);
      const double alpha_half = (1.0 - targets.ci_level) / 2.0;
      std::size_t total = pilot;
      for (Eigen::Index k = 0; k < q; ++k) {
        const std::vector<double> col(pilot_draws.col(k).data(),
                                      pilot_draws.col(k).data() + pilot);
        const std::vector<double> w(wp.data(), wp.data() + pilot);
        double wmean = 0.0, wvar = 0.0;
        for (std::size_t i = 0; i < pilot; ++i) wmean += w[i] * col[i];
        for (std::size_t i = 0; i < pilot; ++i)
          wvar += w[i] * (col[i] - wmean) * (col[i] - wmean);
        if (!(wvar > 0)) continue;
        const double epsk =
            targets.epsilon > 0 ? targets.epsilon : 0.02 * std::sqrt(wvar);
        std::size_t need = mean_sample_size(wvar, targets.s, epsk);
        for (double p : {alpha_half, 1.0 - alpha_half}) {
          const double qv = weighted_quantile(col, w, p);
          const double dens = kde_gaussian_weighted(col, w, qv);
          if (dens > 0)
            need = std::max(need,
                            quantile_sample_size(alpha_half, targets.s, epsk, dens));
        }
        total = std::max(total, static_cast<std::size_t>(
                                    std::min(1e18, std::ceil(need * inflate))));
      }
      if (total > targets.hard_cap)
        throw NumericalError("importance-sampling plan exceeds the draw cap; "
                             "increase epsilon");

      Eigen::MatrixXd all_draws(static_cast<Eigen::Index>(total), q);
      Eigen::VectorXd all_logw(static_cast<Eigen::Index>(total));
      all_draws.topRows(static_cast<Eigen::Index>(pilot)) = pilot_draws;
      all_logw.head(static_cast<Eigen::Index>(pilot)) = pilot_logw;
      if (total > pilot) {
        Eigen::MatrixXd extra;
        Eigen::VectorXd extra_logw;
        draw_batch(total - pilot, extra, extra_logw);
        all_draws.bottomRows(static_cast<Eigen::Index>(total - pilot)) = extra;
        all_logw.tail(static_cast<Eigen::Index>(total - pilot)) = extra_logw;
      }
      fit.importance_draws = std::move(all_draws);
      fit.importance_weights = normalize(all_logw);
      fit.ess = 1.0 / fit.importance_weights.array().square().sum();

      // weighted moments refine the Gaussian summary
      Eigen::VectorXd wm = Eigen::VectorXd::Zero(q);
      for (Eigen::Index s = 0; s < fit.importance_draws.rows(); ++s)
        wm += fit.importance_weights[s] * fit.importance_draws.row(s).transpose();
      Eigen::MatrixXd wc = Eigen::MatrixXd::Zero(q, q);
      for (Eigen::Index s = 0; s < fit.importance_draws.rows(); ++s) {
        const Eigen::VectorXd d = fit.importance_draws.row(s).transpose() - wm;
        wc += fit.importance_weights[s] * d * d.transpose();
      }
      fit.approx.m = wm;
      fit.approx.C = wc;
      break;
    }
  }
  return fit;
}

Eigen::MatrixXd glm_posterior_draws(const GLMFit& fit, RngStream& rng,
                                    std::size_t n_draws) {
  const auto q = static_cast<Eigen::Index>(fit.q());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_draws), q);
  if (fit.is_importance()) {
    // multinomial resampling of the weighted particles
    const auto n = fit.importance_draws.rows();
    std::vector<double> cdf(static_cast<std::size_t>(n));
    double c = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      c += fit.importance_weights[i];
      cdf[static_cast<std::size_t>(i)] = c;
    }
    for (std::size_t s = 0; s < n_draws; ++s) {
      const double u = rng.uniform() * c;
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const auto idx = static_cast<Eigen::Index>(it - cdf.begin());
      out.row(static_cast<Eigen::Index>(s)) =
          fit.importance_draws.row(std::min(idx, n - 1));
    }
    return out;
  }
  const Eigen::MatrixXd L = chol_lower(fit.approx.C, "posterior draws");
  Eigen::VectorXd z(q);
  for (std::size_t s = 0; s < n_draws; ++s) {
    for (Eigen::Index k = 0; k < q; ++k) z[k] = rng.normal();
    out.row(static_cast<Eigen::Index>(s)) = (fit.approx.m + L * z).transpose();
  }
  return out;
}

namespace {

double simulate_response(const GLMFit& fit, RngStream& rng, double mu, double aux) {
  switch (fit.family.name) {
    case FamilyName::gaussian: return mu + std::sqrt(aux) * rng.normal();
    case FamilyName::binomial: return static_cast<double>(rng.bernoulli(mu));
    case FamilyName::poisson: return static_cast<double>(rng.poisson(mu));
    case FamilyName::negbinom:
      return static_cast<double>(rng.neg_binomial(mu, aux));
  }
  return 0.0;
}

double chi_sq_discrepancy(const GLMFit& fit, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& mu, double aux) {
  double t = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double var = std::max(fit.family.variance(mu[i], aux), 1e-12);
    t += (y[i] - mu[i]) * (y[i] - mu[i]) / var;
  }
  return t;
}

}  // namespace

BayesianPValue bayesian_pvalue(const GLMFit& fit, const RngStream& stream,
                               const PrecisionTarget& targets) {
  const auto p = static_cast<Eigen::Index>(fit.p());
  const auto n = static_cast<Eigen::Index>(fit.design.n());
  BayesianPValue out;

  PrecisionTarget t = targets;
  t.mean_only = true;
  RngStream sim_stream = stream.child(0x51);
  std::size_t batch_no = 0;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        RngStream sim = sim_stream.child(batch_no++);
        const auto draws =
            glm_posterior_draws(fit, rng, static_cast<std::size_t>(block.rows()));
        Eigen::VectorXd y_pred(n);
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const Eigen::VectorXd theta = draws.row(r).transpose();
          Eigen::VectorXd eta = fit.design.X * theta.head(p);
          if (fit.offset.size()) eta += fit.offset;
          const double aux =
              fit.family.has_aux() ? std::exp(theta[p]) : 0.0;
          Eigen::VectorXd mu(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = fit.family.inverse_link(eta[i]);
            y_pred[i] = simulate_response(fit, sim, mu[i], aux);
          }
          const double t_obs = chi_sq_discrepancy(fit, fit.design.y, mu, aux);
          const double t_pred = chi_sq_discrepancy(fit, y_pred, mu, aux);
          out.pairs.emplace_back(t_pred, t_obs);
          block(r, 0) = t_pred < t_obs ? 1.0 : 0.0;
        }
      },
      t, 1, stream);

  out.plan = res.plans[0];
  out.p = res.draws.col(0).mean();
  return out;
}

std::vector<BayesFactor> glm_coefficient_bfs(const GLMFit& fit) {
  std::vector<BayesFactor> out;
  for (std::size_t j = 0; j < fit.p(); ++j) {
    if (fit.design.kinds[j] == ColumnKind::intercept) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    const double prior0 =
        norm_pdf(-fit.prior.mean[jj] / fit.prior.sd[jj]) / fit.prior.sd[jj];
    const double post_sd = std::sqrt(fit.approx.C(jj, jj));
    const double post0 =
        norm_pdf(-fit.approx.m[jj] / post_sd) / post_sd;
    BayesFactor bf;
    bf.orientation = fit.design.labels[j] + ": nonzero coefficient vs. zero";
    if (prior0 <= 0 || !std::isfinite(post0)) {
      bf.value = std::numeric_limits<double>::quiet_NaN();
      bf.jeffreys_label = "undefined (zero prior density at the null)";
    } else {
      bf.value = prior0 / post0;
      bf.jeffreys_label = jeffreys_label(bf.value);
      bf.direction_text =
          interpret_bf(bf.value, "keeping in the model", "excluding from the model");
    }
    out.push_back(std::move(bf));
  }
  return out;
}

InfoCriteria glm_information_criteria(const GLMFit& fit, const RngStream& stream,
                                      const PrecisionTarget& targets) {
  InfoCriteria ic;
  const double n = static_cast<double>(fit.design.n());
  const double k = static_cast<double>(fit.q());

  // maximum likelihood under an effectively flat prior
  GLMPrior flat = fit.prior;
  flat.sd.setConstant(1e8);
  flat.aux_sd = 1e8;
  const GLMLogJoint flat_joint(fit.design, fit.family, flat, fit.offset);
  const auto mle =
      newton_maximize(flat_joint, fit.design, fit.family, fit.approx.m);
  const double max_ll = flat_joint.loglik_only(mle.theta);
  ic.aic = -2.0 * max_ll + 2.0 * k;
  ic.bic = -2.0 * max_ll + k * std::log(n);

  const GLMLogJoint joint(fit.design, fit.family, fit.prior, fit.offset);

  // DIC at the posterior mean
  const double ll_at_mean = joint.loglik_only(fit.approx.m);
  PrecisionTarget t = targets;
  t.mean_only = true;
  const auto dev = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        const auto draws =
            glm_posterior_draws(fit, rng, static_cast<std::size_t>(block.rows()));
        for (Eigen::Index r = 0; r < block.rows(); ++r)
          block(r, 0) = joint.loglik_only(draws.row(r).transpose());
      },
      t, 1, stream.child(1));
  const double e_ll = dev.draws.col(0).mean();
  ic.p_d = 2.0 * (ll_at_mean - e_ll);
  ic.dic = -2.0 * ll_at_mean + 2.0 * ic.p_d;

  // WAIC from pointwise log-density draws
  const auto pw = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        const auto draws =
            glm_posterior_draws(fit, rng, static_cast<std::size_t>(block.rows()));
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const Eigen::VectorXd theta = draws.row(r).transpose();
          for (Eigen::Index i = 0; i < block.cols(); ++i)
            block(r, i) =
                joint.pointwise_loglik(theta, static_cast<std::size_t>(i));
        }
      },
      t, fit.design.n(), stream.child(2));
  double lppd = 0.0, p_waic = 0.0;
  const double S = static_cast<double>(pw.total());
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fit.design.n()); ++i) {
    const auto col = pw.draws.col(i);
    const double mx = col.maxCoeff();
    lppd += mx + std::log((col.array() - mx).exp().mean());
    const double m = col.mean();
    p_waic += (col.array() - m).square().sum() / (S - 1.0);
  }
  ic.p_waic = p_waic;
  ic.waic = -2.0 * (lppd - p_waic);
  ic.waic_plan = pw.plans.front();
  ic.waic_plan.total_draws = pw.total();
  return ic;
}

CredibleBand glm_credible_band(const GLMFit& fit, const std::string& variable,
                               const RngStream& stream, double ci_level,
                               const std::optional<Exemplar>& exemplar,
                               std::size_t grid_size,
                               const PrecisionTarget& targets) {
  const auto& design = fit.design;
  const auto& term = design.terms[design.term_index(variable)];
  CredibleBand band;
  band.variable = variable;
  band.medoid_row = medoid_row(design);

  Eigen::VectorXd base =
      design.X.row(static_cast<Eigen::Index>(band.medoid_row)).transpose();
  if (exemplar) {
    for (const auto& [name, value] : *exemplar) {
      const auto& t = design.terms[design.term_index(name)];
      if (t.is_factor) {
        auto it = std::find(t.levels.begin(), t.levels.end(), value);
        if (it == t.levels.end())
          throw UserError("exemplar level '" + value + "' not found for '" +
                          name + "'");
        const auto idx = static_cast<std::size_t>(it - t.levels.begin());
        for (std::size_t c = 0; c < t.columns.size(); ++c)
          base[static_cast<Eigen::Index>(t.columns[c])] = (idx == c + 1) ? 1.0 : 0.0;
      } else {
        base[static_cast<Eigen::Index>(t.columns[0])] = std::stod(value);
      }
    }
  }

  // grid rows
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> xs;
  std::vector<std::string> levels;
  if (term.is_factor) {
    for (std::size_t lv = 0; lv < term.levels.size(); ++lv) {
      Eigen::VectorXd r = base;
      for (std::size_t c = 0; c < term.columns.size(); ++c)
        r[static_cast<Eigen::Index>(term.columns[c])] = (lv == c + 1) ? 1.0 : 0.0;
      rows.push_back(r);
      xs.push_back(static_cast<double>(lv));
      levels.push_back(term.levels[lv]);
    }
  } else {
    const auto col = design.X.col(static_cast<Eigen::Index>(term.columns[0]));
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    const std::size_t g = std::max<std::size_t>(grid_size, 2);
    for (std::size_t i = 0; i < g; ++i) {
      const double v = lo + (hi - lo) * static_cast<double>(i) / (g - 1.0);
      Eigen::VectorXd r = base;
      r[static_cast<Eigen::Index>(term.columns[0])] = v;
      rows.push_back(r);
      xs.push_back(v);
      levels.emplace_back();
    }
  }

  PrecisionTarget t = targets;
  t.ci_level = ci_level;
  const auto p = static_cast<Eigen::Index>(fit.p());
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        const auto draws =
            glm_posterior_draws(fit, rng, static_cast<std::size_t>(block.rows()));
        for (Eigen::Index r = 0; r < block.rows(); ++r)
          for (std::size_t gidx = 0; gidx < rows.size(); ++gidx)
            block(r, static_cast<Eigen::Index>(gidx)) = fit.family.inverse_link(
                rows[gidx].dot(draws.row(r).head(p).transpose()));
      },
      t, rows.size(), stream);

  const double a = (1.0 - ci_level) / 2.0;
  for (std::size_t gidx = 0; gidx < rows.size(); ++gidx) {
    const auto col = res.draws.col(static_cast<Eigen::Index>(gidx));
    const std::span<const double> cs(col.data(), res.total());
    BandPoint pt;
    pt.x = xs[gidx];
    pt.level = levels[gidx];
    pt.center = mean(cs);
    pt.lower = quantile_type7(cs, a);
    pt.upper = quantile_type7(cs, 1.0 - a);
    band.points.push_back(pt);
  }
  return band;
}

Eigen::MatrixXd design_rows_for(const DesignSpec& design, const Dataset& new_data) {
  if (new_data.n_rows == 0) throw UserError("new data has no rows");
  const auto n = static_cast<Eigen::Index>(new_data.n_rows);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(design.p()));
  if (design.has_intercept()) X.col(0).setOnes();
  for (const auto& term : design.terms) {
    const auto ci = new_data.column_index(term.name);
    if (term.is_factor) {
      if (!std::holds_alternative<CategoricalColumn>(new_data.columns[ci]))
        throw UserError("column '" + term.name + "' must be categorical");
      const auto& cat = std::get<CategoricalColumn>(new_data.columns[ci]);
      for (Eigen::Index r = 0; r < n; ++r) {
        const int code = cat.codes[static_cast<std::size_t>(r)];
        if (code < 0) throw UserError("missing value in new data");
        const std::string& level = cat.levels[static_cast<std::size_t>(code)];
        const auto it = std::find(term.levels.begin(), term.levels.end(), level);
        if (it == term.levels.end())
          throw UserError("level '" + level + "' of '" + term.name +
                          "' was not seen in training");
        const auto idx = static_cast<std::size_t>(it - term.levels.begin());
        if (idx > 0)
          X(r, static_cast<Eigen::Index>(term.columns[idx - 1])) = 1.0;
      }
    } else {
      if (!std::holds_alternative<NumericColumn>(new_data.columns[ci]))
        throw UserError("column '" + term.name + "' must be numeric");
      const auto& num = std::get<NumericColumn>(new_data.columns[ci]);
      for (Eigen::Index r = 0; r < n; ++r) {
        const double v = num.values[static_cast<std::size_t>(r)];
        if (std::isnan(v)) throw UserError("missing value in new data");
        X(r, static_cast<Eigen::Index>(term.columns[0])) = v;
      }
    }
  }
  return X;
}

std::vector<InferenceSummary> predict(const GLMFit& fit, const Dataset& new_data,
                                      PredictType type, const RngStream& stream,
                                      double ci_level,
                                      const PrecisionTarget& targets) {
  const Eigen::MatrixXd Xnew = design_rows_for(fit.design, new_data);
  const auto p = static_cast<Eigen::Index>(fit.p());
  const auto n = Xnew.rows();

  PrecisionTarget t = targets;
  t.ci_level = ci_level;
  RngStream noise_base = stream.child(0xF00D);
  std::size_t batch_no = 0;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        RngStream noise = noise_base.child(batch_no++);
        const auto draws =
            glm_posterior_draws(fit, rng, static_cast<std::size_t>(block.rows()));
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          const Eigen::VectorXd theta = draws.row(r).transpose();
          const double aux = fit.family.has_aux() ? std::exp(theta[p]) : 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double eta = Xnew.row(i).dot(theta.head(p));
            double v = eta;
            if (type != PredictType::link) v = fit.family.inverse_link(eta);
            if (type == PredictType::predictive)
              v = simulate_response(fit, noise, v, aux);
            block(r, i) = v;
          }
        }
      },
      t, static_cast<std::size_t>(n), stream);

  std::vector<InferenceSummary> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = res.draws.col(i);
    out.push_back(summarize_draws(
        std::span<const double>(col.data(), res.total()),
        "row " + std::to_string(i + 1), ci_level));
  }
  return out;
}

}  // namespace bayesics
