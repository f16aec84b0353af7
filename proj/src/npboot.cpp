#include "bayesics/npboot.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>

#include "bayesics/error.hpp"
#include "bayesics/linear.hpp"
#include "bayesics/stats.hpp"

namespace bayesics {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// weighted self-information loss, gradient, and Hessian for canonical links
struct WeightedLoss {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  GLMFamily family;
  std::span<const double> w;  // already scaled by n

  double mu_of(double eta) const { return family.inverse_link(eta); }

  double value(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd eta = X * beta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double l = 0.0;
      switch (family.name) {
        case FamilyName::gaussian:
          l = 0.5 * (y[i] - eta[i]) * (y[i] - eta[i]);
          break;
        case FamilyName::binomial:
          l = std::max(eta[i], 0.0) + std::log1p(std::exp(-std::fabs(eta[i]))) -
              y[i] * eta[i];
          break;
        case FamilyName::poisson:
          l = std::exp(eta[i]) - y[i] * eta[i];
          break;
        default:
          throw UserError("self-information loss supports gaussian/binomial/poisson");
      }
      total += w[static_cast<std::size_t>(i)] * l;
    }
    return total;
  }

  void grad_hess(const Eigen::VectorXd& beta, Eigen::VectorXd& g,
                 Eigen::MatrixXd& H) const {
    const Eigen::VectorXd eta = X * beta;
    g.setZero(X.cols());
    H.setZero(X.cols(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double mu, v;
      switch (family.name) {
        case FamilyName::gaussian: mu = eta[i]; v = 1.0; break;
        case FamilyName::binomial: mu = sigmoid(eta[i]); v = mu * (1.0 - mu); break;
        default: mu = std::exp(eta[i]); v = mu; break;
      }
      const double wi = w[static_cast<std::size_t>(i)];
      g += wi * (mu - y[i]) * X.row(i).transpose();
      H += wi * v * X.row(i).transpose() * X.row(i);
    }
  }
};

}  // namespace

Eigen::VectorXd weighted_loss_minimizer(const DesignSpec& design,
                                        const GLMFamily& family,
                                        std::span<const double> weights,
                                        const Eigen::VectorXd& start, double tol,
                                        int max_iter) {
  if (weights.size() != design.n())
    throw UserError("weight vector length does not match the data");
  const WeightedLoss loss{design.X, design.y, family, weights};
  Eigen::VectorXd beta = start;
  double f = loss.value(beta);
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  for (int it = 0; it < max_iter; ++it) {
    loss.grad_hess(beta, g, H);
    if (g.lpNorm<Eigen::Infinity>() < tol * (1.0 + std::fabs(f))) return beta;
    Eigen::LLT<Eigen::MatrixXd> llt(
        H + 1e-12 * H.trace() / H.rows() * Eigen::MatrixXd::Identity(H.rows(), H.cols()));
    if (llt.info() != Eigen::Success)
      throw NumericalError("weighted loss Hessian is singular");
    const Eigen::VectorXd dir = llt.solve(g);
    double alpha = 1.0;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd cand = beta - alpha * dir;
      const double fc = loss.value(cand);
      if (std::isfinite(fc) && fc <= f - 1e-4 * alpha * g.dot(dir)) {
        beta = cand;
        f = fc;
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!ok) {
      if (g.lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + std::fabs(f))) return beta;
      throw NumericalError("weighted loss minimization stalled");
    }
  }
  loss.grad_hess(beta, g, H);
  if (g.lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + std::fabs(f))) return beta;
  throw NumericalError("weighted loss minimization did not converge");
}

NpGlmFit fit_np_glm(const DesignSpec& design, GLMFamily family,
                    const RngStream& stream, const PrecisionTarget& targets,
                    double ci_level) {
  if (family.name == FamilyName::negbinom)
    throw UserError("negbinom is not supported by the loss-likelihood bootstrap");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.X.cols())
    throw NumericalError("design matrix is rank deficient");

  NpGlmFit fit;
  fit.design = design;
  fit.family = family;
  const std::size_t n = design.n();
  const double nn = static_cast<double>(n);

  // equal-weights minimizer anchors every replicate's Newton start
  const std::vector<double> ones(n, 1.0);
  fit.mle = weighted_loss_minimizer(design, family,
                                    std::span<const double>(ones),
                                    Eigen::VectorXd::Zero(design.p()));

  PrecisionTarget t = targets;
  t.ci_level = ci_level;
  t.hard_cap = std::min<std::size_t>(t.hard_cap, 100000);  // replicate cap
  t.clamp_to_cap = true;
  std::size_t replicate_index = 0;
  const auto res = run_adaptive_sampler(
      [&](RngStream& rng, Eigen::Ref<Eigen::MatrixXd> block) {
        std::vector<double> w(n);
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
          ++replicate_index;
          for (int attempt = 0;; ++attempt) {
            const auto raw = rng.dirichlet_uniform(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = nn * raw[i];
            try {
              block.row(r) =
                  weighted_loss_minimizer(design, family,
                                          std::span<const double>(w), fit.mle)
                      .transpose();
              break;
            } catch (const NumericalError&) {
              if (attempt >= 1)
                throw NumericalError(
                    "bootstrap replicate " + std::to_string(replicate_index) +
                    " failed to converge after a retry");
            }
          }
        }
      },
      t, design.p(), stream);
  fit.replicates = res.draws;
  fit.plans = res.plans;

  const std::span<const double> ys(design.y.data(),
                                   static_cast<std::size_t>(design.y.size()));
  const double s_y = sample_sd(ys);
  for (std::size_t j = 0; j < design.p(); ++j) {
    const auto col = fit.replicates.col(static_cast<Eigen::Index>(j));
    std::optional<RopeBounds> rope;
    if (design.kinds[j] != ColumnKind::intercept) {
      if (family.name == FamilyName::gaussian) {
        rope = default_rope(RopeKind::linear_slope, design.column_sd[j], s_y);
      } else {
        const auto kind = family.name == FamilyName::binomial
                              ? RopeKind::log_odds_slope
                              : RopeKind::log_rate_ratio;
        rope = design.kinds[j] == ColumnKind::factor_contrast
                   ? default_rope(kind)
                   : default_rope(kind, design.column_sd[j]);
      }
    }
    fit.summaries.push_back(summarize_draws(
        std::span<const double>(col.data(), res.total()), design.labels[j],
        ci_level, rope, 0.0));
  }
  return fit;
}

NpBand np_credible_band(const NpGlmFit& fit, const std::string& variable,
                        double ci_level, std::size_t grid_size) {
  const auto& design = fit.design;
  const auto& term = design.terms[design.term_index(variable)];
  NpBand band;
  band.variable = variable;

  Eigen::VectorXd base =
      design.X.row(static_cast<Eigen::Index>(medoid_row(design))).transpose();
  const double a = (1.0 - ci_level) / 2.0;

  auto eval = [&](Eigen::VectorXd row, double x, const std::string& level) {
    Eigen::VectorXd vals = fit.replicates * row;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      vals[i] = fit.family.inverse_link(vals[i]);
    const std::span<const double> vs(vals.data(),
                                     static_cast<std::size_t>(vals.size()));
    NpBandPoint pt;
    pt.x = x;
    pt.level = level;
    pt.center = mean(vs);
    pt.lower = quantile_type7(vs, a);
    pt.upper = quantile_type7(vs, 1.0 - a);
    band.points.push_back(pt);
  };

  if (term.is_factor) {
    for (std::size_t lv = 0; lv < term.levels.size(); ++lv) {
      Eigen::VectorXd row = base;
      for (std::size_t c = 0; c < term.columns.size(); ++c)
        row[static_cast<Eigen::Index>(term.columns[c])] = (lv == c + 1) ? 1.0 : 0.0;
      eval(row, static_cast<double>(lv), term.levels[lv]);
    }
  } else {
    const auto col = design.X.col(static_cast<Eigen::Index>(term.columns[0]));
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    const std::size_t g = std::max<std::size_t>(grid_size, 2);
    for (std::size_t i = 0; i < g; ++i) {
      const double v = lo + (hi - lo) * static_cast<double>(i) / (g - 1.0);
      Eigen::VectorXd row = base;
      row[static_cast<Eigen::Index>(term.columns[0])] = v;
      eval(row, v, "");
    }
  }
  return band;
}

}  // namespace bayesics
