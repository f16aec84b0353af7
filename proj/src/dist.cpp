#include "bayesics/dist.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bayesics/error.hpp"

namespace bayesics {

namespace bm = boost::math;

namespace {

void check_params(const ScalarDist& d) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        bool ok = true;
        if constexpr (std::is_same_v<T, NormalDist>) ok = v.sigma > 0;
        if constexpr (std::is_same_v<T, StudentTDist>) ok = v.scale > 0 && v.df > 0;
        if constexpr (std::is_same_v<T, GammaDist>) ok = v.shape > 0 && v.rate > 0;
        if constexpr (std::is_same_v<T, BetaDist>) ok = v.a > 0 && v.b > 0;
        if constexpr (std::is_same_v<T, InvGammaDist>) ok = v.shape > 0 && v.rate > 0;
        if (!ok) throw UserError("invalid distribution parameters");
      },
      d);
}

}  // namespace

double pdf(const ScalarDist& d, double x) {
  check_params(d);
  return std::visit(
      [x](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NormalDist>)
          return bm::pdf(bm::normal(v.mu, v.sigma), x);
        else if constexpr (std::is_same_v<T, StudentTDist>)
          return bm::pdf(bm::students_t(v.df), (x - v.loc) / v.scale) / v.scale;
        else if constexpr (std::is_same_v<T, GammaDist>)
          return x <= 0 ? 0.0 : bm::pdf(bm::gamma_distribution<>(v.shape, 1.0 / v.rate), x);
        else if constexpr (std::is_same_v<T, BetaDist>)
          return (x <= 0 || x >= 1) ? 0.0 : bm::pdf(bm::beta_distribution<>(v.a, v.b), x);
        else
          return x <= 0 ? 0.0 : bm::pdf(bm::inverse_gamma_distribution<>(v.shape, v.rate), x);
      },
      d);
}

double cdf(const ScalarDist& d, double x) {
  check_params(d);
  return std::visit(
      [x](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NormalDist>)
          return bm::cdf(bm::normal(v.mu, v.sigma), x);
        else if constexpr (std::is_same_v<T, StudentTDist>)
          return bm::cdf(bm::students_t(v.df), (x - v.loc) / v.scale);
        else if constexpr (std::is_same_v<T, GammaDist>)
          return x <= 0 ? 0.0 : bm::cdf(bm::gamma_distribution<>(v.shape, 1.0 / v.rate), x);
        else if constexpr (std::is_same_v<T, BetaDist>)
          return x <= 0 ? 0.0 : (x >= 1 ? 1.0 : bm::cdf(bm::beta_distribution<>(v.a, v.b), x));
        else
          return x <= 0 ? 0.0 : bm::cdf(bm::inverse_gamma_distribution<>(v.shape, v.rate), x);
      },
      d);
}

double quantile(const ScalarDist& d, double p) {
  check_params(d);
  if (p <= 0 || p >= 1) throw UserError("quantile probability must lie in (0,1)");
  return std::visit(
      [p](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NormalDist>)
          return bm::quantile(bm::normal(v.mu, v.sigma), p);
        else if constexpr (std::is_same_v<T, StudentTDist>)
          return v.loc + v.scale * bm::quantile(bm::students_t(v.df), p);
        else if constexpr (std::is_same_v<T, GammaDist>)
          return bm::quantile(bm::gamma_distribution<>(v.shape, 1.0 / v.rate), p);
        else if constexpr (std::is_same_v<T, BetaDist>)
          return bm::quantile(bm::beta_distribution<>(v.a, v.b), p);
        else
          return bm::quantile(bm::inverse_gamma_distribution<>(v.shape, v.rate), p);
      },
      d);
}

double dist_mean(const ScalarDist& d) {
  check_params(d);
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NormalDist>) return v.mu;
        else if constexpr (std::is_same_v<T, StudentTDist>) {
          if (v.df <= 1) return std::numeric_limits<double>::quiet_NaN();
          return v.loc;
        } else if constexpr (std::is_same_v<T, GammaDist>)
          return v.shape / v.rate;
        else if constexpr (std::is_same_v<T, BetaDist>)
          return v.a / (v.a + v.b);
        else {
          if (v.shape <= 1) return std::numeric_limits<double>::quiet_NaN();
          return v.rate / (v.shape - 1.0);
        }
      },
      d);
}

double norm_pdf(double z) { return bm::pdf(bm::normal(), z); }
double norm_cdf(double z) { return bm::cdf(bm::normal(), z); }
double norm_quantile(double p) { return bm::quantile(bm::normal(), p); }

double lgamma_fn(double x) { return std::lgamma(x); }
double digamma_fn(double x) { return bm::digamma(x); }

}  // namespace bayesics
