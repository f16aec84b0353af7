#pragma once

#include <variant>

namespace bayesics {

// Scalar distribution families used for closed-form posteriors. All of them
// expose pdf/cdf/quantile/mean through the free functions below (backed by
// boost::math). StudentT is the location-scale t.

struct NormalDist {
  double mu = 0.0, sigma = 1.0;
};

struct StudentTDist {
  double loc = 0.0, scale = 1.0, df = 1.0;
};

struct GammaDist {
  double shape = 1.0, rate = 1.0;
};

struct BetaDist {
  double a = 1.0, b = 1.0;
};

struct InvGammaDist {
  double shape = 1.0, rate = 1.0;
};

using ScalarDist =
    std::variant<NormalDist, StudentTDist, GammaDist, BetaDist, InvGammaDist>;

double pdf(const ScalarDist& d, double x);
double cdf(const ScalarDist& d, double x);
double quantile(const ScalarDist& d, double p);
double dist_mean(const ScalarDist& d);

// Standard-normal shortcuts.
double norm_pdf(double z);
double norm_cdf(double z);
double norm_quantile(double p);

double lgamma_fn(double x);
double digamma_fn(double x);

}  // namespace bayesics
