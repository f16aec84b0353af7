#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bayesics {

double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);  // n-1 denominator
double sample_sd(std::span<const double> x);

/// Type-7 (linear interpolation) empirical quantile. Does not assume sorted
/// input; sorts a copy.
double quantile_type7(std::span<const double> x, double p);

/// Type-7 quantile over pre-sorted data, no copy.
double quantile_type7_sorted(std::span<const double> sorted, double p);

double interquartile_range(std::span<const double> x);

/// Gaussian kernel density estimate with Silverman's bandwidth
/// 0.9 * min(sd, IQR/1.349) * n^(-1/5), evaluated at point x.
double kde_gaussian(std::span<const double> draws, double x);

/// Bandwidth used by kde_gaussian; zero when the draws are degenerate.
double silverman_bandwidth(std::span<const double> draws);

/// Quantile of a weighted sample (weights need not be normalized);
/// inverse of the left-continuous weighted ECDF with midpoint convention.
double weighted_quantile(std::span<const double> x, std::span<const double> w,
                         double p);

/// Weighted Gaussian KDE with Silverman bandwidth from the effective
/// sample; used by importance-sampling plans.
double kde_gaussian_weighted(std::span<const double> draws,
                             std::span<const double> w, double x);

}  // namespace bayesics
