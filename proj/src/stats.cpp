#include "bayesics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bayesics/error.hpp"

namespace bayesics {

double mean(std::span<const double> x) {
  if (x.empty()) throw UserError("mean of empty vector");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw UserError("sample variance needs at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(n - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

double quantile_type7_sorted(std::span<const double> s, double p) {
  if (s.empty()) throw UserError("quantile of empty vector");
  if (p <= 0) return s.front();
  if (p >= 1) return s.back();
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + frac * (s[lo + 1] - s[lo]);
}

double quantile_type7(std::span<const double> x, double p) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return quantile_type7_sorted(s, p);
}

double interquartile_range(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return quantile_type7_sorted(s, 0.75) - quantile_type7_sorted(s, 0.25);
}

double silverman_bandwidth(std::span<const double> draws) {
  const double n = static_cast<double>(draws.size());
  const double sd = sample_sd(draws);
  const double iqr = interquartile_range(draws);
  double spread = sd;
  if (iqr > 0) spread = std::min(sd, iqr / 1.349);
  return 0.9 * spread * std::pow(n, -0.2);
}

double kde_gaussian(std::span<const double> draws, double x) {
  const double h = silverman_bandwidth(draws);
  if (h <= 0) throw NumericalError("degenerate draws: KDE bandwidth is zero");
  constexpr double inv_sqrt2pi = 0.3989422804014327;
  double sum = 0.0;
  for (double d : draws) {
    const double z = (x - d) / h;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * inv_sqrt2pi / (h * static_cast<double>(draws.size()));
}

double weighted_quantile(std::span<const double> x, std::span<const double> w,
                         double p) {
  if (x.size() != w.size() || x.empty())
    throw UserError("weighted quantile: mismatched or empty inputs");
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total <= 0) throw UserError("weighted quantile: nonpositive total weight");
  double cum = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double wk = w[idx[k]];
    const double mid = (cum + 0.5 * wk) / total;
    if (mid >= p) {
      if (k == 0) return x[idx[0]];
      const double prev_mid = (cum - 0.5 * w[idx[k - 1]]) / total;
      const double t = (p - prev_mid) / std::max(mid - prev_mid, 1e-300);
      return x[idx[k - 1]] + t * (x[idx[k]] - x[idx[k - 1]]);
    }
    cum += wk;
  }
  return x[idx.back()];
}

double kde_gaussian_weighted(std::span<const double> draws,
                             std::span<const double> w, double x) {
  if (draws.size() != w.size() || draws.empty())
    throw UserError("weighted KDE: mismatched or empty inputs");
  const double h = silverman_bandwidth(draws);
  if (h <= 0) throw NumericalError("degenerate draws: KDE bandwidth is zero");
  constexpr double inv_sqrt2pi = 0.3989422804014327;
  double sum = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double z = (x - draws[i]) / h;
    sum += w[i] * std::exp(-0.5 * z * z);
    wsum += w[i];
  }
  return sum * inv_sqrt2pi / (h * wsum);
}

}  // namespace bayesics
