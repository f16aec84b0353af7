#include "bayesics/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <stdexcept>

namespace bayesics {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 prod =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(prod >> 64);
  lo = static_cast<std::uint64_t>(prod);
}

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Philox4x64::Block Philox4x64::block(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMult0, ctr[0], hi0, lo0);
    mulhilo(kMult1, ctr[2], hi1, lo1);
    ctr = Block{hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(mix64(key_[0] ^ mix64(index)),
                   mix64(key_[1] + 0x632BE59BD9B4E019ULL * (index + 1)));
}

std::uint64_t RngStream::next_u64() {
  if (pos_ == 4) {
    // counter increments before each block
    if (++counter_[0] == 0)
      if (++counter_[1] == 0)
        if (++counter_[2] == 0) ++counter_[3];
    buffer_ = Philox4x64::block(counter_, key_);
    pos_ = 0;
  }
  return buffer_[pos_++];
}

double RngStream::uniform() {
  // 53 random mantissa bits, offset to the open interval
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  return 1.4142135623730951 * boost::math::erf_inv(2.0 * uniform() - 1.0);
}

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape, double rate) {
  if (shape <= 0 || rate <= 0)
    throw std::invalid_argument("gamma draw requires positive shape and rate");
  if (shape < 1.0) {
    // boost shape via the Gamma(a+1) trick
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RngStream::beta(double a, double b) {
  const double g1 = gamma(a, 1.0);
  const double g2 = gamma(b, 1.0);
  return g1 / (g1 + g2);
}

double RngStream::chi_squared(double df) { return gamma(df / 2.0, 0.5); }

double RngStream::student_t(double df) {
  return normal() / std::sqrt(chi_squared(df) / df);
}

double RngStream::inv_gamma(double shape, double rate) {
  return rate == 0.0 ? 0.0 : 1.0 / gamma(shape, rate);
}

long RngStream::poisson_small(double mean) {
  const double limit = std::exp(-mean);
  long k = 0;
  double prod = uniform();
  while (prod > limit) {
    ++k;
    prod *= uniform();
  }
  return k;
}

long RngStream::poisson_large(double mean) {
  // Hormann's transformed rejection (PTRS)
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_mean - mean - std::lgamma(k + 1.0))
      return static_cast<long>(k);
  }
}

long RngStream::poisson(double mean) {
  if (mean < 0) throw std::invalid_argument("poisson draw requires mean >= 0");
  if (mean == 0) return 0;
  return mean < 10.0 ? poisson_small(mean) : poisson_large(mean);
}

long RngStream::neg_binomial(double mean, double size) {
  // gamma-Poisson mixture: lambda ~ Gamma(size, size/mean)
  const double lambda = gamma(size, size / mean);
  return poisson(lambda);
}

int RngStream::bernoulli(double p) { return uniform() < p ? 1 : 0; }

std::vector<double> RngStream::dirichlet_uniform(std::size_t n, double alpha) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& wi : w) {
    wi = alpha == 1.0 ? exponential() : gamma(alpha, 1.0);
    total += wi;
  }
  for (auto& wi : w) wi /= total;
  return w;
}

}  // namespace bayesics
