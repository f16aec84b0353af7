#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace bayesics {

// Philox 4x64-10 counter-based generator. Stateless block function plus a
// buffered stream wrapper. The key is (seed, stream): any (seed, stream)
// pair addresses an independent sequence, so deterministic substreams are
// cheap and never overlap.
struct Philox4x64 {
  using Block = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Block block(Block counter, Key key);
};

/// One independent random stream identified by (seed, stream).
/// Single-threaded use; same (seed, stream) reproduces the same sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : key_{seed, stream}, counter_{0, 0, 0, 0}, pos_(4) {}

  /// Derives a child stream; the mapping is a fixed bijective hash so
  /// children of distinct (parent, index) pairs never collide in practice.
  RngStream child(std::uint64_t index) const;

  std::uint64_t next_u64();

  /// Uniform on (0,1), 53-bit mantissa, never exactly 0 or 1.
  double uniform();
  double uniform(double lo, double hi);

  double normal();  // standard normal via inverse CDF
  double exponential();  // rate 1
  double gamma(double shape, double rate = 1.0);
  double beta(double a, double b);
  double chi_squared(double df);
  double student_t(double df);
  double inv_gamma(double shape, double rate);
  long poisson(double mean);
  long neg_binomial(double mean, double size);  // mu/size parameterization
  int bernoulli(double p);

  /// Dirichlet(alpha, ..., alpha) via normalized gammas.
  std::vector<double> dirichlet_uniform(std::size_t n, double alpha = 1.0);

 private:
  Philox4x64::Key key_;
  Philox4x64::Block counter_;
  Philox4x64::Block buffer_{};
  int pos_;

  long poisson_small(double mean);
  long poisson_large(double mean);
};

}  // namespace bayesics
