#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace dsqkd::rng {

/// Stream domains keep independent uses of the same session seed from
/// colliding: every (seed, domain, stream) triple indexes a disjoint
/// counter space.
enum class Domain : std::uint8_t {
  cycle = 0,        // one stream per simulated clock cycle
  fast_tallies = 1, // aggregated-path count sampling
  shuffle = 2,      // sifted-key permutation
  flip = 3,         // balancing bit flip
  cascade = 4,      // reconciliation permutations and verify battery
  toeplitz = 5,     // privacy-amplification hash seed
  test = 6,
};

/// Philox4x32-10 block function. Counter-based: the output is a pure
/// function of (key, counter), so arbitrary jump-ahead and parallel
/// streams come for free and results are identical across platforms.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter);

/// A buffered view onto one Philox stream. Cheap to construct; holds no
/// heap state. Streams derived from distinct (domain, stream) pairs are
/// statistically independent.
class Stream {
public:
  Stream(std::uint64_t seed, Domain domain, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  bool bernoulli(double p);

  /// Uniform integer in [0, n); unbiased via rejection. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Exact Poisson sample. Product-of-uniforms inversion, with recursive
  /// halving for large means so the method stays exact for any mu.
  std::uint64_t poisson(double mu);

  /// Exact binomial sample: inversion when n*min(p,1-p) is small, the
  /// BTRS transformed-rejection sampler otherwise.
  std::uint64_t binomial(std::uint64_t n, double p);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  void refill();

  std::uint64_t seed_;
  std::array<std::uint32_t, 4> base_counter_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;

  std::uint64_t binomial_inversion(std::uint64_t n, double p);
  std::uint64_t binomial_btrs(std::uint64_t n, double p);
};

} // namespace dsqkd::rng
