#include "dsqkd/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dsqkd::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter) {
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c0, hi0, lo0);
    mulhilo(kPhiloxM1, c2, hi1, lo1);
    std::uint32_t n0 = hi1 ^ c1 ^ k0;
    std::uint32_t n1 = lo1;
    std::uint32_t n2 = hi0 ^ c3 ^ k1;
    std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return {c0, c1, c2, c3};
}

Stream::Stream(std::uint64_t seed, Domain domain, std::uint64_t stream) : seed_(seed) {
  // Stream ids must fit in 56 bits; the top byte of the counter carries
  // the domain tag.
  if (stream >> 56 != 0) throw std::invalid_argument("rng::Stream: stream id too large");
  base_counter_[0] = 0; // low word of the per-stream sequence counter
  base_counter_[1] = 0; // high word, filled per block
  base_counter_[2] = static_cast<std::uint32_t>(stream);
  base_counter_[3] = static_cast<std::uint32_t>(stream >> 32) |
                     (static_cast<std::uint32_t>(domain) << 24);
}

void Stream::refill() {
  auto counter = base_counter_;
  counter[0] = static_cast<std::uint32_t>(block_index_);
  counter[1] = static_cast<std::uint32_t>(block_index_ >> 32);
  buffer_ = philox4x32(seed_, counter);
  ++block_index_;
  buffered_ = 4;
}

std::uint32_t Stream::next_u32() {
  if (buffered_ == 0) refill();
  return buffer_[4 - buffered_--];
}

std::uint64_t Stream::next_u64() {
  std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Stream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool Stream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

std::uint64_t Stream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("rng::Stream::below: empty range");
  if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

std::uint64_t Stream::poisson(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("rng::Stream::poisson: mu must be >= 0");
  if (mu == 0.0) return 0;
  if (mu > 30.0) {
    // Poisson(a+b) = Poisson(a) + Poisson(b); keeps inversion exact for
    // any mean without a second sampler.
    double half = mu / 2.0;
    return poisson(half) + poisson(mu - half);
  }
  const double threshold = std::exp(-mu);
  std::uint64_t k = 0;
  double prod = uniform();
  while (prod > threshold) {
    ++k;
    prod *= uniform();
  }
  return k;
}

std::uint64_t Stream::binomial(std::uint64_t n, double p) {
  if (p < 0.0 || p > 1.0 || std::isnan(p))
    throw std::invalid_argument("rng::Stream::binomial: p outside [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  double np = static_cast<double>(n) * p;
  if (np < 10.0) return binomial_inversion(n, p);
  return binomial_btrs(n, p);
}

std::uint64_t Stream::binomial_inversion(std::uint64_t n, double p) {
  // CDF walk along the pmf recurrence; n*p < 10 keeps the walk short.
  const double nd = static_cast<double>(n);
  double q = 1.0 - p;
  double pmf = std::exp(nd * std::log1p(-p));
  double cdf = pmf;
  double u = uniform();
  std::uint64_t k = 0;
  while (u > cdf && k < n) {
    ++k;
    pmf *= (nd - static_cast<double>(k - 1)) / static_cast<double>(k) * (p / q);
    cdf += pmf;
    if (pmf < 1e-320) break; // exhausted the representable tail
  }
  return k;
}

std::uint64_t Stream::binomial_btrs(std::uint64_t n, double p) {
  // Hormann's BTRS rejection sampler; exact, valid for n*p >= 10, p <= 0.5.
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double urvr = 0.86 * v_r;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((nd + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);

  for (;;) {
    double v = uniform();
    double u;
    if (v <= urvr) {
      u = v / v_r - 0.43;
      double us = 0.5 - std::fabs(u);
      return static_cast<std::uint64_t>(std::floor((2.0 * a / us + b) * u + c));
    }
    if (v >= v_r) {
      u = uniform() - 0.5;
    } else {
      u = v / v_r - 0.93;
      u = (u < 0 ? -0.5 : 0.5) - u;
      v = v_r * uniform();
    }
    double us = 0.5 - std::fabs(u);
    if (us < 0.013 && v > us) continue;
    double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    v = v * alpha / (a / (us * us) + b);
    if (std::log(v) <=
        h - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + (kd - m) * lpq) {
      return static_cast<std::uint64_t>(kd);
    }
  }
}

} // namespace dsqkd::rng
