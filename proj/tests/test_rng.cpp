#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "dsqkd/rng.hpp"
#include "dsqkd/stats.hpp"

using namespace dsqkd;

TEST_CASE("philox block is a fixed function of key and counter") {
  auto a = rng::philox4x32(42, {1, 2, 3, 4});
  auto b = rng::philox4x32(42, {1, 2, 3, 4});
  CHECK(a == b);
  auto c = rng::philox4x32(43, {1, 2, 3, 4});
  CHECK(a != c);
  auto d = rng::philox4x32(42, {2, 2, 3, 4});
  CHECK(a != d);
}

TEST_CASE("streams with distinct ids decorrelate, same ids reproduce") {
  rng::Stream s1(7, rng::Domain::test, 0);
  rng::Stream s2(7, rng::Domain::test, 0);
  rng::Stream s3(7, rng::Domain::test, 1);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) {
    auto a = s1.next_u64();
    CHECK(a == s2.next_u64());
    if (a != s3.next_u64()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("uniform mean and range") {
  rng::Stream s(11, rng::Domain::test, 2);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  // 5 sigma band around 1/2, sigma = 1/sqrt(12 n)
  CHECK(std::fabs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("below is unbiased across a small range") {
  rng::Stream s(13, rng::Domain::test, 3);
  std::map<std::uint64_t, int> counts;
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[s.below(7)];
  for (auto [v, c] : counts) {
    CHECK(v < 7);
    CHECK(std::fabs(c - n / 7.0) < 5.0 * std::sqrt(n / 7.0));
  }
}

TEST_CASE("poisson sampling matches exact moments") {
  for (double mu : {0.3, 2.0, 10.0, 45.0}) {
    rng::Stream s(17, rng::Domain::test, 100 + static_cast<std::uint64_t>(mu * 10));
    const int n = 60000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double k = static_cast<double>(s.poisson(mu));
      sum += k;
      sum2 += k * k;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(std::fabs(mean - mu) < 5.0 * std::sqrt(mu / n));
    CHECK(std::fabs(var - mu) < 6.0 * mu / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("binomial sampler tracks the exact CDF") {
  struct Case {
    std::uint64_t n;
    double p;
  } cases[] = {{40, 0.2}, {5000, 0.01}, {2000000000ULL, 1e-7}, {100000, 0.4}};
  for (auto [n, p] : cases) {
    rng::Stream s(23, rng::Domain::test, n % 1000);
    const int trials = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < trials; ++i) {
      double k = static_cast<double>(s.binomial(n, p));
      sum += k;
      sum2 += k * k;
    }
    double nd = static_cast<double>(n);
    double mean_exp = nd * p;
    double var_exp = nd * p * (1 - p);
    double mean = sum / trials;
    double var = sum2 / trials - mean * mean;
    CHECK(std::fabs(mean - mean_exp) < 5.0 * std::sqrt(var_exp / trials));
    CHECK(std::fabs(var - var_exp) < 8.0 * var_exp / std::sqrt(static_cast<double>(trials)));

    // Quantile cross-check against the exact CDF at a few probes.
    for (double q : {0.25, 0.5, 0.9}) {
      std::uint64_t lo = 0,
                    hi = static_cast<std::uint64_t>(mean_exp + 12 * std::sqrt(var_exp) + 2);
      while (lo < hi) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        if (stats::binomial_cdf(mid, n, p) < q)
          lo = mid + 1;
        else
          hi = mid;
      }
      double below = 0;
      rng::Stream probe(29, rng::Domain::test, 500 + static_cast<std::uint64_t>(q * 100));
      for (int i = 0; i < 4000; ++i)
        if (probe.binomial(n, p) <= lo) below += 1;
      double expect = stats::binomial_cdf(lo, n, p);
      CHECK(std::fabs(below / 4000 - expect) <
            5.0 * std::sqrt(expect * (1 - expect) / 4000) + 1e-3);
    }
  }
}
