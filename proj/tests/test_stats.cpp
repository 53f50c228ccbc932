#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>

#include "dsqkd/rng.hpp"
#include "dsqkd/stats.hpp"

using namespace dsqkd;

namespace {

// Independent oracle: full log-space summation of the binomial CDF and a
// plain bisection on it. Deliberately shares no code with the library
// path it checks.
double oracle_log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double oracle_cdf(std::uint64_t k, std::uint64_t n, double p) {
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return k >= n ? 1.0 : 0.0;
  double acc = -INFINITY;
  double nd = static_cast<double>(n);
  for (std::uint64_t i = 0; i <= k; ++i) {
    double id = static_cast<double>(i);
    double lg = std::lgamma(nd + 1.0) - std::lgamma(id + 1.0) - std::lgamma(nd - id + 1.0) +
                id * std::log(p) + (nd - id) * std::log1p(-p);
    acc = oracle_log_add(acc, lg);
  }
  return std::exp(std::min(acc, 0.0));
}

double oracle_sf(std::uint64_t k, std::uint64_t n, double p) {
  if (k == 0) return 1.0;
  return 1.0 - oracle_cdf(k - 1, n, p);
}

double oracle_upper(std::uint64_t k, std::uint64_t n, double eps) {
  if (k == n) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    double mid = 0.5 * (lo + hi);
    if (oracle_cdf(k, n, mid) <= eps)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double oracle_lower(std::uint64_t k, std::uint64_t n, double eps) {
  if (k == 0) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    double mid = 0.5 * (lo + hi);
    if (oracle_sf(k, n, mid) <= eps)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

} // namespace

TEST_CASE("binary entropy values and symmetry") {
  CHECK(stats::binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats::binary_entropy(0.0) == 0.0);
  CHECK(stats::binary_entropy(1.0) == 0.0);
  // Direct evaluation of -p log2 p - (1-p) log2(1-p) at p = 0.04.
  CHECK(stats::binary_entropy(0.04) == doctest::Approx(0.2422921890).epsilon(1e-6));
  for (double p : {0.01, 0.2, 0.37, 0.444}) {
    CHECK(stats::binary_entropy(p) ==
          doctest::Approx(stats::binary_entropy(1.0 - p)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(stats::binary_entropy(-0.1), std::domain_error);
  CHECK_THROWS_AS(stats::binary_entropy(1.1), std::domain_error);
}

TEST_CASE("poisson pmf basics") {
  CHECK(stats::poisson_pmf(0, 0.0) == 1.0);
  CHECK(stats::poisson_pmf(3, 0.0) == 0.0);
  CHECK(stats::poisson_pmf(0, 0.487) == doctest::Approx(std::exp(-0.487)).epsilon(1e-12));
  CHECK(stats::poisson_pmf(0, 0.487) == doctest::Approx(0.6144668898).epsilon(1e-6));
  // Large n stays finite and correct in log space.
  double direct = std::exp(-5.0) * std::pow(5.0, 40) / std::tgamma(41.0);
  CHECK(stats::poisson_pmf(40, 5.0) == doctest::Approx(direct).epsilon(1e-9));

  // Multiphoton fraction of non-vacuum pulses at mu = 0.1 is close to
  // mu/2: (1 - e^-mu (1+mu)) / (1 - e^-mu).
  double mu = 0.1;
  double frac = (1.0 - std::exp(-mu) * (1.0 + mu)) / (1.0 - std::exp(-mu));
  CHECK(frac == doctest::Approx(0.0491668867).epsilon(1e-6));
  double from_pmf = (1.0 - stats::poisson_pmf(0, mu) - stats::poisson_pmf(1, mu)) /
                    (1.0 - stats::poisson_pmf(0, mu));
  CHECK(from_pmf == doctest::Approx(frac).epsilon(1e-12));
  CHECK(std::fabs(frac - mu / 2) < 0.002);
}

TEST_CASE("poisson tail mass is exact far below rounding") {
  CHECK(stats::poisson_tail_mass(0, 0.0) == 0.0);
  CHECK(stats::poisson_tail_mass(20, 0.5) < 1e-19);
  CHECK(stats::poisson_tail_mass(20, 0.5) > 0.0);
  // Direct summation: 1 - e^-mu (1 + mu) at n_max = 1.
  double expect = 1.0 - std::exp(-0.487) * 1.487;
  CHECK(stats::poisson_tail_mass(1, 0.487) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(stats::poisson_tail_mass(1, 0.487) == doctest::Approx(0.0862877329).epsilon(1e-6));
}

TEST_CASE("pmf sum plus tail is one") {
  for (double mu : {0.05, 0.297, 0.487, 1.3, 7.0}) {
    for (std::uint64_t n_max : {0ULL, 3ULL, 20ULL, 40ULL}) {
      double sum = 0.0;
      for (std::uint64_t n = 0; n <= n_max; ++n) sum += stats::poisson_pmf(n, mu);
      CHECK(sum + stats::poisson_tail_mass(n_max, mu) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("binomial cdf matches the log-sum oracle") {
  struct Case {
    std::uint64_t k, n;
    double p;
  } cases[] = {{0, 10, 0.3},     {5, 10, 0.5},   {9, 10, 0.99},  {100, 1000, 0.08},
               {140, 1000, 0.1}, {3, 2000, 0.01}, {1900, 2000, 0.97}};
  for (auto [k, n, p] : cases) {
    CHECK(stats::binomial_cdf(k, n, p) == doctest::Approx(oracle_cdf(k, n, p)).epsilon(1e-11));
    CHECK(stats::binomial_sf(k, n, p) == doctest::Approx(oracle_sf(k, n, p)).epsilon(1e-10));
  }
}

TEST_CASE("closed forms at the all-or-nothing boundaries") {
  // successes = trials: lower = eps^(1/n), upper = 1.
  auto ci = stats::binomial_bounds(50, 50, 0.01);
  CHECK(ci.upper == 1.0);
  CHECK(ci.lower == doctest::Approx(std::pow(0.01, 1.0 / 50)).epsilon(1e-12));
  // successes = 0: lower = 0, upper = 1 - eps^(1/n) exactly.
  auto ci0 = stats::binomial_bounds(0, 100, 1e-7);
  CHECK(ci0.lower == 0.0);
  CHECK(ci0.upper == -std::expm1(std::log(1e-7) / 100.0));
  CHECK(ci0.upper == doctest::Approx(0.1488619648).epsilon(1e-5));
}

TEST_CASE("bounds match the bisection oracle") {
  auto ci = stats::binomial_bounds(5, 10, 0.05);
  CHECK(ci.lower == doctest::Approx(oracle_lower(5, 10, 0.05)).epsilon(1e-9));
  CHECK(ci.upper == doctest::Approx(oracle_upper(5, 10, 0.05)).epsilon(1e-9));

  struct Case {
    std::uint64_t k, n;
    double eps;
  } cases[] = {{1, 30, 0.01},  {17, 60, 1e-4},   {250, 1000, 1e-7},
               {999, 1000, 0.2}, {3, 5000, 1e-7}, {12, 12, 1e-3}};
  for (auto [k, n, eps] : cases) {
    auto b = stats::binomial_bounds(k, n, eps);
    CHECK(b.lower == doctest::Approx(oracle_lower(k, n, eps)).epsilon(5e-9));
    CHECK(b.upper == doctest::Approx(oracle_upper(k, n, eps)).epsilon(5e-9));
  }
}

TEST_CASE("interval ordering, monotonicity in successes and epsilon") {
  const std::uint64_t n = 40;
  double prev_lower = -1.0, prev_upper = -1.0;
  for (std::uint64_t k = 0; k <= n; ++k) {
    auto ci = stats::binomial_bounds(k, n, 1e-3);
    double phat = static_cast<double>(k) / n;
    CHECK(ci.lower <= phat + 1e-12);
    CHECK(ci.upper >= phat - 1e-12);
    CHECK(ci.lower >= prev_lower - 1e-12);
    CHECK(ci.upper >= prev_upper - 1e-12);
    prev_lower = ci.lower;
    prev_upper = ci.upper;
  }
  // Widening epsilon narrows the interval.
  auto tight = stats::binomial_bounds(20, 40, 1e-7);
  auto loose = stats::binomial_bounds(20, 40, 1e-2);
  CHECK(loose.lower > tight.lower);
  CHECK(loose.upper < tight.upper);
}

TEST_CASE("coverage at epsilon = 1e-2 stays within 1.5x per side") {
  const std::uint64_t n = 400;
  const double p_true = 0.27;
  const double eps = 1e-2;
  // Bounds depend only on k; precompute.
  std::vector<stats::ConfidenceInterval> table(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k) table[k] = stats::binomial_bounds(k, n, eps);
  rng::Stream s(5150, rng::Domain::test, 0);
  int miss_low = 0, miss_high = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    std::uint64_t k = s.binomial(n, p_true);
    if (p_true < table[k].lower) ++miss_low;
    if (p_true > table[k].upper) ++miss_high;
  }
  CHECK(miss_low <= 1.5 * eps * trials);
  CHECK(miss_high <= 1.5 * eps * trials);
}

TEST_CASE("paper-scale counts are fast and sane") {
  // 1.9e5 successes out of 1.72e9 trials at eps = 1e-7: relative
  // half-width under 2%.
  auto ci = stats::binomial_bounds(190000, 1720170000ULL, 1e-7);
  double phat = 190000.0 / 1720170000.0;
  CHECK(ci.lower < phat);
  CHECK(ci.upper > phat);
  CHECK((ci.upper - phat) / phat < 0.02);
  CHECK((phat - ci.lower) / phat < 0.02);
}

TEST_CASE("precondition violations throw") {
  CHECK_THROWS_AS(stats::binomial_bounds(5, 4, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(stats::binomial_bounds(1, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(stats::binomial_bounds(1, 10, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(stats::binomial_bounds(1, 10, 0.5), std::invalid_argument);
}
