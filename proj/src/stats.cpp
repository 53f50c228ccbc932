#include "dsqkd/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace dsqkd::stats {

namespace {

constexpr double kBisectTol = 1e-12;
constexpr int kBisectMaxIter = 200;

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  double nd = static_cast<double>(n);
  double kd = static_cast<double>(k);
  double log_choose =
      std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  double lp = (k == 0) ? 0.0 : kd * std::log(p);
  double lq = (k == n) ? 0.0 : (nd - kd) * std::log1p(-p);
  return log_choose + lp + lq;
}

// Mode of Bin(n, p); anchor for stable tail summation.
std::uint64_t binomial_mode(std::uint64_t n, double p) {
  double m = std::floor((static_cast<double>(n) + 1.0) * p);
  if (m < 0.0) return 0;
  if (m > static_cast<double>(n)) return n;
  return static_cast<std::uint64_t>(m);
}

// Sum of pmf over i = k, k-1, ..., 0, starting from the anchor term at k.
// Valid (terms non-increasing downward) whenever k <= mode.
double lower_tail_sum(std::uint64_t k, std::uint64_t n, double p) {
  double lg = log_binomial_pmf(k, n, p);
  if (lg < -745.0) return 0.0;
  double term = std::exp(lg);
  double sum = term;
  double nd = static_cast<double>(n);
  double ratio_qp = (1.0 - p) / p;
  for (std::uint64_t i = k; i > 0; --i) {
    // P(i-1)/P(i) = i (1-p) / ((n-i+1) p)
    term *= static_cast<double>(i) * ratio_qp / (nd - static_cast<double>(i) + 1.0);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

// Sum of pmf over i = k, k+1, ..., n. Valid whenever k >= mode.
double upper_tail_sum(std::uint64_t k, std::uint64_t n, double p) {
  double lg = log_binomial_pmf(k, n, p);
  if (lg < -745.0) return 0.0;
  double term = std::exp(lg);
  double sum = term;
  double nd = static_cast<double>(n);
  double ratio_pq = p / (1.0 - p);
  for (std::uint64_t i = k; i < n; ++i) {
    // P(i+1)/P(i) = (n-i) p / ((i+1) (1-p))
    term *= (nd - static_cast<double>(i)) * ratio_pq / (static_cast<double>(i) + 1.0);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

} // namespace

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("binary_entropy: p outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double poisson_pmf(std::uint64_t n, double mu) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson_pmf: mu must be >= 0");
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  double nd = static_cast<double>(n);
  return std::exp(-mu + nd * std::log(mu) - std::lgamma(nd + 1.0));
}

double poisson_tail_mass(std::uint64_t n_max, double mu) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson_tail_mass: mu must be >= 0");
  if (mu == 0.0) return 0.0;
  // Direct series over n > n_max: pmf(n_max+1) * (1 + mu/(n_max+2) + ...)
  double term = poisson_pmf(n_max + 1, mu);
  double sum = term;
  double denom = static_cast<double>(n_max) + 2.0;
  while (term > 0.0) {
    term *= mu / denom;
    if (term < sum * 1e-18) break;
    sum += term;
    denom += 1.0;
  }
  if (sum < 0.0) return 0.0;
  if (sum > 1.0) return 1.0;
  return sum;
}

double binomial_cdf(std::uint64_t k, std::uint64_t n, double p) {
  if (n == 0 || p > 1.0 || p < 0.0) throw std::domain_error("binomial_cdf: bad arguments");
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0; // k < n
  if (k < binomial_mode(n, p)) return lower_tail_sum(k, n, p);
  double upper = upper_tail_sum(k + 1, n, p);
  return upper < 1.0 ? 1.0 - upper : 0.0;
}

double binomial_sf(std::uint64_t k, std::uint64_t n, double p) {
  if (n == 0 || p > 1.0 || p < 0.0) throw std::domain_error("binomial_sf: bad arguments");
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0; // k >= 1
  if (p == 1.0) return 1.0;
  if (k >= binomial_mode(n, p)) return upper_tail_sum(k, n, p);
  double lower = lower_tail_sum(k - 1, n, p);
  return lower < 1.0 ? 1.0 - lower : 0.0;
}

ConfidenceInterval binomial_bounds(std::uint64_t successes, std::uint64_t trials,
                                   double epsilon) {
  if (trials < 1) throw std::invalid_argument("binomial_bounds: trials must be >= 1");
  if (successes > trials)
    throw std::invalid_argument("binomial_bounds: successes exceed trials");
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw std::invalid_argument("binomial_bounds: epsilon outside (0, 0.5)");

  const double nd = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / nd;
  const double log_eps = std::log(epsilon);
  ConfidenceInterval ci;
  ci.epsilon_per_side = epsilon;

  // Upper endpoint: smallest p with P[X <= k] <= eps.
  if (successes == trials) {
    ci.upper = 1.0;
  } else if (successes == 0) {
    // (1-p)^n = eps in closed form.
    ci.upper = -std::expm1(log_eps / nd);
  } else {
    double lo = phat; // CDF there is >= ~0.3 > eps
    double hi = phat;
    double step = std::sqrt(phat * (1.0 - phat) / nd) * 8.0 + 2.0 / nd;
    do {
      hi = std::min(1.0, hi + step);
      step *= 2.0;
    } while (hi < 1.0 && binomial_cdf(successes, trials, hi) > epsilon);
    for (int it = 0; it < kBisectMaxIter && hi - lo > kBisectTol; ++it) {
      double mid = 0.5 * (lo + hi);
      if (binomial_cdf(successes, trials, mid) <= epsilon)
        hi = mid;
      else
        lo = mid;
    }
    ci.upper = hi; // the side certified to satisfy the tail condition
  }

  // Lower endpoint: largest p with P[X >= k] <= eps.
  if (successes == 0) {
    ci.lower = 0.0;
  } else if (successes == trials) {
    // p^n = eps in closed form.
    ci.lower = std::exp(log_eps / nd);
  } else {
    double hi = phat; // SF there is >= ~0.3 > eps
    double lo = phat;
    double step = std::sqrt(phat * (1.0 - phat) / nd) * 8.0 + 2.0 / nd;
    do {
      lo = std::max(0.0, lo - step);
      step *= 2.0;
    } while (lo > 0.0 && binomial_sf(successes, trials, lo) > epsilon);
    for (int it = 0; it < kBisectMaxIter && hi - lo > kBisectTol; ++it) {
      double mid = 0.5 * (lo + hi);
      if (binomial_sf(successes, trials, mid) <= epsilon)
        lo = mid;
      else
        hi = mid;
    }
    ci.lower = lo;
  }

  return ci;
}

} // namespace dsqkd::stats
