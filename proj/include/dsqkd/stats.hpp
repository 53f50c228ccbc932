#pragma once

#include <cstdint>

namespace dsqkd::stats {

/// One-sided exact binomial bounds on an unknown success probability.
/// Each endpoint individually fails with probability at most
/// epsilon_per_side.
struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
  double epsilon_per_side = 0.0;
};

/// Shannon binary entropy in bits, with the 0*log(0) = 0 convention.
/// Throws std::domain_error outside [0, 1].
double binary_entropy(double p);

/// exp(-mu) mu^n / n!, evaluated in log space so large n stays finite.
double poisson_pmf(std::uint64_t n, double mu);

/// P[Poisson(mu) > n_max], computed as a direct tail series so values
/// far below double rounding of 1 - CDF remain exact.
double poisson_tail_mass(std::uint64_t n_max, double mu);

/// P[Bin(n, p) <= k], exact. Summation runs outward from the anchored
/// tail so the term count stays near sqrt(n p (1-p)) in every regime.
double binomial_cdf(std::uint64_t k, std::uint64_t n, double p);

/// P[Bin(n, p) >= k], exact.
double binomial_sf(std::uint64_t k, std::uint64_t n, double p);

/// Exact one-sided (Clopper-Pearson style) confidence bounds:
///   upper = smallest p with P[Bin(trials, p) <= successes] <= epsilon
///   lower = largest  p with P[Bin(trials, p) >= successes] <= epsilon
/// with lower = 0 at successes = 0 and upper = 1 at successes = trials.
/// Bisection to 1e-12 absolute; endpoints are rounded outward so the
/// stated coverage always holds.
ConfidenceInterval binomial_bounds(std::uint64_t successes, std::uint64_t trials,
                                   double epsilon);

} // namespace dsqkd::stats
