#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "dsqkd/channel.hpp"
#include "dsqkd/lp.hpp"
#include "dsqkd/protocol.hpp"
#include "dsqkd/stats.hpp"

namespace dsqkd::analysis {

struct YieldBounds {
  std::array<stats::ConfidenceInterval, protocol::kLevels> detection_intervals{};
  double y1_lower = 0.0;
  stats::ConfidenceInterval y0_interval{};
  int n_max = 20;
  double epsilon_budget = 0.0; // one-sided bounds consumed x epsilon
};

struct KeyResult {
  std::uint64_t n_sift = 0;
  double observed_qber = 0.0;      // B
  double zeros_fraction = 0.5;     // z before the balancing flip
  std::uint64_t single_photon_bound = 0; // s
  double b1_upper = 1.0;
  std::optional<double> f_ec;
  std::uint64_t n_sec = 0;
  bool n_sec_clamped = false;
  double security_failure_probability = 0.0; // 6 epsilon
};

enum class Status {
  ok,
  inconsistent, // observations admit no channel at confidence epsilon
};

struct Analysis {
  Status status = Status::ok;
  YieldBounds bounds;
  KeyResult key;
  double beamsplitter_fraction = 0.0;
  std::uint64_t beamsplitter_n_sec = 0;
};

/// Exact per-level bounds on the sifted detection probability per sent
/// pulse; two one-sided bounds per level, six in total.
std::array<stats::ConfidenceInterval, protocol::kLevels>
detection_intervals(const protocol::SessionTallies& tallies, double epsilon);

/// The yield polyhedron: variables y_0..y_nmax in [0,1], one ranged row
/// per level. Truncated Poisson tails are relaxed soundly: tail yields
/// count as 1 against lower bounds and 0 against upper bounds.
lp::LinearProgram build_yield_program(
    const std::array<stats::ConfidenceInterval, protocol::kLevels>& intervals,
    const std::array<double, protocol::kLevels>& intensities, int n_max);

struct YieldSolve {
  bool feasible = false;
  double y1_lower = 0.0;
  double y0_lower = 0.0;
  double y0_upper = 1.0;
};

/// Minimize y1 (and bracket y0) over the yield polyhedron.
YieldSolve bound_y1(const lp::LinearProgram& program);

/// s = floor(y1_lower * P(1|mu0) * pulses_mu0); Y_j and y_n both refer to
/// sifted detection probability per sent pulse, so no extra sift factor
/// appears here.
std::uint64_t single_photon_count(double y1_lower, double mu0,
                                  std::uint64_t pulses_mu0);

/// Conservative single-photon error bound: attribute every observed
/// sifted error to single-photon signals. Requires s > 0.
double bound_b1(std::uint64_t errors_mu0, std::uint64_t s);

/// s[1 - H2(b1)] - n_sift[f_ec H2(B) + (1 - H2(z))], before clamping.
double secret_key_length_real(std::uint64_t s, double b1_upper, std::uint64_t n_sift,
                              double f_ec, double qber, double z);

/// Same, floored and clamped at zero.
std::uint64_t secret_key_length(std::uint64_t s, double b1_upper, std::uint64_t n_sift,
                                double f_ec, double qber, double z,
                                bool* clamped = nullptr);

/// Full channel estimation + key accounting from session tallies. The
/// key is distilled from the brightest level; z is the pre-flip zeros
/// fraction of that key (a model value when no frame was materialized).
Analysis analyze(const protocol::SessionTallies& tallies,
                 const protocol::DecoyConfig& decoy,
                 const channel::ChannelModel& channel, double zeros_fraction,
                 double f_ec, int n_max = 20);

/// Key length under the random-deletion channel assumption: the
/// single-photon fraction implied by the observed gain replaces the
/// LP-certified s/N_sift.
struct BeamsplitterReference {
  double single_fraction = 0.0;
  std::uint64_t n_sec = 0;
};
BeamsplitterReference beamsplitter_reference(const protocol::SessionTallies& tallies,
                                             const protocol::DecoyConfig& decoy,
                                             const channel::ChannelModel& channel,
                                             double zeros_fraction, double f_ec);

struct SweepPoint {
  double x = 0.0;
  bool feasible = false;
  double y1_lower = 0.0;
  double b1_upper = 1.0;
  std::uint64_t n_sec = 0;
  double rate_bps = 0.0;
};

/// Enclave-redefinition sweep: each delta assigns `delta` extra km of
/// fiber to the sender (negative values shrink the enclave), rescaling
/// the exit intensities while the recorded tallies stay fixed.
std::vector<SweepPoint> sweep_distance(const protocol::SessionTallies& tallies,
                                       const protocol::DecoyConfig& decoy,
                                       const channel::ChannelModel& channel,
                                       double zeros_fraction, double f_ec, int n_max,
                                       const std::vector<double>& delta_km);

/// Acquisition-time sweep under a stationary channel: all counts scale
/// linearly with each factor.
std::vector<SweepPoint> sweep_time(const protocol::SessionTallies& tallies,
                                   const protocol::DecoyConfig& decoy,
                                   const channel::ChannelModel& channel,
                                   double zeros_fraction, double f_ec, int n_max,
                                   const std::vector<double>& factors);

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

} // namespace dsqkd::analysis
