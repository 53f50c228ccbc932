#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "dsqkd/bits.hpp"
#include "dsqkd/channel.hpp"
#include "dsqkd/rng.hpp"

namespace dsqkd::protocol {

inline constexpr int kLevels = 3;

/// Three-level decoy configuration: a bright signal level, a moderate
/// decoy, and a near-vacuum level from the modulator's finite extinction.
struct DecoyConfig {
  std::array<double, kLevels> intensities{};        // mu0 > mu1 > mu2 >= 0
  std::array<double, kLevels> send_probabilities{}; // sum to 1
  double clock_rate_hz = 0.0;
  double duration_s = 0.0;
  double epsilon = 1e-7; // per one-sided bound

  void validate() const;
  std::uint64_t clock_cycles() const;
};

/// Per-intensity sufficient statistics of a session.
struct SessionTallies {
  std::array<std::uint64_t, kLevels> pulses_sent{};
  std::array<std::uint64_t, kLevels> sifted_detections{};
  std::array<std::uint64_t, kLevels> sifted_errors{};
  std::uint64_t clock_cycles = 0;

  void validate() const;
};

/// One sifted detection event (matched bases, exactly one detector).
struct DetectionRecord {
  std::uint64_t cycle = 0;
  std::uint8_t level = 0;
  std::uint8_t alice_basis = 0;
  std::uint8_t alice_bit = 0;
  std::uint8_t bob_basis = 0;
  std::uint8_t bob_bit = 0;
};

struct SiftedFrame {
  BitVector alice_bits;
  BitVector bob_bits;
  std::vector<std::uint8_t> intensity_tags;
  double zeros_fraction_before_flip = 0.5; // z, Alice's bits
  bool degenerate = false;                 // empty sifted key
  bool balanced = false;                   // shuffle + flip applied

  std::size_t size() const { return alice_bits.size(); }
  void validate() const;
};

struct SessionResult {
  SessionTallies tallies;
  SiftedFrame frame; // sifted, in cycle order, not yet balanced
};

/// Sifting predicate for a single cycle: keep iff the bases match and
/// exactly one detector clicked; the kept bit is the detector index.
std::optional<int> sift_cycle(int alice_basis, int bob_basis, bool click0, bool click1);

/// Pulse-level Monte Carlo of a full session. Each clock cycle draws its
/// randomness from a counter-based stream keyed by (seed, cycle index),
/// so results are bit-identical for any batch split. `records`, when
/// non-null, receives one entry per sifted event.
SessionResult simulate_session(const DecoyConfig& config,
                               const channel::ChannelModel& channel, std::uint64_t seed,
                               int threads = 1,
                               std::vector<DetectionRecord>* records = nullptr);

/// Aggregated fast path: samples the per-level sifted detection and error
/// counts from exact binomials at the model probabilities. Matches the
/// pulse-level path in distribution; produces tallies only.
SessionTallies simulate_tallies(const DecoyConfig& config,
                                const channel::ChannelModel& channel, std::uint64_t seed);

/// Expected zeros fraction of the sifted key under the channel model
/// (used when no frame is materialized).
double model_zeros_fraction(const DecoyConfig& config, const channel::ChannelModel& channel);

/// Shuffle both parties' bits with an identical permutation, record the
/// pre-flip zeros fraction, then flip an identical randomly chosen half
/// of the positions. Intensity tags travel with the permutation.
void balance_frame(SiftedFrame& frame, std::uint64_t seed);

/// Sift + shuffle + balanced flip in one step.
SiftedFrame sift_and_balance(const std::vector<DetectionRecord>& records,
                             std::uint64_t seed);

/// Sub-frame containing only events at one intensity level.
SiftedFrame select_level(const SiftedFrame& frame, std::uint8_t level);

/// Aggregate per-level sifted counts and disagreements from a frame.
SessionTallies tallies_from_frame(const SiftedFrame& frame,
                                  const std::array<std::uint64_t, kLevels>& pulses_sent,
                                  std::uint64_t clock_cycles);

void write_detection_csv(std::ostream& os, const std::vector<DetectionRecord>& records);

} // namespace dsqkd::protocol
