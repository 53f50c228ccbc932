#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dsqkd/bits.hpp"

namespace dsqkd::cascade {

struct ReconciliationResult {
  BitVector corrected_bob_bits;
  std::uint64_t leaked_bits = 0; // parity bits disclosed by Alice
  std::uint32_t passes = 0;
  bool verified = false;
};

enum class MessageKind : std::uint8_t {
  block_parities, // all top-level block parities of one pass
  search_parity,  // one half-block parity during binary search
  verify_parity,  // random-subset parity from the final battery
};

/// A block or half-block, addressed in the permuted coordinates of one
/// pass; verify requests carry the battery mask index in `begin`.
struct Segment {
  std::uint32_t pass = 0;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

struct ParityRequest {
  MessageKind kind{};
  std::vector<Segment> segments;
};

struct TranscriptEntry {
  MessageKind kind{};
  std::uint64_t parity_bits = 0; // bits Alice disclosed in the reply
};

using Transcript = std::vector<TranscriptEntry>;

/// Ordered, reliable, bidirectional request/reply channel between the
/// reconciling parties. The in-process implementation used here answers
/// from Alice's key directly; a wire transport can implement the same
/// interface.
class MessageChannel {
public:
  virtual ~MessageChannel() = default;
  virtual std::vector<bool> exchange(const ParityRequest& request) = 0;
  virtual std::uint64_t disclosed_bits() const = 0;
};

struct Options {
  /// Top-level block sizes per pass; empty means cascade_schedule().
  std::vector<std::size_t> block_sizes;
  int verify_parities = 64;
};

/// Block-size schedule for the given error-rate estimate. Power-of-two
/// first block near 1/B, quadrupled once, then two half-length passes to
/// mop up surviving error pairs.
std::vector<std::size_t> cascade_schedule(double error_rate_estimate, std::size_t n);

/// Interactive parity reconciliation over an in-process channel. Bob's
/// frame is corrected toward Alice's; every parity Alice reveals is
/// counted in leaked_bits, including the final verification battery.
/// A failed battery reports verified = false rather than throwing.
ReconciliationResult cascade_reconcile(const BitVector& alice_bits,
                                       const BitVector& bob_bits,
                                       double error_rate_estimate, std::uint64_t seed,
                                       const Options& options = {},
                                       Transcript* transcript = nullptr);

/// leaked / (length * H2(qber)); empty when qber is zero (caller should
/// account with the raw leaked bit count instead).
std::optional<double> ec_efficiency(std::uint64_t leaked, std::uint64_t length,
                                    double qber);

} // namespace dsqkd::cascade
