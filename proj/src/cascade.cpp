#include "dsqkd/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "dsqkd/rng.hpp"
#include "dsqkd/stats.hpp"

namespace dsqkd::cascade {

namespace {

struct PassLayout {
  std::size_t block_size = 0;
  std::size_t blocks = 0;
  std::vector<std::uint32_t> perm;     // permuted position -> raw index
  std::vector<std::uint32_t> inv_perm; // raw index -> permuted position
};

bool range_parity(const BitVector& bits, const PassLayout& pass, std::uint64_t begin,
                  std::uint64_t end) {
  bool parity = false;
  for (std::uint64_t i = begin; i < end; ++i) parity ^= bits.get(pass.perm[i]);
  return parity;
}

// Alice's side of the protocol: answers parity queries against her key
// using the shared (public-coin) permutations and battery masks.
class AliceResponder {
public:
  AliceResponder(const BitVector& bits, const std::vector<PassLayout>& passes,
                 const std::vector<BitVector>& verify_masks)
      : bits_(bits), passes_(passes), masks_(verify_masks) {}

  std::vector<bool> answer(const ParityRequest& request) const {
    std::vector<bool> reply;
    reply.reserve(request.segments.size());
    for (const auto& seg : request.segments) {
      if (request.kind == MessageKind::verify_parity) {
        reply.push_back(bits_.dot_parity(masks_.at(seg.begin)));
      } else {
        reply.push_back(range_parity(bits_, passes_.at(seg.pass), seg.begin, seg.end));
      }
    }
    return reply;
  }

private:
  const BitVector& bits_;
  const std::vector<PassLayout>& passes_;
  const std::vector<BitVector>& masks_;
};

class InProcessChannel final : public MessageChannel {
public:
  InProcessChannel(AliceResponder responder, Transcript* transcript)
      : responder_(std::move(responder)), transcript_(transcript) {}

  std::vector<bool> exchange(const ParityRequest& request) override {
    auto reply = responder_.answer(request);
    disclosed_ += reply.size();
    if (transcript_) transcript_->push_back({request.kind, reply.size()});
    return reply;
  }

  std::uint64_t disclosed_bits() const override { return disclosed_; }

private:
  AliceResponder responder_;
  Transcript* transcript_;
  std::uint64_t disclosed_ = 0;
};

std::size_t round_up_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

} // namespace

std::vector<std::size_t> cascade_schedule(double error_rate_estimate, std::size_t n) {
  if (!(error_rate_estimate > 0.0 && error_rate_estimate < 0.5))
    throw std::invalid_argument("cascade_schedule: estimate outside (0, 0.5)");
  if (n < 2) return {std::size_t{2}};
  // Power-of-two first block one octave above 1/B keeps the top-parity
  // bill low while binary searches stay tight; doubling per pass (capped
  // at n/4) still separates masked error pairs, and the fifth pass mops
  // up the survivors.
  std::size_t cap = std::max<std::size_t>(2, n / 4);
  std::size_t k1 = 2 * round_up_pow2(
      static_cast<std::size_t>(std::ceil(1.0 / error_rate_estimate)));
  k1 = std::clamp<std::size_t>(k1, 2, cap);
  std::vector<std::size_t> sizes{k1};
  for (int p = 1; p < 5; ++p) sizes.push_back(std::min(cap, sizes.back() * 2));
  return sizes;
}

std::optional<double> ec_efficiency(std::uint64_t leaked, std::uint64_t length,
                                    double qber) {
  if (length < 1) throw std::invalid_argument("ec_efficiency: length must be >= 1");
  if (qber < 0.0 || qber >= 0.5)
    throw std::invalid_argument("ec_efficiency: qber outside [0, 0.5)");
  if (qber == 0.0) return std::nullopt;
  return static_cast<double>(leaked) /
         (static_cast<double>(length) * stats::binary_entropy(qber));
}

ReconciliationResult cascade_reconcile(const BitVector& alice_bits,
                                       const BitVector& bob_bits,
                                       double error_rate_estimate, std::uint64_t seed,
                                       const Options& options, Transcript* transcript) {
  const std::size_t n = alice_bits.size();
  if (n == 0 || bob_bits.size() != n)
    throw std::invalid_argument("cascade_reconcile: need equal nonzero lengths");
  if (!(error_rate_estimate > 0.0 && error_rate_estimate < 0.5))
    throw std::invalid_argument("cascade_reconcile: estimate outside (0, 0.5)");

  std::vector<std::size_t> sizes =
      options.block_sizes.empty() ? cascade_schedule(error_rate_estimate, n)
                                  : options.block_sizes;

  // Shared public coins: per-pass permutations and the verify battery.
  std::vector<PassLayout> passes(sizes.size());
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    auto& pass = passes[p];
    pass.block_size = std::clamp<std::size_t>(sizes[p], 1, n);
    pass.blocks = (n + pass.block_size - 1) / pass.block_size;
    pass.perm.resize(n);
    std::iota(pass.perm.begin(), pass.perm.end(), 0);
    rng::Stream perm_stream(seed, rng::Domain::cascade, 2 * p);
    perm_stream.shuffle(pass.perm);
    pass.inv_perm.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) pass.inv_perm[pass.perm[i]] = i;
  }
  std::vector<BitVector> masks;
  masks.reserve(options.verify_parities);
  rng::Stream mask_stream(seed, rng::Domain::cascade, 1 + 2 * sizes.size());
  for (int i = 0; i < options.verify_parities; ++i)
    masks.push_back(BitVector::random(n, mask_stream));

  InProcessChannel channel(AliceResponder(alice_bits, passes, masks), transcript);

  BitVector bob = bob_bits;
  std::vector<std::vector<std::uint8_t>> odd(passes.size());
  std::deque<std::pair<std::uint32_t, std::uint64_t>> queue;

  // Bob remembers every Alice parity he has learned (or can derive from a
  // parent segment), so repeated searches through the same block never
  // pay for the same information twice.
  std::vector<std::unordered_map<std::uint64_t, bool>> known(passes.size());
  auto seg_key = [](std::uint64_t lo, std::uint64_t hi) { return (lo << 32) | hi; };
  auto remember = [&](std::uint32_t p, std::uint64_t lo, std::uint64_t hi, bool v) {
    known[p].emplace(seg_key(lo, hi), v);
  };
  auto alice_segment_parity = [&](std::uint32_t p, std::uint64_t lo, std::uint64_t hi) {
    auto it = known[p].find(seg_key(lo, hi));
    if (it != known[p].end()) return it->second;
    ParityRequest req{MessageKind::search_parity, {{p, lo, hi}}};
    bool v = channel.exchange(req)[0];
    remember(p, lo, hi, v);
    return v;
  };

  auto flip_position = [&](std::uint32_t pos, std::size_t passes_ready) {
    bob.flip(pos);
    for (std::size_t q = 0; q < passes_ready; ++q) {
      std::uint64_t block = passes[q].inv_perm[pos] / passes[q].block_size;
      odd[q][block] ^= 1;
      if (odd[q][block]) queue.emplace_back(static_cast<std::uint32_t>(q), block);
    }
  };

  auto locate_and_fix = [&](std::uint32_t p, std::uint64_t block,
                            std::size_t passes_ready) {
    const auto& pass = passes[p];
    std::uint64_t lo = block * pass.block_size;
    std::uint64_t hi = std::min<std::uint64_t>(lo + pass.block_size, n);
    bool alice_range = alice_segment_parity(p, lo, hi); // cached: the block top
    while (hi - lo > 1) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      bool alice_left = alice_segment_parity(p, lo, mid);
      remember(p, mid, hi, alice_range != alice_left); // sibling comes free
      bool bob_left = range_parity(bob, pass, lo, mid);
      if (alice_left != bob_left) {
        hi = mid;
        alice_range = alice_left;
      } else {
        lo = mid;
        alice_range = alice_range != alice_left;
      }
    }
    flip_position(pass.perm[lo], passes_ready);
  };

  bool whole_parity = false; // Alice's full-string parity, fixed after pass 1
  for (std::size_t p = 0; p < passes.size(); ++p) {
    const auto& pass = passes[p];
    odd[p].assign(pass.blocks, 0);

    // Top-level parities. From the second pass on, the last block is
    // implied by the whole-string parity and costs nothing.
    std::uint64_t request_blocks = p == 0 ? pass.blocks : pass.blocks - 1;
    ParityRequest req{MessageKind::block_parities, {}};
    req.segments.reserve(request_blocks);
    for (std::uint64_t b = 0; b < request_blocks; ++b) {
      std::uint64_t lo = b * pass.block_size;
      req.segments.push_back({static_cast<std::uint32_t>(p), lo,
                              std::min<std::uint64_t>(lo + pass.block_size, n)});
    }
    std::vector<bool> alice_parities =
        request_blocks > 0 ? channel.exchange(req) : std::vector<bool>{};
    bool acc = false;
    for (bool v : alice_parities) acc = acc != v;
    if (p == 0)
      whole_parity = acc;
    else
      alice_parities.push_back(acc != whole_parity);

    for (std::uint64_t b = 0; b < pass.blocks; ++b) {
      std::uint64_t lo = b * pass.block_size;
      std::uint64_t hi = std::min<std::uint64_t>(lo + pass.block_size, n);
      remember(static_cast<std::uint32_t>(p), lo, hi, alice_parities[b]);
      bool bob_parity = range_parity(bob, pass, lo, hi);
      odd[p][b] = alice_parities[b] != bob_parity;
      if (odd[p][b]) queue.emplace_back(static_cast<std::uint32_t>(p), b);
    }

    // Drain: corrections cascade back into every pass seen so far.
    while (!queue.empty()) {
      auto [q, b] = queue.front();
      queue.pop_front();
      if (!odd[q][b]) continue;
      locate_and_fix(q, b, p + 1);
    }
  }

  ReconciliationResult result;
  result.passes = static_cast<std::uint32_t>(passes.size());

  bool all_match = true;
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(options.verify_parities); ++i) {
    ParityRequest req{MessageKind::verify_parity, {{0, i, 0}}};
    bool alice_parity = channel.exchange(req)[0];
    if (alice_parity != bob.dot_parity(masks[i])) all_match = false;
  }
  result.verified = all_match;
  result.leaked_bits = channel.disclosed_bits();
  result.corrected_bob_bits = std::move(bob);
  return result;
}

} // namespace dsqkd::cascade
