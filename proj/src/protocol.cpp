#include "dsqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace dsqkd::protocol {

namespace {

struct FrameEntry {
  std::uint8_t alice_bit;
  std::uint8_t bob_bit;
  std::uint8_t level;
};

struct BatchOutput {
  SessionTallies tallies{};
  std::vector<FrameEntry> entries;
  std::vector<DetectionRecord> records;
};

void simulate_range(const DecoyConfig& config, const channel::ChannelModel& channel,
                    std::uint64_t seed, std::uint64_t first, std::uint64_t last,
                    bool keep_records, BatchOutput& out) {
  const double t_arrival = channel.window_acceptance * channel.fiber_transmittance();
  const std::array<double, 2> p_click{t_arrival * channel.detector_efficiencies[0],
                                      t_arrival * channel.detector_efficiencies[1]};
  const double d_bg = channel::per_detector_background(channel);
  const double v = channel.visibility_error;
  const std::array<double, 2> cum{config.send_probabilities[0],
                                  config.send_probabilities[0] +
                                      config.send_probabilities[1]};
  // Hoisted per-cycle constants: Poisson inversion thresholds and the
  // no-background probability (the background branch resolves lazily).
  const std::array<double, kLevels> vacuum{std::exp(-config.intensities[0]),
                                           std::exp(-config.intensities[1]),
                                           std::exp(-config.intensities[2])};
  const double p_quiet = (1.0 - d_bg) * (1.0 - d_bg);
  const double p_quiet_or_only0 = p_quiet + d_bg * (1.0 - d_bg);

  for (std::uint64_t cycle = first; cycle < last; ++cycle) {
    rng::Stream s(seed, rng::Domain::cycle, cycle);
    double u = s.uniform();
    int level = u < cum[0] ? 0 : (u < cum[1] ? 1 : 2);
    ++out.tallies.pulses_sent[level];

    std::uint32_t bits = s.next_u32();
    int alice_basis = bits & 1;
    int bob_basis = (bits >> 1) & 1;
    int alice_bit = (bits >> 2) & 1;
    if (alice_basis != bob_basis) continue; // cannot survive sifting

    // Photon number by product-of-uniforms inversion.
    std::uint64_t n = 0;
    for (double prod = s.uniform(); prod > vacuum[level]; prod *= s.uniform()) ++n;

    bool click0 = false, click1 = false;
    for (std::uint64_t i = 0; i < n; ++i) {
      int det = alice_bit ^ (s.bernoulli(v) ? 1 : 0);
      if (s.bernoulli(p_click[det])) (det == 0 ? click0 : click1) = true;
    }
    double bg = s.uniform();
    if (bg >= p_quiet) {
      if (bg < p_quiet_or_only0) {
        click0 = true;
      } else {
        // Remaining mass d(1-d) + d^2: both-click with conditional d.
        click1 = true;
        if (s.bernoulli(d_bg)) click0 = true;
      }
    }

    auto bob_bit = sift_cycle(alice_basis, bob_basis, click0, click1);
    if (!bob_bit) continue;
    ++out.tallies.sifted_detections[level];
    if (*bob_bit != alice_bit) ++out.tallies.sifted_errors[level];
    out.entries.push_back({static_cast<std::uint8_t>(alice_bit),
                           static_cast<std::uint8_t>(*bob_bit),
                           static_cast<std::uint8_t>(level)});
    if (keep_records) {
      out.records.push_back({cycle, static_cast<std::uint8_t>(level),
                             static_cast<std::uint8_t>(alice_basis),
                             static_cast<std::uint8_t>(alice_bit),
                             static_cast<std::uint8_t>(bob_basis),
                             static_cast<std::uint8_t>(*bob_bit)});
    }
  }
}

double zeros_fraction(const BitVector& bits) {
  return bits.empty() ? 0.5
                      : static_cast<double>(bits.count_zeros()) /
                            static_cast<double>(bits.size());
}

} // namespace

void DecoyConfig::validate() const {
  if (!(intensities[0] > intensities[1] && intensities[1] > intensities[2] &&
        intensities[2] >= 0.0))
    throw std::invalid_argument("decoy: intensities must satisfy mu0 > mu1 > mu2 >= 0");
  if (intensities[2] > 0.01 * intensities[0] * (1.0 + 1e-9))
    throw std::invalid_argument("decoy: mu2 must stay below 1% of mu0");
  double sum = 0.0;
  for (double p : send_probabilities) {
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("decoy: send probabilities must lie in (0,1)");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("decoy: send probabilities must sum to 1");
  if (!(clock_rate_hz > 0.0) || !(duration_s > 0.0))
    throw std::invalid_argument("decoy: clock rate and duration must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw std::invalid_argument("decoy: epsilon outside (0, 0.5)");
  double cycles = clock_rate_hz * duration_s;
  if (!(cycles >= 1.0) || cycles > 9.0e18)
    throw std::invalid_argument("decoy: cycle count out of range");
}

std::uint64_t DecoyConfig::clock_cycles() const {
  return static_cast<std::uint64_t>(std::llround(clock_rate_hz * duration_s));
}

void SessionTallies::validate() const {
  std::uint64_t total = 0;
  for (int j = 0; j < kLevels; ++j) {
    if (sifted_errors[j] > sifted_detections[j] || sifted_detections[j] > pulses_sent[j])
      throw std::invalid_argument("tallies: count ordering violated");
    total += pulses_sent[j];
  }
  if (total != clock_cycles)
    throw std::invalid_argument("tallies: pulses sent do not add up to clock cycles");
}

void SiftedFrame::validate() const {
  if (alice_bits.size() != bob_bits.size() || alice_bits.size() != intensity_tags.size())
    throw std::invalid_argument("frame: component lengths differ");
}

std::optional<int> sift_cycle(int alice_basis, int bob_basis, bool click0, bool click1) {
  if (alice_basis != bob_basis) return std::nullopt;
  if (click0 == click1) return std::nullopt; // no click, or a double click
  return click1 ? 1 : 0;
}

SessionResult simulate_session(const DecoyConfig& config,
                               const channel::ChannelModel& channel, std::uint64_t seed,
                               int threads, std::vector<DetectionRecord>* records) {
  config.validate();
  channel.validate();
  const std::uint64_t cycles = config.clock_cycles();
  if (threads < 1) threads = 1;
  std::uint64_t n_batches =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), cycles);

  std::vector<BatchOutput> outputs(n_batches);
  const bool keep_records = records != nullptr;
  auto run = [&](std::uint64_t b) {
    std::uint64_t first = cycles / n_batches * b + std::min<std::uint64_t>(b, cycles % n_batches);
    std::uint64_t count = cycles / n_batches + (b < cycles % n_batches ? 1 : 0);
    simulate_range(config, channel, seed, first, first + count, keep_records, outputs[b]);
  };
  if (n_batches == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::uint64_t b = 0; b < n_batches; ++b) pool.emplace_back(run, b);
    for (auto& t : pool) t.join();
  }

  SessionResult result;
  result.tallies.clock_cycles = cycles;
  std::size_t total_events = 0;
  for (const auto& o : outputs) total_events += o.entries.size();
  result.frame.intensity_tags.reserve(total_events);
  for (const auto& o : outputs) {
    for (int j = 0; j < kLevels; ++j) {
      result.tallies.pulses_sent[j] += o.tallies.pulses_sent[j];
      result.tallies.sifted_detections[j] += o.tallies.sifted_detections[j];
      result.tallies.sifted_errors[j] += o.tallies.sifted_errors[j];
    }
    for (const auto& e : o.entries) {
      result.frame.alice_bits.push_back(e.alice_bit);
      result.frame.bob_bits.push_back(e.bob_bit);
      result.frame.intensity_tags.push_back(e.level);
    }
    if (records)
      records->insert(records->end(), o.records.begin(), o.records.end());
  }
  result.frame.degenerate = result.frame.size() == 0;
  result.frame.zeros_fraction_before_flip = zeros_fraction(result.frame.alice_bits);
  result.tallies.validate();
  return result;
}

SessionTallies simulate_tallies(const DecoyConfig& config,
                                const channel::ChannelModel& channel, std::uint64_t seed) {
  config.validate();
  channel.validate();
  SessionTallies t;
  t.clock_cycles = config.clock_cycles();
  rng::Stream s(seed, rng::Domain::fast_tallies, 0);

  // Multinomial split of cycles over levels via sequential binomials.
  std::uint64_t remaining = t.clock_cycles;
  double prob_left = 1.0;
  for (int j = 0; j < kLevels; ++j) {
    double p = config.send_probabilities[j] / prob_left;
    std::uint64_t n = (j == kLevels - 1) ? remaining : s.binomial(remaining, std::min(p, 1.0));
    t.pulses_sent[j] = n;
    remaining -= n;
    prob_left -= config.send_probabilities[j];
  }

  for (int j = 0; j < kLevels; ++j) {
    auto probs = channel::sifted_event_probabilities(channel, config.intensities[j]);
    std::uint64_t k = s.binomial(t.pulses_sent[j], probs.sift);
    double err_given_sift = probs.sift > 0.0 ? probs.error / probs.sift : 0.0;
    t.sifted_detections[j] = k;
    t.sifted_errors[j] = s.binomial(k, err_given_sift);
  }
  t.validate();
  return t;
}

double model_zeros_fraction(const DecoyConfig& config,
                            const channel::ChannelModel& channel) {
  double zeros = 0.0, total = 0.0;
  for (int j = 0; j < kLevels; ++j) {
    auto probs = channel::sifted_event_probabilities(channel, config.intensities[j]);
    zeros += config.send_probabilities[j] * probs.alice_zero;
    total += config.send_probabilities[j] * probs.sift;
  }
  return total > 0.0 ? zeros / total : 0.5;
}

void balance_frame(SiftedFrame& frame, std::uint64_t seed) {
  frame.validate();
  const std::size_t n = frame.size();
  if (n == 0) {
    frame.degenerate = true;
    frame.zeros_fraction_before_flip = 0.5;
    frame.balanced = true;
    return;
  }

  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng::Stream shuffle_stream(seed, rng::Domain::shuffle, 0);
  shuffle_stream.shuffle(perm);

  BitVector alice(n), bob(n);
  std::vector<std::uint8_t> tags(n);
  for (std::size_t i = 0; i < n; ++i) {
    alice.set(i, frame.alice_bits.get(perm[i]));
    bob.set(i, frame.bob_bits.get(perm[i]));
    tags[i] = frame.intensity_tags[perm[i]];
  }
  frame.alice_bits = std::move(alice);
  frame.bob_bits = std::move(bob);
  frame.intensity_tags = std::move(tags);

  frame.zeros_fraction_before_flip = zeros_fraction(frame.alice_bits);

  // Both parties flip the same randomly chosen half of the positions.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng::Stream flip_stream(seed, rng::Domain::flip, 0);
  flip_stream.shuffle(order);
  for (std::size_t i = 0; i < n / 2; ++i) {
    frame.alice_bits.flip(order[i]);
    frame.bob_bits.flip(order[i]);
  }
  frame.balanced = true;
}

SiftedFrame sift_and_balance(const std::vector<DetectionRecord>& records,
                             std::uint64_t seed) {
  SiftedFrame frame;
  for (const auto& r : records) {
    frame.alice_bits.push_back(r.alice_bit);
    frame.bob_bits.push_back(r.bob_bit);
    frame.intensity_tags.push_back(r.level);
  }
  frame.degenerate = frame.size() == 0;
  balance_frame(frame, seed);
  return frame;
}

SiftedFrame select_level(const SiftedFrame& frame, std::uint8_t level) {
  frame.validate();
  SiftedFrame out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.intensity_tags[i] != level) continue;
    out.alice_bits.push_back(frame.alice_bits.get(i));
    out.bob_bits.push_back(frame.bob_bits.get(i));
    out.intensity_tags.push_back(level);
  }
  out.degenerate = out.size() == 0;
  out.zeros_fraction_before_flip = zeros_fraction(out.alice_bits);
  return out;
}

SessionTallies tallies_from_frame(const SiftedFrame& frame,
                                  const std::array<std::uint64_t, kLevels>& pulses_sent,
                                  std::uint64_t clock_cycles) {
  frame.validate();
  SessionTallies t;
  t.pulses_sent = pulses_sent;
  t.clock_cycles = clock_cycles;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    std::uint8_t level = frame.intensity_tags[i];
    if (level >= kLevels) throw std::invalid_argument("frame: intensity tag out of range");
    ++t.sifted_detections[level];
    if (frame.alice_bits.get(i) != frame.bob_bits.get(i)) ++t.sifted_errors[level];
  }
  t.validate();
  return t;
}

void write_detection_csv(std::ostream& os, const std::vector<DetectionRecord>& records) {
  os << "cycle,level,alice_basis,alice_bit,bob_basis,bob_bit\n";
  for (const auto& r : records) {
    os << r.cycle << ',' << int(r.level) << ',' << int(r.alice_basis) << ','
       << int(r.alice_bit) << ',' << int(r.bob_basis) << ',' << int(r.bob_bit) << '\n';
  }
}

} // namespace dsqkd::protocol
