#include "dsqkd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dsqkd::optimizer {

namespace {

protocol::SessionTallies expected_tallies(const protocol::DecoyConfig& config,
                                          const channel::ChannelModel& channel) {
  protocol::SessionTallies t;
  const double cycles = static_cast<double>(config.clock_cycles());
  std::uint64_t assigned = 0;
  for (int j = 0; j < protocol::kLevels; ++j) {
    auto probs = channel::sifted_event_probabilities(channel, config.intensities[j]);
    std::uint64_t pulses =
        j + 1 < protocol::kLevels
            ? static_cast<std::uint64_t>(std::llround(cycles * config.send_probabilities[j]))
            : config.clock_cycles() - assigned;
    assigned += pulses;
    t.pulses_sent[j] = pulses;
    t.sifted_detections[j] = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(pulses) * probs.sift));
    t.sifted_errors[j] = std::min(
        t.sifted_detections[j],
        static_cast<std::uint64_t>(std::llround(static_cast<double>(pulses) * probs.error)));
  }
  t.clock_cycles = config.clock_cycles();
  return t;
}

bool config_less(const protocol::DecoyConfig& a, const protocol::DecoyConfig& b) {
  if (a.intensities[0] != b.intensities[0]) return a.intensities[0] < b.intensities[0];
  if (a.intensities[1] != b.intensities[1]) return a.intensities[1] < b.intensities[1];
  if (a.send_probabilities[0] != b.send_probabilities[0])
    return a.send_probabilities[0] < b.send_probabilities[0];
  return a.send_probabilities[1] < b.send_probabilities[1];
}

} // namespace

double predict_rate(const protocol::DecoyConfig& config,
                    const channel::ChannelModel& channel, double f_ec, int n_max) {
  config.validate();
  channel.validate();
  protocol::SessionTallies t = expected_tallies(config, channel);
  for (int j = 0; j < protocol::kLevels; ++j)
    if (t.pulses_sent[j] == 0) return 0.0;
  double z = protocol::model_zeros_fraction(config, channel);
  analysis::Analysis a = analysis::analyze(t, config, channel, z, f_ec, n_max);
  if (a.status != analysis::Status::ok) return 0.0;
  return static_cast<double>(a.key.n_sec) / config.duration_s;
}

OptimizationResult optimize(const channel::ChannelModel& channel, double duration_s,
                            double clock_rate_hz, double epsilon, double f_ec,
                            const SearchBox& box,
                            const std::vector<protocol::DecoyConfig>& extra_candidates) {
  OptimizationResult result;
  bool have_best = false;

  auto make_config = [&](double mu0, double mu1, double p0, double p1,
                         protocol::DecoyConfig& out) {
    double mu2 = box.extinction_ratio * mu0;
    double p2 = 1.0 - p0 - p1;
    if (!(mu0 > mu1 && mu1 > mu2 && mu2 >= 0.0)) return false;
    if (p0 <= 0.0 || p1 <= 0.0 || p2 < box.min_p2) return false;
    out.intensities = {mu0, mu1, mu2};
    out.send_probabilities = {p0, p1, p2};
    out.clock_rate_hz = clock_rate_hz;
    out.duration_s = duration_s;
    out.epsilon = epsilon;
    return true;
  };

  auto consider = [&](const protocol::DecoyConfig& config) {
    double rate = predict_rate(config, channel, f_ec);
    ++result.evaluations;
    result.search_trace.push_back({config, rate});
    if (!have_best || rate > result.predicted_rate ||
        (rate == result.predicted_rate && config_less(config, result.best_config))) {
      have_best = true;
      result.predicted_rate = rate;
      result.best_config = config;
    }
  };

  auto grid = [&](double lo, double hi, int steps, int i) {
    if (steps <= 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  };

  constexpr int kCoarse = 6;
  for (int a = 0; a < kCoarse; ++a)
    for (int b = 0; b < kCoarse; ++b)
      for (int c = 0; c < kCoarse; ++c)
        for (int d = 0; d < kCoarse; ++d) {
          protocol::DecoyConfig config;
          if (make_config(grid(box.mu0_min, box.mu0_max, kCoarse, a),
                          grid(box.mu1_min, box.mu1_max, kCoarse, b),
                          grid(box.p0_min, box.p0_max, kCoarse, c),
                          grid(box.p1_min, box.p1_max, kCoarse, d), config))
            consider(config);
        }

  for (const auto& candidate : extra_candidates) consider(candidate);

  if (!have_best) {
    throw std::runtime_error("optimize: empty feasible search box");
  }

  // Local refinement around the incumbent, halving the step each round.
  double step_mu0 = (box.mu0_max - box.mu0_min) / (kCoarse - 1);
  double step_mu1 = (box.mu1_max - box.mu1_min) / (kCoarse - 1);
  double step_p0 = (box.p0_max - box.p0_min) / (kCoarse - 1);
  double step_p1 = (box.p1_max - box.p1_min) / (kCoarse - 1);
  for (int round = 0; round < 4; ++round) {
    step_mu0 *= 0.5;
    step_mu1 *= 0.5;
    step_p0 *= 0.5;
    step_p1 *= 0.5;
    protocol::DecoyConfig center = result.best_config;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          for (int d = -1; d <= 1; ++d) {
            if (a == 0 && b == 0 && c == 0 && d == 0) continue;
            double mu0 = std::clamp(center.intensities[0] + a * step_mu0, box.mu0_min,
                                    box.mu0_max);
            double mu1 = std::clamp(center.intensities[1] + b * step_mu1, box.mu1_min,
                                    box.mu1_max);
            double p0 = std::clamp(center.send_probabilities[0] + c * step_p0,
                                   box.p0_min, box.p0_max);
            double p1 = std::clamp(center.send_probabilities[1] + d * step_p1,
                                   box.p1_min, box.p1_max);
            protocol::DecoyConfig config;
            if (make_config(mu0, mu1, p0, p1, config)) consider(config);
          }
  }
  return result;
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
  os << "mu0,mu1,mu2,p0,p1,p2,rate_bps\n";
  char buf[200];
  for (const auto& t : trace) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  t.config.intensities[0], t.config.intensities[1],
                  t.config.intensities[2], t.config.send_probabilities[0],
                  t.config.send_probabilities[1], t.config.send_probabilities[2],
                  t.rate_bps);
    os << buf;
  }
}

} // namespace dsqkd::optimizer
