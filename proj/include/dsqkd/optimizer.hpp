#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "dsqkd/analysis.hpp"
#include "dsqkd/channel.hpp"
#include "dsqkd/protocol.hpp"

namespace dsqkd::optimizer {

/// Search box over (mu0, mu1, p0, p1); mu2 is pinned to
/// extinction_ratio * mu0 and p2 takes the probability remainder.
struct SearchBox {
  double mu0_min = 0.1, mu0_max = 0.8;
  double mu1_min = 0.01, mu1_max = 0.25;
  double p0_min = 0.5, p0_max = 0.92;
  double p1_min = 0.04, p1_max = 0.4;
  double extinction_ratio = 0.01; // mu2 / mu0
  double min_p2 = 0.01;
};

struct TracePoint {
  protocol::DecoyConfig config;
  double rate_bps = 0.0;
};

struct OptimizationResult {
  protocol::DecoyConfig best_config;
  double predicted_rate = 0.0;
  std::uint64_t evaluations = 0;
  std::vector<TracePoint> search_trace;
};

/// Deterministic expected-rate pipeline: expected counts, exact intervals
/// at those counts, the yield LP, and the key-length formula. No
/// sampling.
double predict_rate(const protocol::DecoyConfig& config,
                    const channel::ChannelModel& channel, double f_ec, int n_max = 20);

/// Coordinate grid search with local refinement; flat zero-rate
/// landscapes and the floor in the key formula make gradients useless
/// here. Deterministic, lexicographic tie-breaks on (mu0, mu1, p0, p1).
OptimizationResult optimize(const channel::ChannelModel& channel, double duration_s,
                            double clock_rate_hz, double epsilon, double f_ec,
                            const SearchBox& box = {},
                            const std::vector<protocol::DecoyConfig>& extra_candidates = {});

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

} // namespace dsqkd::optimizer
