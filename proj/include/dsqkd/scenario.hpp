#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsqkd/analysis.hpp"
#include "dsqkd/cascade.hpp"
#include "dsqkd/channel.hpp"
#include "dsqkd/protocol.hpp"

namespace dsqkd::scenario {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DistanceSweepSpec {
  bool enabled = false;
  double from_km = 0.0;
  double to_km = 0.0;
  double step_km = 1.0;
};

struct ScenarioConfig {
  std::string name = "custom";
  protocol::DecoyConfig decoy;
  channel::ChannelModel channel;
  std::uint64_t seed = 1;
  bool run_reconciliation = true;
  bool run_amplification = true;
  bool fast_tallies = false; // aggregated tallies instead of the pulse loop
  double f_ec_assumed = 1.1; // analysis-mode error-correction efficiency
  int n_max = 20;
  int threads = 1;
  DistanceSweepSpec distance_sweep;
  std::vector<double> time_factors;
  std::string output_dir;

  void validate() const;
};

ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);
std::string config_to_json(const ScenarioConfig& config);
std::uint64_t config_digest(const ScenarioConfig& config);

enum class RunStatus { ok, infeasible, reconciliation_failed };

struct PipelineOutcome {
  bool ran = false;
  bool verified = false;
  std::uint64_t leaked_bits = 0;
  std::optional<double> f_ec_measured;
  std::uint64_t n_sec = 0;
  BitVector alice_key;
  BitVector bob_key;
};

struct ScenarioOutcome {
  RunStatus status = RunStatus::ok;
  protocol::SessionTallies tallies;
  double zeros_fraction = 0.5;
  analysis::Analysis analysis;
  PipelineOutcome pipeline;
};

enum class Mode { simulate, analyze, pipeline };

/// Execute a scenario: simulate, optionally reconcile and amplify, and
/// attach the channel analysis. `records` (simulate mode) receives the
/// sifted detection log when non-null.
ScenarioOutcome run_scenario(const ScenarioConfig& config, Mode mode,
                             std::vector<protocol::DetectionRecord>* records = nullptr);

enum class ReportFormat { kv, csv };

std::string render_report(const ScenarioConfig& config, const ScenarioOutcome& outcome,
                          ReportFormat format = ReportFormat::kv);

/// Final-key file: one header line carrying the secret length, the
/// epsilon budget, and a digest of the generating config, then the key
/// as lowercase hex (MSB-first within each byte).
std::string render_key_file(const ScenarioConfig& config, const BitVector& key);

std::vector<analysis::SweepPoint> scenario_sweep_distance(const ScenarioConfig& config,
                                                          const ScenarioOutcome& outcome);
std::vector<analysis::SweepPoint> scenario_sweep_time(const ScenarioConfig& config,
                                                      const ScenarioOutcome& outcome);

/// fig2: distance_km,rate_bps. fig3: time_s,y1_lower,b1_upper,rate_bps.
std::string render_figure_csv(const std::string& figure_id,
                              const std::vector<analysis::SweepPoint>& points);

} // namespace dsqkd::scenario

namespace dsqkd::presets {

std::vector<std::string> names();
scenario::ScenarioConfig by_name(const std::string& name);

} // namespace dsqkd::presets
