#include <stdexcept>

#include "dsqkd/scenario.hpp"

namespace dsqkd::presets {

namespace {

struct PresetSpec {
  const char* name;
  double fiber_length_km;
  std::array<double, 3> intensities;
  std::array<double, 3> send_probabilities;
  double duration_s;
  double target_sifted_mu0; // observed sifted count at the bright level
  double target_qber;       // observed bright-level QBER
  double background_yield;  // effective in-window background per cycle
  double sweep_from_km, sweep_to_km;
};

// The two bundled reference scenarios. window_acceptance and
// visibility_error are fitted so the model reproduces the recorded
// sifted counts and error rates; background_yield is an effective
// in-window rate fitted against the reported channel-estimation bounds,
// which sit above the raw detector dark-count rate.
constexpr PresetSpec kPresets[] = {
    {"paper-85km",
     85.0,
     {0.487, 0.0639, 1.05e-3},
     {0.831, 0.123, 0.046},
     351.0,
     2.2e5,
     0.033,
     1.90e-5,
     65.0,
     110.0},
    {"paper-100km",
     100.0,
     {0.297, 0.099, 2.75e-3},
     {0.831, 0.123, 0.046},
     828.0,
     1.9e5,
     0.040,
     1.30e-5,
     80.0,
     125.0},
};

scenario::ScenarioConfig build(const PresetSpec& spec) {
  scenario::ScenarioConfig c;
  c.name = spec.name;
  c.decoy.intensities = spec.intensities;
  c.decoy.send_probabilities = spec.send_probabilities;
  c.decoy.clock_rate_hz = 2.5e6;
  c.decoy.duration_s = spec.duration_s;
  c.decoy.epsilon = 1e-7;

  c.channel.fiber_length_km = spec.fiber_length_km;
  c.channel.attenuation_db_per_km = 0.21;
  c.channel.detector_efficiencies = {0.33, 0.50};
  c.channel.background_yield = spec.background_yield;
  c.channel.window_acceptance = 1.0;
  c.channel.visibility_error = 0.0;

  double pulses_mu0 = static_cast<double>(c.decoy.clock_cycles()) * spec.send_probabilities[0];
  double target_sift_prob = spec.target_sifted_mu0 / pulses_mu0;
  for (int round = 0; round < 4; ++round) {
    c.channel.window_acceptance = channel::calibrate_window_acceptance(
        c.channel, spec.intensities[0], target_sift_prob);
    c.channel.visibility_error = channel::calibrate_visibility_error(
        c.channel, spec.intensities[0], spec.target_qber);
  }

  c.distance_sweep.enabled = true;
  c.distance_sweep.from_km = spec.sweep_from_km;
  c.distance_sweep.to_km = spec.sweep_to_km;
  c.distance_sweep.step_km = 1.0;
  c.time_factors = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  return c;
}

} // namespace

std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

scenario::ScenarioConfig by_name(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return build(p);
  throw scenario::ConfigError("unknown preset: " + name);
}

} // namespace dsqkd::presets
