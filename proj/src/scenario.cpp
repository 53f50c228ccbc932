#include "dsqkd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dsqkd/rng.hpp"
#include "dsqkd/toeplitz.hpp"

namespace dsqkd::scenario {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
  return buf;
}

json config_json(const ScenarioConfig& c) {
  json j;
  j["version"] = 1;
  j["name"] = c.name;
  j["decoy"] = {{"intensities", c.decoy.intensities},
                {"send_probabilities", c.decoy.send_probabilities},
                {"clock_rate_hz", c.decoy.clock_rate_hz},
                {"duration_s", c.decoy.duration_s},
                {"epsilon", c.decoy.epsilon}};
  j["channel"] = {{"fiber_length_km", c.channel.fiber_length_km},
                  {"attenuation_db_per_km", c.channel.attenuation_db_per_km},
                  {"detector_efficiencies", c.channel.detector_efficiencies},
                  {"background_yield", c.channel.background_yield},
                  {"visibility_error", c.channel.visibility_error},
                  {"window_acceptance", c.channel.window_acceptance}};
  j["seed"] = c.seed;
  j["pipeline"] = {{"reconcile", c.run_reconciliation},
                   {"amplify", c.run_amplification},
                   {"fast_tallies", c.fast_tallies},
                   {"f_ec_assumed", c.f_ec_assumed},
                   {"n_max", c.n_max},
                   {"threads", c.threads}};
  json sweep;
  if (c.distance_sweep.enabled) {
    sweep["distance"] = {{"from_km", c.distance_sweep.from_km},
                         {"to_km", c.distance_sweep.to_km},
                         {"step_km", c.distance_sweep.step_km}};
  }
  if (!c.time_factors.empty()) sweep["time_factors"] = c.time_factors;
  if (!sweep.is_null()) j["sweep"] = sweep;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

template <typename T, std::size_t N>
std::array<T, N> fixed_array(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw ConfigError(std::string("config: ") + what + " must be an array of " +
                      std::to_string(N));
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<T>();
  return out;
}

} // namespace

void ScenarioConfig::validate() const {
  try {
    decoy.validate();
    channel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(f_ec_assumed >= 1.0 && f_ec_assumed < 3.0))
    throw ConfigError("config: f_ec_assumed outside [1, 3)");
  if (n_max < 2 || n_max > 200) throw ConfigError("config: n_max outside [2, 200]");
  if (threads < 1 || threads > 256) throw ConfigError("config: threads outside [1, 256]");
  if (distance_sweep.enabled) {
    if (!(distance_sweep.step_km > 0.0) || distance_sweep.to_km < distance_sweep.from_km)
      throw ConfigError("config: malformed distance sweep");
  }
  for (double f : time_factors)
    if (!(f > 0.0)) throw ConfigError("config: time factors must be positive");
}

ScenarioConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    if (j.value("version", 0) != 1) throw ConfigError("config: unsupported schema version");
    ScenarioConfig c;
    c.name = j.value("name", std::string("custom"));
    const json& d = j.at("decoy");
    c.decoy.intensities = fixed_array<double, 3>(d.at("intensities"), "intensities");
    c.decoy.send_probabilities =
        fixed_array<double, 3>(d.at("send_probabilities"), "send_probabilities");
    c.decoy.clock_rate_hz = d.at("clock_rate_hz").get<double>();
    c.decoy.duration_s = d.at("duration_s").get<double>();
    c.decoy.epsilon = d.value("epsilon", 1e-7);
    const json& ch = j.at("channel");
    c.channel.fiber_length_km = ch.at("fiber_length_km").get<double>();
    c.channel.attenuation_db_per_km = ch.value("attenuation_db_per_km", 0.21);
    c.channel.detector_efficiencies =
        fixed_array<double, 2>(ch.at("detector_efficiencies"), "detector_efficiencies");
    c.channel.background_yield = ch.at("background_yield").get<double>();
    c.channel.visibility_error = ch.at("visibility_error").get<double>();
    c.channel.window_acceptance = ch.at("window_acceptance").get<double>();
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("pipeline")) {
      const json& p = j["pipeline"];
      c.run_reconciliation = p.value("reconcile", true);
      c.run_amplification = p.value("amplify", true);
      c.fast_tallies = p.value("fast_tallies", false);
      c.f_ec_assumed = p.value("f_ec_assumed", 1.1);
      c.n_max = p.value("n_max", 20);
      c.threads = p.value("threads", 1);
    }
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      if (s.contains("distance")) {
        c.distance_sweep.enabled = true;
        c.distance_sweep.from_km = s["distance"].at("from_km").get<double>();
        c.distance_sweep.to_km = s["distance"].at("to_km").get<double>();
        c.distance_sweep.step_km = s["distance"].value("step_km", 1.0);
      }
      if (s.contains("time_factors"))
        c.time_factors = s["time_factors"].get<std::vector<double>>();
    }
    c.output_dir = j.value("output_dir", std::string());
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const ScenarioConfig& config) {
  return config_json(config).dump(2);
}

std::uint64_t config_digest(const ScenarioConfig& config) {
  // FNV-1a over the canonical dump; an audit fingerprint, not a MAC.
  std::string dump = config_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

ScenarioOutcome run_scenario(const ScenarioConfig& config, Mode mode,
                             std::vector<protocol::DetectionRecord>* records) {
  config.validate();
  ScenarioOutcome out;

  protocol::SiftedFrame key_frame;
  bool have_frame = false;
  if (config.fast_tallies) {
    out.tallies = protocol::simulate_tallies(config.decoy, config.channel, config.seed);
    out.zeros_fraction = protocol::model_zeros_fraction(config.decoy, config.channel);
  } else {
    protocol::SessionResult session = protocol::simulate_session(
        config.decoy, config.channel, config.seed, config.threads, records);
    out.tallies = session.tallies;
    key_frame = protocol::select_level(session.frame, 0);
    protocol::balance_frame(key_frame, config.seed);
    out.zeros_fraction = key_frame.degenerate
                             ? protocol::model_zeros_fraction(config.decoy, config.channel)
                             : key_frame.zeros_fraction_before_flip;
    have_frame = !key_frame.degenerate;
  }
  if (mode == Mode::simulate) return out;

  out.analysis = analysis::analyze(out.tallies, config.decoy, config.channel,
                                   out.zeros_fraction, config.f_ec_assumed, config.n_max);
  if (out.analysis.status != analysis::Status::ok) {
    out.status = RunStatus::infeasible;
    return out;
  }
  if (mode == Mode::analyze) return out;

  if (config.run_reconciliation && have_frame) {
    out.pipeline.ran = true;
    double estimate =
        std::clamp(out.analysis.key.observed_qber, 1e-3, 0.49);
    cascade::ReconciliationResult rec =
        cascade::cascade_reconcile(key_frame.alice_bits, key_frame.bob_bits, estimate,
                                   config.seed);
    out.pipeline.verified = rec.verified;
    out.pipeline.leaked_bits = rec.leaked_bits;
    out.pipeline.f_ec_measured = cascade::ec_efficiency(
        rec.leaked_bits, key_frame.size(), out.analysis.key.observed_qber);
    if (!rec.verified) {
      out.status = RunStatus::reconciliation_failed;
      return out;
    }

    // Key accounting with the actually disclosed bit count.
    const auto& key = out.analysis.key;
    double raw = static_cast<double>(key.single_photon_bound) *
                     (1.0 - stats::binary_entropy(key.b1_upper)) -
                 static_cast<double>(rec.leaked_bits) -
                 static_cast<double>(key.n_sift) *
                     (1.0 - stats::binary_entropy(key.zeros_fraction));
    out.pipeline.n_sec =
        raw > 0.0 ? static_cast<std::uint64_t>(std::floor(raw)) : 0;
    if (out.pipeline.f_ec_measured) out.analysis.key.f_ec = out.pipeline.f_ec_measured;

    if (config.run_amplification) {
      std::size_t n = key_frame.size();
      std::size_t m = static_cast<std::size_t>(out.pipeline.n_sec);
      toeplitz::ToeplitzSpec spec;
      spec.input_length = n;
      spec.output_length = m;
      if (m > 0) {
        rng::Stream seed_stream(config.seed, rng::Domain::toeplitz, 0);
        spec.diagonal_seed = BitVector::random(n + m - 1, seed_stream);
        out.pipeline.alice_key = toeplitz::toeplitz_hash(key_frame.alice_bits, spec);
        out.pipeline.bob_key = toeplitz::toeplitz_hash(rec.corrected_bob_bits, spec);
      }
    }
  }
  return out;
}

std::string render_report(const ScenarioConfig& config, const ScenarioOutcome& outcome,
                          ReportFormat format) {
  std::vector<std::pair<std::string, std::string>> rows;
  auto add = [&](const std::string& k, const std::string& v) { rows.emplace_back(k, v); };
  auto add_num = [&](const std::string& k, double v) { add(k, num(v)); };
  auto add_int = [&](const std::string& k, std::uint64_t v) { add(k, std::to_string(v)); };

  add("schema_version", "1");
  add("scenario", config.name);
  add_int("seed", config.seed);
  char digest[20];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(config_digest(config)));
  add("config_digest", digest);
  add_num("epsilon", config.decoy.epsilon);
  add_int("n_max", static_cast<std::uint64_t>(config.n_max));
  add_int("cycles", outcome.tallies.clock_cycles);
  static const char* level_names[] = {"mu0", "mu1", "mu2"};
  for (int j = 0; j < protocol::kLevels; ++j) {
    std::string tag = level_names[j];
    add_int("pulses_" + tag, outcome.tallies.pulses_sent[j]);
    add_int("sifted_" + tag, outcome.tallies.sifted_detections[j]);
    add_int("errors_" + tag, outcome.tallies.sifted_errors[j]);
  }

  const char* status = outcome.status == RunStatus::ok
                           ? "ok"
                           : (outcome.status == RunStatus::infeasible
                                  ? "inconsistent"
                                  : "reconciliation_failed");
  add("status", status);

  if (outcome.status != RunStatus::ok || outcome.analysis.bounds.epsilon_budget > 0.0) {
    const auto& b = outcome.analysis.bounds;
    for (int j = 0; j < protocol::kLevels; ++j) {
      std::string tag = level_names[j];
      add_num("y_" + tag + "_lower", b.detection_intervals[j].lower);
      add_num("y_" + tag + "_upper", b.detection_intervals[j].upper);
    }
    add_num("epsilon_budget", b.epsilon_budget);
    if (outcome.status != RunStatus::infeasible) {
      add_num("y1_lower", b.y1_lower);
      add_num("y0_lower", b.y0_interval.lower);
      add_num("y0_upper", b.y0_interval.upper);
      const auto& k = outcome.analysis.key;
      add_int("n_sift", k.n_sift);
      add_num("qber", k.observed_qber);
      add_num("zeros_fraction", k.zeros_fraction);
      add_int("s", k.single_photon_bound);
      add_num("b1_upper", k.b1_upper);
      add_num("f_ec", k.f_ec.value_or(0.0));
      add_int("n_sec", k.n_sec);
      add_int("n_sec_clamped", k.n_sec_clamped ? 1 : 0);
      add_num("security_failure_probability", k.security_failure_probability);
      add_num("beamsplitter_fraction", outcome.analysis.beamsplitter_fraction);
      add_int("beamsplitter_n_sec", outcome.analysis.beamsplitter_n_sec);
    }
  }
  if (outcome.pipeline.ran) {
    add_int("pipeline_verified", outcome.pipeline.verified ? 1 : 0);
    add_int("leaked_bits", outcome.pipeline.leaked_bits);
    if (outcome.pipeline.f_ec_measured)
      add_num("f_ec_measured", *outcome.pipeline.f_ec_measured);
    add_int("pipeline_n_sec", outcome.pipeline.n_sec);
    add_int("final_key_bits", outcome.pipeline.alice_key.size());
  }

  std::string text;
  for (const auto& [k, v] : rows) {
    text += k;
    text += format == ReportFormat::csv ? "," : " ";
    text += v;
    text += '\n';
  }
  if (format == ReportFormat::csv) text.insert(0, "key,value\n");
  return text;
}

std::string render_key_file(const ScenarioConfig& config, const BitVector& key) {
  char header[120];
  std::snprintf(header, sizeof header, "# n_sec=%zu epsilon_budget=%.3g config=fnv1a:%016llx\n",
                key.size(), 6.0 * config.decoy.epsilon,
                static_cast<unsigned long long>(config_digest(config)));
  std::string text = header;
  static const char* hex = "0123456789abcdef";
  std::size_t bytes = (key.size() + 7) / 8;
  for (std::size_t b = 0; b < bytes; ++b) {
    unsigned value = 0;
    for (unsigned bit = 0; bit < 8; ++bit) {
      std::size_t i = b * 8 + bit;
      value = (value << 1) | (i < key.size() && key.get(i) ? 1u : 0u);
    }
    text += hex[value >> 4];
    text += hex[value & 0xF];
  }
  text += '\n';
  return text;
}

std::vector<analysis::SweepPoint> scenario_sweep_distance(const ScenarioConfig& config,
                                                          const ScenarioOutcome& outcome) {
  const auto& spec = config.distance_sweep;
  std::vector<double> deltas;
  if (spec.enabled) {
    for (double d = spec.from_km; d <= spec.to_km + 1e-9; d += spec.step_km)
      deltas.push_back(config.channel.fiber_length_km - d);
  } else {
    for (double d = -20.0; d <= 20.0 + 1e-9; d += 1.0) deltas.push_back(d);
  }
  return analysis::sweep_distance(outcome.tallies, config.decoy, config.channel,
                                  outcome.zeros_fraction, config.f_ec_assumed,
                                  config.n_max, deltas);
}

std::vector<analysis::SweepPoint> scenario_sweep_time(const ScenarioConfig& config,
                                                      const ScenarioOutcome& outcome) {
  std::vector<double> factors = config.time_factors;
  if (factors.empty()) factors = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  return analysis::sweep_time(outcome.tallies, config.decoy, config.channel,
                              outcome.zeros_fraction, config.f_ec_assumed, config.n_max,
                              factors);
}

std::string render_figure_csv(const std::string& figure_id,
                              const std::vector<analysis::SweepPoint>& points) {
  std::string text;
  if (figure_id == "fig2") {
    text = "distance_km,rate_bps\n";
    for (const auto& p : points) text += num(p.x) + "," + num(p.rate_bps) + "\n";
  } else if (figure_id == "fig3") {
    text = "time_s,y1_lower,b1_upper,rate_bps\n";
    for (const auto& p : points)
      text += num(p.x) + "," + num(p.y1_lower) + "," + num(p.b1_upper) + "," +
              num(p.rate_bps) + "\n";
  } else {
    throw std::invalid_argument("render_figure_csv: unknown figure id " + figure_id);
  }
  return text;
}

} // namespace dsqkd::scenario
