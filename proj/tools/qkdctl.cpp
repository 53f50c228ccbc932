// qkdctl: decoy-state BB84 session simulator, channel security analysis,
// and key post-processing pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "dsqkd/optimizer.hpp"
#include "dsqkd/scenario.hpp"

namespace fs = std::filesystem;
using namespace dsqkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitReconciliation = 4;
constexpr int kExitIo = 5;

struct CommonArgs {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "kv";
  int threads = 0;
  bool fast = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_preset_positional = false) {
  if (with_preset_positional)
    cmd->add_option("name", args.preset_name, "preset name")->required();
  else
    cmd->add_option("--preset", args.preset_name, "named preset configuration");
  cmd->add_option("--config", args.config_path, "path to a scenario config (JSON)");
  cmd->add_option("--seed", args.seed, "override the session seed");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--format", args.format, "report format: kv or csv")
      ->check(CLI::IsMember({"kv", "csv"}));
  cmd->add_option("--threads", args.threads, "simulation worker threads");
  cmd->add_flag("--fast", args.fast, "aggregated tallies instead of the pulse-level loop");
  cmd->add_flag("--print-config", args.print_config, "print the resolved config and exit");
}

scenario::ScenarioConfig resolve_config(const CommonArgs& args) {
  if (args.config_path.empty() == args.preset_name.empty())
    throw scenario::ConfigError("provide exactly one of --config or a preset");
  scenario::ScenarioConfig config = args.config_path.empty()
                                        ? presets::by_name(args.preset_name)
                                        : scenario::load_config(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.threads > 0) config.threads = args.threads;
  if (args.fast) config.fast_tallies = true;
  if (!args.out_dir.empty()) {
    config.output_dir = args.out_dir;
  } else if (config.output_dir.empty()) {
    const char* env = std::getenv("QKDCTL_OUT");
    config.output_dir = env && *env ? env : ".";
  }
  return config;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path.string());
  out << content;
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

scenario::ReportFormat report_format(const CommonArgs& args) {
  return args.format == "csv" ? scenario::ReportFormat::csv : scenario::ReportFormat::kv;
}

int finish_run(const scenario::ScenarioConfig& config,
               const scenario::ScenarioOutcome& outcome, const CommonArgs& args,
               bool with_key, bool with_figures) {
  fs::create_directories(config.output_dir);
  fs::path dir(config.output_dir);
  write_file(dir / "report.txt", scenario::render_report(config, outcome, report_format(args)));

  if (outcome.status == scenario::RunStatus::infeasible) {
    std::cerr << "analysis: observations inconsistent at confidence epsilon\n";
    return kExitInfeasible;
  }
  if (outcome.status == scenario::RunStatus::reconciliation_failed) {
    std::cerr << "reconciliation failed verification\n";
    return kExitReconciliation;
  }

  if (with_key && outcome.pipeline.ran && outcome.pipeline.alice_key.size() > 0)
    write_file(dir / "key.hex",
               scenario::render_key_file(config, outcome.pipeline.alice_key));

  if (with_figures && config.distance_sweep.enabled) {
    auto distance = scenario::scenario_sweep_distance(config, outcome);
    std::ostringstream sweep_csv;
    analysis::write_sweep_csv(sweep_csv, distance);
    write_file(dir / "sweep_distance.csv", sweep_csv.str());
    write_file(dir / "fig2.csv", scenario::render_figure_csv("fig2", distance));
  }
  if (with_figures && !config.time_factors.empty()) {
    auto time = scenario::scenario_sweep_time(config, outcome);
    std::ostringstream time_csv;
    analysis::write_sweep_csv(time_csv, time);
    write_file(dir / "sweep_time.csv", time_csv.str());
    write_file(dir / "fig3.csv", scenario::render_figure_csv("fig3", time));
  }

  std::cout << scenario::render_report(config, outcome, report_format(args));
  return kExitOk;
}

int run_command(const CommonArgs& args, scenario::Mode mode, bool with_key,
                bool with_figures) {
  scenario::ScenarioConfig config = resolve_config(args);
  if (args.print_config) {
    std::cout << scenario::config_to_json(config) << "\n";
    return kExitOk;
  }
  scenario::ScenarioOutcome outcome = scenario::run_scenario(config, mode);
  return finish_run(config, outcome, args, with_key, with_figures);
}

int run_sweep(const CommonArgs& args, const std::string& which) {
  scenario::ScenarioConfig config = resolve_config(args);
  if (args.print_config) {
    std::cout << scenario::config_to_json(config) << "\n";
    return kExitOk;
  }
  scenario::ScenarioOutcome outcome =
      scenario::run_scenario(config, scenario::Mode::analyze);
  fs::create_directories(config.output_dir);
  fs::path dir(config.output_dir);
  write_file(dir / "report.txt", scenario::render_report(config, outcome, report_format(args)));
  if (outcome.status != scenario::RunStatus::ok) {
    std::cerr << "analysis: observations inconsistent at confidence epsilon\n";
    return kExitInfeasible;
  }
  if (which == "distance") {
    auto points = scenario::scenario_sweep_distance(config, outcome);
    std::ostringstream csv;
    analysis::write_sweep_csv(csv, points);
    write_file(dir / "sweep_distance.csv", csv.str());
    write_file(dir / "fig2.csv", scenario::render_figure_csv("fig2", points));
  } else {
    auto points = scenario::scenario_sweep_time(config, outcome);
    std::ostringstream csv;
    analysis::write_sweep_csv(csv, points);
    write_file(dir / "sweep_time.csv", csv.str());
    write_file(dir / "fig3.csv", scenario::render_figure_csv("fig3", points));
  }
  std::cout << "sweep written to " << dir.string() << "\n";
  return kExitOk;
}

int run_simulate(const CommonArgs& args, const std::string& detections_path) {
  scenario::ScenarioConfig config = resolve_config(args);
  if (args.print_config) {
    std::cout << scenario::config_to_json(config) << "\n";
    return kExitOk;
  }
  std::vector<protocol::DetectionRecord> records;
  scenario::ScenarioOutcome outcome = scenario::run_scenario(
      config, scenario::Mode::simulate, detections_path.empty() ? nullptr : &records);
  fs::create_directories(config.output_dir);
  fs::path dir(config.output_dir);
  write_file(dir / "report.txt", scenario::render_report(config, outcome, report_format(args)));
  if (!detections_path.empty()) {
    std::ostringstream csv;
    protocol::write_detection_csv(csv, records);
    write_file(dir / detections_path, csv.str());
  }
  std::cout << scenario::render_report(config, outcome, report_format(args));
  return kExitOk;
}

int run_optimize(const CommonArgs& args) {
  scenario::ScenarioConfig config = resolve_config(args);
  if (args.print_config) {
    std::cout << scenario::config_to_json(config) << "\n";
    return kExitOk;
  }
  optimizer::OptimizationResult best = optimizer::optimize(
      config.channel, config.decoy.duration_s, config.decoy.clock_rate_hz,
      config.decoy.epsilon, config.f_ec_assumed, {}, {config.decoy});
  fs::create_directories(config.output_dir);
  fs::path dir(config.output_dir);
  std::ostringstream trace;
  optimizer::write_trace_csv(trace, best.search_trace);
  write_file(dir / "optimize_trace.csv", trace.str());

  scenario::ScenarioConfig tuned = config;
  tuned.decoy = best.best_config;
  tuned.name = config.name + "-optimized";
  write_file(dir / "best_config.json", scenario::config_to_json(tuned) + "\n");
  std::cout << "best predicted rate " << best.predicted_rate << " bps after "
            << best.evaluations << " evaluations\n"
            << "mu = [" << best.best_config.intensities[0] << ", "
            << best.best_config.intensities[1] << ", " << best.best_config.intensities[2]
            << "], p = [" << best.best_config.send_probabilities[0] << ", "
            << best.best_config.send_probabilities[1] << ", "
            << best.best_config.send_probabilities[2] << "]\n";
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"decoy-state BB84 simulation and security analysis"};
  app.require_subcommand(1);
  app.footer("exit codes: 0 ok, 1 internal, 2 config, 3 analysis infeasible, "
             "4 reconciliation failed, 5 I/O");

  CommonArgs sim_args, analyze_args, pipe_args, swd_args, swt_args, opt_args, preset_args;
  std::string detections_path;

  auto* sim = app.add_subcommand("simulate", "run the session simulation only");
  add_common(sim, sim_args);
  sim->add_option("--export-detections", detections_path,
                  "also write the sifted detection log (CSV filename)");

  auto* analyze = app.add_subcommand("analyze", "simulate and run the channel analysis");
  add_common(analyze, analyze_args);

  auto* pipeline = app.add_subcommand(
      "pipeline", "full run: simulate, sift, reconcile, analyze, amplify");
  add_common(pipeline, pipe_args);

  auto* sweep_d = app.add_subcommand("sweep-distance", "secret bit rate vs distance");
  add_common(sweep_d, swd_args);

  auto* sweep_t = app.add_subcommand("sweep-time", "bounds and rate vs acquisition time");
  add_common(sweep_t, swt_args);

  auto* optimize = app.add_subcommand("optimize",
                                      "search intensities and send probabilities");
  add_common(optimize, opt_args);

  auto* preset = app.add_subcommand("preset", "run a bundled scenario end to end");
  add_common(preset, preset_args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(sim_args, detections_path);
    if (analyze->parsed())
      return run_command(analyze_args, scenario::Mode::analyze, false, false);
    if (pipeline->parsed())
      return run_command(pipe_args, scenario::Mode::pipeline, true, true);
    if (sweep_d->parsed()) return run_sweep(swd_args, "distance");
    if (sweep_t->parsed()) return run_sweep(swt_args, "time");
    if (optimize->parsed()) return run_optimize(opt_args);
    if (preset->parsed())
      return run_command(preset_args, scenario::Mode::pipeline, true, true);
  } catch (const scenario::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
