// Command-line front end: single runs, batches and plot-data export.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mppi_dbas/config.hpp"
#include "mppi_dbas/io.hpp"
#include "mppi_dbas/simharness.hpp"

namespace fs = std::filesystem;
using namespace mppi_dbas;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

constexpr const char * kOutputEnv = "MPPI_DBAS_OUTPUT_DIR";

fs::path resolve_output(const std::string & flag, const ExperimentConfig & config)
{
  if (!flag.empty()) {
    return flag;
  }
  if (const char * env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return config.output_dir;
}

std::vector<ControllerMode> parse_modes(const std::string & list)
{
  std::vector<ControllerMode> modes;
  std::stringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (!name.empty()) {
      try {
        modes.push_back(controller_mode_from_string(name));
      } catch (const std::invalid_argument & e) {
        throw ConfigError(std::string("--modes: ") + e.what());
      }
    }
  }
  if (modes.empty()) {
    throw ConfigError("--modes: no mode given");
  }
  return modes;
}

void check_workers(ExperimentConfig & config, std::optional<std::size_t> workers)
{
  if (workers) {
    if (*workers == 0) {
      throw ConfigError("--workers must be >= 1");
    }
    config.controller.workers = *workers;
  }
}

int cmd_run(
  const std::string & config_path, const std::string & mode_name,
  std::optional<std::uint64_t> seed, const std::string & out_flag,
  std::optional<std::size_t> workers)
{
  ExperimentConfig config = load_config(config_path);
  check_workers(config, workers);
  ControllerMode mode = config.modes.front();
  if (!mode_name.empty()) {
    try {
      mode = controller_mode_from_string(mode_name);
    } catch (const std::invalid_argument & e) {
      throw ConfigError(std::string("--mode: ") + e.what());
    }
  }
  const std::uint64_t run_seed = seed.value_or(config.seeds.front());
  const fs::path out = resolve_output(out_flag, config);

  const RunRecord record = run_episode(config.scenario(), config.controller_for(mode), run_seed);
  write_text(out / "config.json", serialize_config(config));
  write_run(out, record);
  std::cout << to_string(mode) << " seed " << run_seed << ": " << to_string(record.outcome.cls)
            << " after " << record.outcome.steps << " steps, avg speed "
            << record.outcome.avg_speed << " m/s, avg position error "
            << record.outcome.avg_position_error << " m\n";
  return kExitOk;
}

int cmd_batch(
  const std::string & config_path, const std::string & modes_flag, const std::string & out_flag,
  std::optional<std::size_t> workers)
{
  ExperimentConfig config = load_config(config_path);
  check_workers(config, workers);
  if (!modes_flag.empty()) {
    config.modes = parse_modes(modes_flag);
  }
  const fs::path out = resolve_output(out_flag, config);

  std::vector<ControllerConfig> configs;
  for (auto mode : config.modes) {
    configs.push_back(config.controller_for(mode));
  }
  const BatchResult batch = run_batch(config.scenario(), configs, config.seeds);

  write_text(out / "config.json", serialize_config(config));
  for (const auto & runs : batch.runs) {
    for (const auto & record : runs) {
      write_run(batch_run_dir(out, record.mode, record.seed), record);
    }
  }
  write_text(out / "summary.json", summary_json(batch, config.seeds));

  for (const auto & s : batch.summaries) {
    std::cout << s.mode << ": success " << s.success << ", fail(stop) " << s.fail_stop
              << ", fail(collision) " << s.fail_collision << ", avg vel " << s.avg_speed.mean
              << " m/s, avg pos error " << s.avg_position_error.mean << " m\n";
  }
  for (const auto & f : batch.failures) {
    std::cerr << "harness failure: " << f.mode << " seed " << f.seed << ": " << f.message << "\n";
  }
  return kExitOk;
}

int cmd_export_plots(const std::string & input, const std::string & out_flag)
{
  fs::path out = out_flag;
  if (out.empty()) {
    const char * env = std::getenv(kOutputEnv);
    out = (env != nullptr && *env != '\0') ? fs::path(env) : fs::path(input) / "plots";
  }
  for (const auto & file : export_plot_data(input, out)) {
    std::cout << file.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"MPPI with discrete barrier states: closed-loop runs and batches"};
  app.require_subcommand(1);

  std::string config_path;
  std::string mode;
  std::string modes;
  std::string out;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;

  auto * run = app.add_subcommand("run", "Run one closed-loop episode");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--mode", mode, "dbas-adaptive | dbas-fixed | baseline-indicator");
  run->add_option("--seed", seed, "Sampling seed (default: first configured seed)");
  run->add_option("--out", out, "Output directory");
  run->add_option("--workers", workers, "Rollout worker threads");

  auto * batch = app.add_subcommand("batch", "Run every mode over every configured seed");
  batch->add_option("config", config_path, "Experiment config file")->required();
  batch->add_option("--modes", modes, "Comma-separated controller modes");
  batch->add_option("--out", out, "Output directory");
  batch->add_option("--workers", workers, "Rollout worker threads");

  auto * export_plots = app.add_subcommand("export-plots", "Write plot-ready CSVs for a run or batch");
  export_plots->add_option("dir", input, "Run or batch output directory")->required();
  export_plots->add_option("--out", out, "Output directory (default: <dir>/plots)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      return cmd_run(config_path, mode, seed, out, workers);
    }
    if (*batch) {
      return cmd_batch(config_path, modes, out, workers);
    }
    return cmd_export_plots(input, out);
  } catch (const ConfigError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
