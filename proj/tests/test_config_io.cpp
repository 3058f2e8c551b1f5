#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include "mppi_dbas/config.hpp"
#include "mppi_dbas/io.hpp"

namespace fs = std::filesystem;
using namespace mppi_dbas;

namespace
{

// short path and a small controller keep the CLI runs fast
constexpr const char * kSmallConfig = R"({
  "schema_version": 1,
  "initial_state": {"x": 0.0, "y": 0.0, "theta": 0.0, "v": 3.0},
  "path": {"line_length": 12.0, "radius": 6.0, "ref_speed": 4.0, "spacing": 0.5},
  "obstacles": [{"center": [8.0, 3.2], "radius": 1.0}],
  "limits": {"max_steps": 120},
  "controller": {"num_samples": 64, "horizon": 15},
  "modes": ["dbas-adaptive", "baseline-indicator"],
  "seeds": [3, 4]
}
)";

class TempDir
{
public:
  TempDir()
  : path_(fs::temp_directory_path() /
      ("mppi_dbas_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++)))
  {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {fs::remove_all(path_);}
  const fs::path & path() const {return path_;}

private:
  static inline int counter_ = 0;
  fs::path path_;
};

int run_cli(const std::string & args)
{
  const std::string command = std::string(MPPI_DBAS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t line_count(const fs::path & file)
{
  std::istringstream in(read_text(file));
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    n += line.empty() ? 0 : 1;
  }
  return n;
}

std::string config_error(const std::string & text)
{
  try {
    (void)parse_config(text);
  } catch (const ConfigError & e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("shipped configs load and round-trip")
{
  for (const char * name : {"gauntlet.json", "free_space.json"}) {
    CAPTURE(name);
    const auto cfg = load_config(fs::path(MPPI_DBAS_CONFIG_DIR) / name);
    CHECK(parse_config(serialize_config(cfg)) == cfg);
    CHECK(serialize_config(parse_config(serialize_config(cfg))) == serialize_config(cfg));
  }
}

TEST_CASE("round-trip keeps non-default values exactly")
{
  ExperimentConfig cfg;
  cfg.vehicle.dt = 0.05;
  cfg.initial_state = {1.0 / 3.0, -2.5, 0.1, 4.0};
  cfg.obstacles = {{{15.0, 0.1}, 2.0}, {{0.3, 1e-7}, 0.25}};
  cfg.barrier.kind = BarrierKind::ShiftedLog;
  cfg.controller.lambda = 0.123456789012345;
  cfg.controller.sigma_u << 0.1, 0.01, 0.01, 1.5;
  cfg.controller.mode = ControllerMode::BaselineIndicator;
  cfg.modes = {ControllerMode::DbasFixed, ControllerMode::DbasAdaptive};
  cfg.seeds = {0, 18446744073709551615ULL};
  cfg.output_dir = "somewhere/else";
  CHECK(parse_config(serialize_config(cfg)) == cfg);
}

TEST_CASE("defaults fill omitted keys")
{
  const auto cfg = parse_config(R"({"schema_version": 1})");
  CHECK(cfg == ExperimentConfig{});
}

TEST_CASE("config diagnostics name the problem")
{
  CHECK(config_error(R"({"schema_version": 1, "controller": {"lamda": 2}})").find(
      "/controller/lamda") != std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "colour": "red"})").find("unknown key") !=
    std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "vehicle": {"dt": "fast"}})").find(
      "/vehicle/dt") != std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "vehicle": {"dt": -1}})").find("/vehicle") !=
    std::string::npos);
  CHECK(config_error(R"({"vehicle": {}})").find("/schema_version") != std::string::npos);
  CHECK(config_error(R"({"schema_version": 2})").find("schema version") != std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "controller": {"rng_seed": 4}})").find(
      "rng_seed") != std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "modes": ["fast"]})").find("/modes/0") !=
    std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "seeds": [1, -2]})").find("/seeds/1") !=
    std::string::npos);
  CHECK(config_error(R"({"schema_version": 1, "obstacles": [{"center": [1], "radius": 1}]})").find(
      "/obstacles/0/center") != std::string::npos);

  const std::string syntax = config_error("{\n  \"schema_version\": 1,\n  \"vehicle\": {,}\n}");
  CHECK(syntax.find("line 3") != std::string::npos);
}

TEST_CASE("missing config file is an I/O failure")
{
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::ios_base::failure);
}

TEST_CASE("number formatting round-trips")
{
  for (double v : {0.0, 0.1, -2.5, 1.0 / 3.0, 1e-300, 1.7976931348623157e308, 5e-324}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK_THROWS_AS(parse_double("1.0x"), IoError);
}

TEST_CASE("trajectory CSV round-trips every row")
{
  RunRecord record;
  for (std::size_t k = 0; k < 4; ++k) {
    RunRow row;
    row.step = k;
    row.t = 0.1 * static_cast<double>(k);
    row.state = {1.0 / 3.0 * k, -0.7, 0.01, 4.2};
    row.control = {0.05, -1.0};
    row.w = k == 2 ? kUnsafe : 0.25;
    row.s_e = 0.4;
    row.c_b_star = 1e-9;
    row.min_margin = 12.5;
    row.rho = k == 3 ? std::nan("") : 7.0;
    record.rows.push_back(row);
  }
  const auto text = trajectory_csv(record);
  CHECK(text.rfind(std::string(kTrajectoryHeader) + "\n", 0) == 0);
  const auto rows = parse_trajectory_csv(text);
  REQUIRE(rows.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rows[k].state == record.rows[k].state);
    CHECK(rows[k].control == record.rows[k].control);
    CHECK(rows[k].w == record.rows[k].w);
  }
  CHECK(std::isnan(rows[3].rho));
  CHECK(trajectory_csv(RunRecord{0, {}, rows, {}, {}}) == text);
  CHECK_THROWS_AS(parse_trajectory_csv("step,x\n"), IoError);
}

TEST_CASE("CLI: run writes artifacts, is reproducible and maps errors to exit codes")
{
  TempDir tmp;
  const auto config = tmp.path() / "small.json";
  write_text(config, kSmallConfig);
  const auto cfg = load_config(config);

  const auto a = tmp.path() / "a";
  const auto b = tmp.path() / "b";
  const auto c = tmp.path() / "c";
  REQUIRE(run_cli("run " + config.string() + " --seed 7 --out " + a.string()) == 0);
  REQUIRE(run_cli("run " + config.string() + " --seed 7 --out " + b.string()) == 0);
  REQUIRE(run_cli("run " + config.string() + " --seed 7 --workers 4 --out " + c.string()) == 0);
  CHECK(fs::exists(a / "outcome.json"));
  CHECK(load_config(a / "config.json") == cfg);
  CHECK(read_text(a / "trajectory.csv") == read_text(b / "trajectory.csv"));
  CHECK(read_text(a / "trajectory.csv") == read_text(c / "trajectory.csv"));

  // bad config, bad flags
  write_text(tmp.path() / "bad.json", R"({"schema_version": 1, "bogus": 1})");
  CHECK(run_cli("run " + (tmp.path() / "bad.json").string()) == 2);
  CHECK(run_cli("run " + config.string() + " --mode warp --out " + a.string()) == 2);
  CHECK(run_cli("run " + config.string() + " --workers 0 --out " + a.string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run") == 2);
  // unreadable config, unwritable output
  CHECK(run_cli("run " + (tmp.path() / "missing.json").string()) == 3);
  write_text(tmp.path() / "plain_file", "x");
  CHECK(run_cli("run " + config.string() + " --out " + (tmp.path() / "plain_file" / "sub").string()) == 3);
  CHECK(run_cli("export-plots " + (tmp.path() / "nothing_here").string()) == 3);
}

TEST_CASE("CLI: output directory precedence")
{
  TempDir tmp;
  const auto config = tmp.path() / "small.json";
  auto cfg = parse_config(kSmallConfig);
  cfg.output_dir = (tmp.path() / "from_config").string();
  write_text(config, serialize_config(cfg));

  ::unsetenv("MPPI_DBAS_OUTPUT_DIR");
  REQUIRE(run_cli("run " + config.string()) == 0);
  CHECK(fs::exists(tmp.path() / "from_config" / "trajectory.csv"));

  ::setenv("MPPI_DBAS_OUTPUT_DIR", (tmp.path() / "from_env").c_str(), 1);
  REQUIRE(run_cli("run " + config.string()) == 0);
  CHECK(fs::exists(tmp.path() / "from_env" / "trajectory.csv"));

  REQUIRE(run_cli("run " + config.string() + " --out " + (tmp.path() / "from_flag").string()) == 0);
  CHECK(fs::exists(tmp.path() / "from_flag" / "trajectory.csv"));
  ::unsetenv("MPPI_DBAS_OUTPUT_DIR");
}

TEST_CASE("CLI: batch fan-out and plot export")
{
  TempDir tmp;
  const auto config = tmp.path() / "small.json";
  write_text(config, kSmallConfig);
  const auto out = tmp.path() / "batch";
  REQUIRE(run_cli("batch " + config.string() + " --out " + out.string()) == 0);

  std::size_t run_dirs = 0;
  for (const auto & entry : fs::recursive_directory_iterator(out)) {
    run_dirs += entry.path().filename() == "trajectory.csv" ? 1 : 0;
  }
  CHECK(run_dirs == 4);
  CHECK(fs::exists(out / "dbas-adaptive" / "seed_3" / "outcome.json"));
  CHECK(fs::exists(out / "baseline-indicator" / "seed_4" / "trajectory.csv"));
  CHECK(fs::exists(out / "summary.json"));

  REQUIRE(run_cli("batch " + config.string() + " --modes dbas-fixed --out " + (tmp.path() / "one").string()) == 0);
  CHECK(fs::exists(tmp.path() / "one" / "dbas-fixed" / "seed_4"));
  CHECK_FALSE(fs::exists(tmp.path() / "one" / "dbas-adaptive"));
  CHECK(run_cli("batch " + config.string() + " --modes nope --out " + out.string()) == 2);

  // batch export: one band block per mode
  REQUIRE(run_cli("export-plots " + out.string()) == 0);
  const auto plots = out / "plots";
  for (const char * f : {"path.csv", "reference.csv", "obstacles.csv", "bands.csv"}) {
    CHECK(fs::exists(plots / f));
  }
  CHECK(line_count(plots / "obstacles.csv") == 2);
  const auto cfg = parse_config(kSmallConfig);
  CHECK(line_count(plots / "reference.csv") == cfg.scenario().path.size() + 1);

  // single-run export: path rows = steps + 1, zero spread
  const auto run_dir = out / "dbas-adaptive" / "seed_3";
  REQUIRE(run_cli("export-plots " + run_dir.string() + " --out " + (tmp.path() / "p").string()) == 0);
  const auto rows = parse_trajectory_csv(read_text(run_dir / "trajectory.csv"));
  CHECK(line_count(tmp.path() / "p" / "path.csv") == rows.size() + 1);
  CHECK(line_count(tmp.path() / "p" / "bands.csv") == rows.size() + 1);
  std::istringstream bands(read_text(tmp.path() / "p" / "bands.csv"));
  std::string line;
  std::getline(bands, line);
  CHECK(line == "mode,step,t,v_mean,v_std,steer_mean,steer_std,w_mean,w_std");
  while (std::getline(bands, line)) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) {
      cells.push_back(cell);
    }
    REQUIRE(cells.size() == 9);
    CHECK(cells[4] == "0");
    CHECK(cells[6] == "0");
    CHECK(cells[8] == "0");
  }
}
