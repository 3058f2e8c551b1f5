#include "mppi_dbas/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mppi_dbas
{

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double value)
{
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return {buffer, result.ptr};
}

double parse_double(const std::string & text)
{
  if (text == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (text == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (text == "-inf") {
    return -std::numeric_limits<double>::infinity();
  }
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + text + "'");
  }
  return value;
}

std::string trajectory_csv(const RunRecord & record)
{
  std::string out = std::string(kTrajectoryHeader) + "\n";
  for (const auto & r : record.rows) {
    out += std::to_string(r.step);
    for (double v : {r.t, r.state.x, r.state.y, r.state.theta, r.state.v, r.control.steer,
        r.control.accel, r.w, r.s_e, r.c_b_star, r.min_margin, r.rho})
    {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<RunRow> parse_trajectory_csv(const std::string & text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw IoError("trajectory CSV has an unexpected header");
  }
  std::vector<RunRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != 13) {
      throw IoError("trajectory CSV line " + std::to_string(line_no) + ": expected 13 columns");
    }
    RunRow r;
    r.step = static_cast<std::size_t>(std::stoull(cells[0]));
    double * targets[] = {&r.t, &r.state.x, &r.state.y, &r.state.theta, &r.state.v,
      &r.control.steer, &r.control.accel, &r.w, &r.s_e, &r.c_b_star, &r.min_margin, &r.rho};
    for (std::size_t i = 0; i < 12; ++i) {
      *targets[i] = parse_double(cells[i + 1]);
    }
    rows.push_back(r);
  }
  return rows;
}

namespace
{

json finite_or_null(double value)
{
  return std::isfinite(value) ? json(value) : json(nullptr);
}

}  // namespace

std::string outcome_json(const RunRecord & record)
{
  json doc = {
    {"seed", record.seed},
    {"mode", to_string(record.mode)},
    {"class", to_string(record.outcome.cls)},
    {"steps", record.outcome.steps},
    {"avg_speed", record.outcome.avg_speed},
    {"avg_position_error", record.outcome.avg_position_error},
    {"fallback_steps", record.fallback_steps}};
  return doc.dump(2) + "\n";
}

std::string summary_json(const BatchResult & batch, std::span<const std::uint64_t> seeds)
{
  json modes = json::array();
  for (const auto & s : batch.summaries) {
    modes.push_back({
        {"mode", s.mode},
        {"runs", s.runs},
        {"success", s.success},
        {"fail_stop", s.fail_stop},
        {"fail_collision", s.fail_collision},
        {"avg_vel", {{"mean", finite_or_null(s.avg_speed.mean)},
          {"std", finite_or_null(s.avg_speed.std)}}},
        {"avg_pos_error", {{"mean", finite_or_null(s.avg_position_error.mean)},
          {"std", finite_or_null(s.avg_position_error.std)}}},
        {"avg_pos_error_no_collision", finite_or_null(s.avg_position_error_no_collision)}});
  }
  json failures = json::array();
  for (const auto & f : batch.failures) {
    failures.push_back({{"mode", f.mode}, {"seed", f.seed}, {"message", f.message}});
  }
  json doc = {
    {"seeds", std::vector<std::uint64_t>(seeds.begin(), seeds.end())},
    {"modes", modes},
    {"harness_failures", failures}};
  return doc.dump(2) + "\n";
}

void write_text(const fs::path & file, const std::string & text)
{
  std::error_code ec;
  if (file.has_parent_path()) {
    fs::create_directories(file.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + file.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) {
    throw IoError("cannot write " + file.string());
  }
}

std::string read_text(const fs::path & file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + file.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_run(const fs::path & dir, const RunRecord & record)
{
  write_text(dir / "trajectory.csv", trajectory_csv(record));
  write_text(dir / "outcome.json", outcome_json(record));
}

fs::path batch_run_dir(const fs::path & out, ControllerMode mode, std::uint64_t seed)
{
  return out / std::string(to_string(mode)) / ("seed_" + std::to_string(seed));
}

namespace
{

struct LoadedRun
{
  std::string mode;
  std::uint64_t seed{0};
  RunRecord record;
};

LoadedRun load_run(const fs::path & dir)
{
  LoadedRun run;
  run.record.rows = parse_trajectory_csv(read_text(dir / "trajectory.csv"));
  try {
    const auto outcome = json::parse(read_text(dir / "outcome.json"));
    run.mode = outcome.at("mode").get<std::string>();
    run.seed = outcome.at("seed").get<std::uint64_t>();
  } catch (const json::exception & e) {
    throw IoError("malformed " + (dir / "outcome.json").string() + ": " + e.what());
  }
  return run;
}

}  // namespace

std::vector<fs::path> export_plot_data(const fs::path & input, const fs::path & out)
{
  if (!fs::is_directory(input)) {
    throw IoError("input directory " + input.string() + " does not exist");
  }
  // a run inside a batch shares the config.json at the batch root, two levels up
  const fs::path absolute = fs::absolute(input).lexically_normal();
  fs::path config_file = absolute / "config.json";
  for (const auto & dir : {absolute.parent_path(), absolute.parent_path().parent_path()}) {
    if (!fs::exists(config_file) && fs::exists(dir / "config.json")) {
      config_file = dir / "config.json";
    }
  }
  ExperimentConfig config;
  try {
    config = parse_config(read_text(config_file));
  } catch (const ConfigError & e) {
    throw IoError(std::string("config.json in the input directory is invalid: ") + e.what());
  }

  // group runs by mode, keeping the mode order of the batch
  std::vector<std::pair<std::string, std::vector<LoadedRun>>> groups;
  if (fs::exists(input / "summary.json")) {
    json summary;
    try {
      summary = json::parse(read_text(input / "summary.json"));
      for (const auto & m : summary.at("modes")) {
        const auto mode = controller_mode_from_string(m.at("mode").get<std::string>());
        std::vector<LoadedRun> runs;
        for (const auto & seed : summary.at("seeds")) {
          const auto dir = batch_run_dir(input, mode, seed.get<std::uint64_t>());
          if (fs::exists(dir / "trajectory.csv")) {
            runs.push_back(load_run(dir));
          }
        }
        groups.emplace_back(std::string(to_string(mode)), std::move(runs));
      }
    } catch (const json::exception & e) {
      throw IoError("malformed summary.json: " + std::string(e.what()));
    }
  } else {
    auto run = load_run(input);
    std::string mode = run.mode;
    groups.emplace_back(mode, std::vector<LoadedRun>{std::move(run)});
  }

  std::vector<fs::path> written;
  auto emit = [&](const std::string & name, const std::string & text) {
      write_text(out / name, text);
      written.push_back(out / name);
    };

  std::string path_csv = "mode,seed,step,x,y\n";
  for (const auto & [mode, runs] : groups) {
    for (const auto & run : runs) {
      for (const auto & row : run.record.rows) {
        path_csv += mode + "," + std::to_string(run.seed) + "," + std::to_string(row.step) + "," +
          format_double(row.state.x) + "," + format_double(row.state.y) + "\n";
      }
    }
  }
  emit("path.csv", path_csv);

  const Scenario scenario = config.scenario();
  std::string reference_csv = "index,s,x,y,heading,speed\n";
  for (std::size_t i = 0; i < scenario.path.size(); ++i) {
    const auto & p = scenario.path[i];
    reference_csv += std::to_string(i) + "," + format_double(p.arc_length) + "," +
      format_double(p.position.x) + "," + format_double(p.position.y) + "," +
      format_double(p.heading) + "," + format_double(p.speed) + "\n";
  }
  emit("reference.csv", reference_csv);

  std::string obstacles_csv = "index,cx,cy,radius\n";
  for (std::size_t i = 0; i < config.obstacles.size(); ++i) {
    const auto & o = config.obstacles[i];
    obstacles_csv += std::to_string(i) + "," + format_double(o.center.x) + "," +
      format_double(o.center.y) + "," + format_double(o.radius) + "\n";
  }
  emit("obstacles.csv", obstacles_csv);

  std::string bands_csv = "mode,step,t,v_mean,v_std,steer_mean,steer_std,w_mean,w_std\n";
  for (const auto & [mode, runs] : groups) {
    if (runs.empty()) {
      continue;
    }
    std::vector<RunRecord> records;
    for (const auto & run : runs) {
      records.push_back(run.record);
    }
    const auto v = aggregate_bands(records, [](const RunRow & r) {return r.state.v;});
    const auto steer = aggregate_bands(records, [](const RunRow & r) {return r.control.steer;});
    const auto w = aggregate_bands(records, [](const RunRow & r) {return r.w;});
    for (std::size_t k = 0; k < v.mean.size(); ++k) {
      bands_csv += mode + "," + std::to_string(k) + "," + format_double(records[0].rows[k].t);
      for (double value : {v.mean[k], v.std[k], steer.mean[k], steer.std[k], w.mean[k], w.std[k]}) {
        bands_csv += "," + format_double(value);
      }
      bands_csv += "\n";
    }
  }
  emit("bands.csv", bands_csv);
  return written;
}

}  // namespace mppi_dbas
