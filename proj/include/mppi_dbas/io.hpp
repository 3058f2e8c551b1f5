#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mppi_dbas/config.hpp"
#include "mppi_dbas/simharness.hpp"

namespace mppi_dbas
{

/// Raised for unreadable inputs or unwritable outputs.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char * kTrajectoryHeader =
  "step,t,x,y,theta,v,steer,accel,w,s_e,c_b_star,min_margin,rho";

/// Shortest decimal that round-trips to the same double; "inf"/"-inf"/"nan" otherwise.
std::string format_double(double value);
double parse_double(const std::string & text);

std::string trajectory_csv(const RunRecord & record);
/// Reads the rows of a trajectory.csv back (seed, mode and outcome are not stored there).
std::vector<RunRow> parse_trajectory_csv(const std::string & text);

std::string outcome_json(const RunRecord & record);
std::string summary_json(const BatchResult & batch, std::span<const std::uint64_t> seeds);

void write_text(const std::filesystem::path & file, const std::string & text);
std::string read_text(const std::filesystem::path & file);

/// Writes trajectory.csv and outcome.json into `dir`.
void write_run(const std::filesystem::path & dir, const RunRecord & record);

/// Per-run directory inside a batch output: <out>/<mode>/seed_<seed>.
std::filesystem::path batch_run_dir(
  const std::filesystem::path & out, ControllerMode mode, std::uint64_t seed);

/// Writes plot-ready CSVs for a run or batch directory produced by the CLI:
/// path.csv (executed positions), reference.csv, obstacles.csv and bands.csv
/// (per-step mean/std of v, steer and w per mode). Returns the files written.
std::vector<std::filesystem::path> export_plot_data(
  const std::filesystem::path & input, const std::filesystem::path & out);

}  // namespace mppi_dbas
