#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mppi_dbas/controller.hpp"
#include "mppi_dbas/scenario.hpp"

namespace mppi_dbas
{

/// One logged row of a closed-loop run. The last row of a run carries the final
/// state with a zero control and rho = NaN.
struct RunRow
{
  std::size_t step{0};
  double t{0.0};
  VehicleState state;
  VehicleControl control;
  double w{0.0};
  double s_e{0.0};
  double c_b_star{0.0};
  double min_margin{0.0};
  double rho{0.0};
};

struct RunRecord
{
  std::uint64_t seed{0};
  ControllerMode mode{ControllerMode::DbasAdaptive};
  std::vector<RunRow> rows;
  Outcome outcome;
  /// Steps at which no sample was safe and the braking fallback was applied.
  std::vector<std::size_t> fallback_steps;
};

/// Closed-loop episode: controller and plant share the same model. Deterministic in `seed`.
RunRecord run_episode(const Scenario & scenario, ControllerConfig config, std::uint64_t seed);

/// Recomputes the outcome of a record from its rows.
Outcome replay_outcome(const RunRecord & record, const Scenario & scenario);

struct Band
{
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation, 0 for a single record
};

using RowField = std::function<double(const RunRow &)>;

/// Per-step mean and sample std over the common prefix of the records.
Band aggregate_bands(std::span<const RunRecord> records, const RowField & field);

struct MetricStats
{
  double mean{0.0};
  double std{0.0};
};

struct BatchSummary
{
  std::string mode;
  std::size_t runs{0};
  std::size_t success{0};
  std::size_t fail_stop{0};
  std::size_t fail_collision{0};
  MetricStats avg_speed;
  MetricStats avg_position_error;
  /// Mean avg position error over runs that did not collide (NaN if there are none).
  double avg_position_error_no_collision{0.0};
  Band v;
  Band steer;
  Band w;
};

BatchSummary summarize(std::string mode, std::span<const RunRecord> records);

struct HarnessFailure
{
  std::string mode;
  std::uint64_t seed{0};
  std::string message;
};

struct BatchResult
{
  std::vector<BatchSummary> summaries;       // one per config, in input order
  std::vector<std::vector<RunRecord>> runs;  // [config][seed order]
  std::vector<HarnessFailure> failures;
};

/// Runs every (config, seed) pair. Exceptions escaping a run are reported as
/// harness failures and the run is left out of its summary.
BatchResult run_batch(
  const Scenario & scenario, std::span<const ControllerConfig> configs,
  std::span<const std::uint64_t> seeds, std::size_t run_workers = 1);

}  // namespace mppi_dbas
