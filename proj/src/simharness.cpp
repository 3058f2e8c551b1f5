#include "mppi_dbas/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "mppi_dbas/parallel.hpp"

namespace mppi_dbas
{

namespace
{

std::vector<ExecutedState> executed_states(const RunRecord & record)
{
  std::vector<ExecutedState> out;
  out.reserve(record.rows.size());
  for (const auto & row : record.rows) {
    out.push_back({row.state, row.min_margin});
  }
  return out;
}

MetricStats stats(std::span<const double> values)
{
  MetricStats s;
  if (values.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) {
      sq += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace

RunRecord run_episode(const Scenario & scenario, ControllerConfig config, std::uint64_t seed)
{
  config.rng_seed = seed;
  config.validate();
  scenario.validate();

  RunRecord record;
  record.seed = seed;
  record.mode = config.mode;

  const double dt = scenario.vehicle.dt;
  AugmentedState plant = make_augmented(
    scenario.initial_state, scenario.vehicle, scenario.constraints, scenario.barrier);
  ControlSequence nominal = ControlSequence::zeros(config.horizon);
  ExplorationState exploration = initial_exploration(config);
  OutcomeTracker tracker(scenario.path, scenario.limits, dt);

  for (std::size_t step = 0;; ++step) {
    RunRow row;
    row.step = step;
    row.t = static_cast<double>(step) * dt;
    row.state = plant.nominal;
    row.w = plant.w;
    row.min_margin = min_margin(plant.nominal, scenario.vehicle, scenario.constraints);

    if (tracker.observe({row.state, row.min_margin})) {
      row.s_e = exploration.s_e;
      row.c_b_star = exploration.c_b_star;
      row.rho = std::numeric_limits<double>::quiet_NaN();
      record.rows.push_back(row);
      break;
    }

    try {
      const StepResult result = control_step(plant, nominal, config, scenario, exploration, step);
      row.control = result.applied;
      row.s_e = result.diagnostics.s_e;
      row.c_b_star = result.diagnostics.c_b_star;
      row.rho = result.diagnostics.rho;
      nominal = result.next_nominal;
      exploration = result.exploration;
    } catch (const NoSafeSampleError & e) {
      // fail safe: straight-line braking for this step, keep the warm start
      record.fallback_steps.push_back(step);
      row.control = {0.0, -scenario.vehicle.accel_max};
      row.s_e = exploration.s_e;
      row.c_b_star = exploration.c_b_star;
      row.rho = e.diagnostics().rho;
      nominal = shift_warm_start(nominal);
    }
    record.rows.push_back(row);
    plant = augmented_step(plant, row.control, scenario.vehicle, scenario.constraints, scenario.barrier);
  }

  record.outcome = replay_outcome(record, scenario);
  return record;
}

Outcome replay_outcome(const RunRecord & record, const Scenario & scenario)
{
  const auto states = executed_states(record);
  return classify_outcome(states, scenario.path, scenario.limits, scenario.vehicle.dt);
}

Band aggregate_bands(std::span<const RunRecord> records, const RowField & field)
{
  Band band;
  if (records.empty()) {
    return band;
  }
  std::size_t common = records.front().rows.size();
  for (const auto & r : records) {
    common = std::min(common, r.rows.size());
  }
  band.mean.resize(common);
  band.std.resize(common);
  std::vector<double> column(records.size());
  for (std::size_t k = 0; k < common; ++k) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      column[i] = field(records[i].rows[k]);
    }
    const auto s = stats(column);
    band.mean[k] = s.mean;
    band.std[k] = s.std;
  }
  return band;
}

BatchSummary summarize(std::string mode, std::span<const RunRecord> records)
{
  BatchSummary summary;
  summary.mode = std::move(mode);
  summary.runs = records.size();

  std::vector<double> speeds;
  std::vector<double> errors;
  std::vector<double> errors_no_collision;
  for (const auto & r : records) {
    switch (r.outcome.cls) {
      case OutcomeClass::Success: ++summary.success; break;
      case OutcomeClass::FailStop: ++summary.fail_stop; break;
      case OutcomeClass::FailCollision: ++summary.fail_collision; break;
    }
    speeds.push_back(r.outcome.avg_speed);
    errors.push_back(r.outcome.avg_position_error);
    if (r.outcome.cls != OutcomeClass::FailCollision) {
      errors_no_collision.push_back(r.outcome.avg_position_error);
    }
  }
  summary.avg_speed = stats(speeds);
  summary.avg_position_error = stats(errors);
  summary.avg_position_error_no_collision = stats(errors_no_collision).mean;
  summary.v = aggregate_bands(records, [](const RunRow & row) {return row.state.v;});
  summary.steer = aggregate_bands(records, [](const RunRow & row) {return row.control.steer;});
  summary.w = aggregate_bands(records, [](const RunRow & row) {return row.w;});
  return summary;
}

BatchResult run_batch(
  const Scenario & scenario, std::span<const ControllerConfig> configs,
  std::span<const std::uint64_t> seeds, std::size_t run_workers)
{
  if (seeds.empty()) {
    throw std::invalid_argument("run_batch: at least one seed is required");
  }
  const std::size_t total = configs.size() * seeds.size();
  std::vector<std::optional<RunRecord>> slots(total);
  std::vector<std::string> errors(total);

  parallel_for(total, run_workers, [&](std::size_t i) {
      const auto & config = configs[i / seeds.size()];
      const auto seed = seeds[i % seeds.size()];
      try {
        slots[i] = run_episode(scenario, config, seed);
      } catch (const std::exception & e) {
        errors[i] = e.what();
      }
    });

  BatchResult result;
  result.runs.resize(configs.size());
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t c = i / seeds.size();
    if (slots[i]) {
      result.runs[c].push_back(std::move(*slots[i]));
    } else {
      result.failures.push_back(
        {std::string(to_string(configs[c].mode)), seeds[i % seeds.size()], errors[i]});
    }
  }
  for (std::size_t c = 0; c < configs.size(); ++c) {
    result.summaries.push_back(summarize(std::string(to_string(configs[c].mode)), result.runs[c]));
  }
  return result;
}

}  // namespace mppi_dbas
