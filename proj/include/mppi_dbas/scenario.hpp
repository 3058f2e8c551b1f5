#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mppi_dbas/dynamics.hpp"
#include "mppi_dbas/safety.hpp"

namespace mppi_dbas
{

struct PathSample
{
  Point2 position;
  double heading{0.0};
  double speed{0.0};
  double arc_length{0.0};
};

struct NearestPathPoint
{
  std::size_t index{0};
  double distance{0.0};
};

class ReferencePath
{
public:
  ReferencePath() = default;
  /// Throws std::invalid_argument unless arc length is strictly increasing and speeds are >= 0.
  explicit ReferencePath(std::vector<PathSample> samples);

  std::span<const PathSample> samples() const {return samples_;}
  std::size_t size() const {return samples_.size();}
  const PathSample & operator[](std::size_t i) const {return samples_[i];}
  double total_length() const {return samples_.empty() ? 0.0 : samples_.back().arc_length;}

  /// Exact nearest sample by linear scan.
  NearestPathPoint nearest(const Point2 & p) const;

private:
  std::vector<PathSample> samples_;
};

/// Straight segment along +x from the origin, then a left-turning semicircle
/// tangent to it, sampled every `spacing` metres (the end point is always included).
ReferencePath build_line_semicircle_path(
  double line_length, double radius, double ref_speed, double spacing);

/// Diagonal control weighting of the quadratic objective.
struct ControlWeight
{
  double steer{0.0};
  double accel{0.0};

  bool operator==(const ControlWeight &) const = default;
};

struct CostParams
{
  double q_pos{1.0};
  double q_heading{1.0};
  double q_speed{1.0};
  double terminal_pos{1.0};
  double terminal_heading{1.0};
  double terminal_speed{1.0};
  ControlWeight control_weight{};

  bool operator==(const CostParams &) const = default;
  void validate() const;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// q(x) = q_pos d^2 + q_heading dtheta^2 + q_speed (v - v_ref)^2 against the nearest path sample.
double running_cost(const VehicleState & state, const ReferencePath & path, const CostParams & params);

/// Same form as running_cost with the terminal weights.
double terminal_cost(const VehicleState & state, const ReferencePath & path, const CostParams & params);

/// 0.5 v^T R v with the diagonal control weighting.
double control_effort(const VehicleControl & control, const CostParams & params);

enum class OutcomeClass
{
  Success,
  FailStop,
  FailCollision,
};

std::string_view to_string(OutcomeClass cls);
OutcomeClass outcome_class_from_string(std::string_view name);

struct Outcome
{
  OutcomeClass cls{OutcomeClass::FailStop};
  std::size_t steps{0};
  double avg_speed{0.0};
  double avg_position_error{0.0};

  bool operator==(const Outcome &) const = default;
};

struct OutcomeLimits
{
  double v_stall{0.3};
  double t_stall{3.0};
  std::size_t max_steps{600};
  double goal_tolerance{1.0};  // path end counts as reached within this arc length

  bool operator==(const OutcomeLimits &) const = default;
  void validate() const;
};

/// One executed state and its worst constraint margin.
struct ExecutedState
{
  VehicleState state;
  double min_margin{0.0};
};

/// Incremental form of classify_outcome so a simulation can stop as soon as the
/// outcome is decided. Collision beats stop beats success.
class OutcomeTracker
{
public:
  OutcomeTracker(const ReferencePath & path, const OutcomeLimits & limits, double dt);

  /// Feeds the state at row index `rows_seen()`. Returns the class once decided.
  std::optional<OutcomeClass> observe(const ExecutedState & row);
  std::size_t rows_seen() const {return rows_;}

private:
  const ReferencePath & path_;
  OutcomeLimits limits_;
  std::size_t stall_steps_needed_;
  std::size_t stall_run_{0};
  std::size_t rows_{0};
};

/// Classifies an executed run and computes its mean speed and mean distance to the path.
/// `run` holds every executed state including the initial one.
Outcome classify_outcome(
  std::span<const ExecutedState> run, const ReferencePath & path, const OutcomeLimits & limits,
  double dt);

struct PathSpec
{
  double line_length{30.0};
  double radius{20.0};
  double ref_speed{5.0};
  double spacing{0.5};

  bool operator==(const PathSpec &) const = default;
};

/// Everything the controller and the plant share about one experiment.
struct Scenario
{
  VehicleParams vehicle{};
  VehicleState initial_state{};
  PathSpec path_spec{};
  ReferencePath path;
  ConstraintSet constraints;
  BarrierConfig barrier{};
  CostParams costs{};
  OutcomeLimits limits{};

  /// Rebuilds `path` from `path_spec`.
  void build_path();
  void validate() const;
};

}  // namespace mppi_dbas
