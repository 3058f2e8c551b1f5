#include "mppi_dbas/scenario.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mppi_dbas
{

ReferencePath::ReferencePath(std::vector<PathSample> samples)
: samples_(std::move(samples))
{
  if (samples_.empty()) {
    throw std::invalid_argument("reference path needs at least one sample");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!(samples_[i].speed >= 0.0)) {
      throw std::invalid_argument("reference speed must be >= 0 at sample " + std::to_string(i));
    }
    if (i > 0 && !(samples_[i].arc_length > samples_[i - 1].arc_length)) {
      throw std::invalid_argument(
              "reference arc length must increase strictly at sample " + std::to_string(i));
    }
  }
}

NearestPathPoint ReferencePath::nearest(const Point2 & p) const
{
  NearestPathPoint best{0, std::numeric_limits<double>::infinity()};
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double dx = p.x - samples_[i].position.x;
    const double dy = p.y - samples_[i].position.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_sq) {
      best_sq = d2;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

ReferencePath build_line_semicircle_path(
  double line_length, double radius, double ref_speed, double spacing)
{
  if (!(line_length > 0.0 && radius > 0.0 && ref_speed > 0.0 && spacing > 0.0)) {
    throw std::invalid_argument("path line_length, radius, ref_speed and spacing must be > 0");
  }
  const double total = line_length + std::numbers::pi * radius;

  auto at = [&](double s) {
      PathSample sample;
      sample.arc_length = s;
      sample.speed = ref_speed;
      if (s <= line_length) {
        sample.position = {s, 0.0};
        sample.heading = 0.0;
      } else {
        // arc centred at (line_length, radius), sweeping from -pi/2 to pi/2
        const double swept = (s - line_length) / radius;
        const double angle = -std::numbers::pi / 2.0 + swept;
        sample.position = {line_length + radius * std::cos(angle), radius + radius * std::sin(angle)};
        sample.heading = swept;
      }
      return sample;
    };

  std::vector<PathSample> samples;
  const auto count = static_cast<std::size_t>(std::floor(total / spacing));
  samples.reserve(count + 2);
  for (std::size_t i = 0; i <= count; ++i) {
    samples.push_back(at(static_cast<double>(i) * spacing));
  }
  if (total - samples.back().arc_length > 1e-9 * spacing) {
    samples.push_back(at(total));
  } else {
    samples.back() = at(total);
  }
  return ReferencePath(std::move(samples));
}

void CostParams::validate() const
{
  for (double w : {q_pos, q_heading, q_speed, terminal_pos, terminal_heading, terminal_speed,
      control_weight.steer, control_weight.accel})
  {
    if (!(std::isfinite(w) && w >= 0.0)) {
      throw std::invalid_argument("cost weights must be finite and >= 0");
    }
  }
}

double wrap_angle(double angle)
{
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) {
    wrapped += 2.0 * std::numbers::pi;
  }
  return wrapped;
}

namespace
{

double tracking_cost(
  const VehicleState & state, const ReferencePath & path, double w_pos, double w_heading,
  double w_speed)
{
  const auto near = path.nearest({state.x, state.y});
  const auto & ref = path[near.index];
  const double heading_error = wrap_angle(state.theta - ref.heading);
  const double speed_error = state.v - ref.speed;
  return w_pos * near.distance * near.distance + w_heading * heading_error * heading_error +
         w_speed * speed_error * speed_error;
}

}  // namespace

double running_cost(const VehicleState & state, const ReferencePath & path, const CostParams & params)
{
  return tracking_cost(state, path, params.q_pos, params.q_heading, params.q_speed);
}

double terminal_cost(const VehicleState & state, const ReferencePath & path, const CostParams & params)
{
  return tracking_cost(
    state, path, params.terminal_pos, params.terminal_heading, params.terminal_speed);
}

double control_effort(const VehicleControl & control, const CostParams & params)
{
  return 0.5 * (params.control_weight.steer * control.steer * control.steer +
         params.control_weight.accel * control.accel * control.accel);
}

std::string_view to_string(OutcomeClass cls)
{
  switch (cls) {
    case OutcomeClass::Success: return "Success";
    case OutcomeClass::FailStop: return "FailStop";
    case OutcomeClass::FailCollision: return "FailCollision";
  }
  return "Unknown";
}

OutcomeClass outcome_class_from_string(std::string_view name)
{
  if (name == "Success") {
    return OutcomeClass::Success;
  }
  if (name == "FailStop") {
    return OutcomeClass::FailStop;
  }
  if (name == "FailCollision") {
    return OutcomeClass::FailCollision;
  }
  throw std::invalid_argument("unknown outcome class '" + std::string(name) + "'");
}

void OutcomeLimits::validate() const
{
  if (!(std::isfinite(v_stall) && v_stall >= 0.0 && std::isfinite(t_stall) && t_stall > 0.0)) {
    throw std::invalid_argument("limits v_stall must be >= 0 and t_stall > 0");
  }
  if (max_steps == 0) {
    throw std::invalid_argument("limits max_steps must be >= 1");
  }
  if (!(std::isfinite(goal_tolerance) && goal_tolerance >= 0.0)) {
    throw std::invalid_argument("limits goal_tolerance must be >= 0");
  }
}

OutcomeTracker::OutcomeTracker(const ReferencePath & path, const OutcomeLimits & limits, double dt)
: path_(path),
  limits_(limits),
  stall_steps_needed_(static_cast<std::size_t>(std::ceil(limits.t_stall / dt - 1e-9)))
{
  if (stall_steps_needed_ == 0) {
    stall_steps_needed_ = 1;
  }
}

std::optional<OutcomeClass> OutcomeTracker::observe(const ExecutedState & row)
{
  const std::size_t index = rows_++;
  if (row.min_margin < 0.0) {
    return OutcomeClass::FailCollision;
  }
  const auto near = path_.nearest({row.state.x, row.state.y});
  if (path_[near.index].arc_length >= path_.total_length() - limits_.goal_tolerance) {
    return OutcomeClass::Success;
  }
  stall_run_ = row.state.v < limits_.v_stall ? stall_run_ + 1 : 0;
  if (stall_run_ >= stall_steps_needed_ || index >= limits_.max_steps) {
    return OutcomeClass::FailStop;
  }
  return std::nullopt;
}

Outcome classify_outcome(
  std::span<const ExecutedState> run, const ReferencePath & path, const OutcomeLimits & limits,
  double dt)
{
  if (run.empty()) {
    throw std::invalid_argument("classify_outcome: empty run");
  }
  Outcome outcome;
  outcome.steps = run.size() - 1;

  double speed_sum = 0.0;
  double error_sum = 0.0;
  bool collided = false;
  for (const auto & row : run) {
    speed_sum += row.state.v;
    error_sum += path.nearest({row.state.x, row.state.y}).distance;
    collided = collided || row.min_margin < 0.0;
  }
  outcome.avg_speed = speed_sum / static_cast<double>(run.size());
  outcome.avg_position_error = error_sum / static_cast<double>(run.size());

  if (collided) {
    outcome.cls = OutcomeClass::FailCollision;
    return outcome;
  }
  OutcomeTracker tracker(path, limits, dt);
  outcome.cls = OutcomeClass::FailStop;  // path end never reached
  for (const auto & row : run) {
    if (auto decided = tracker.observe(row)) {
      outcome.cls = *decided;
      break;
    }
  }
  return outcome;
}

void Scenario::build_path()
{
  path = build_line_semicircle_path(
    path_spec.line_length, path_spec.radius, path_spec.ref_speed, path_spec.spacing);
}

void Scenario::validate() const
{
  vehicle.validate();
  if (!initial_state.finite()) {
    throw std::invalid_argument("initial state must be finite");
  }
  for (const auto & obstacle : constraints.obstacles) {
    if (!(std::isfinite(obstacle.radius) && obstacle.radius > 0.0)) {
      throw std::invalid_argument("obstacle radius must be > 0");
    }
  }
  barrier.validate();
  costs.validate();
  limits.validate();
  if (path.size() == 0) {
    throw std::invalid_argument("scenario has no reference path");
  }
}

}  // namespace mppi_dbas
