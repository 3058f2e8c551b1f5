#include "mppi_dbas/safety.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mppi_dbas
{

std::string_view to_string(BarrierKind kind)
{
  switch (kind) {
    case BarrierKind::Inverse: return "inverse";
    case BarrierKind::ShiftedLog: return "shifted-log";
  }
  return "unknown";
}

BarrierKind barrier_kind_from_string(std::string_view name)
{
  if (name == "inverse") {
    return BarrierKind::Inverse;
  }
  if (name == "shifted-log") {
    return BarrierKind::ShiftedLog;
  }
  throw std::invalid_argument("unknown barrier kind '" + std::string(name) + "'");
}

void BarrierConfig::validate() const
{
  if (!(gamma_bas >= 0.0 && gamma_bas < 1.0)) {
    throw std::invalid_argument("barrier gamma_bas must lie in [0, 1)");
  }
  if (!(std::isfinite(beta_desired) && beta_desired >= 0.0)) {
    throw std::invalid_argument("barrier beta_desired must be finite and >= 0");
  }
  if (!(std::isfinite(epsilon_h) && epsilon_h > 0.0)) {
    throw std::invalid_argument("barrier epsilon_h must be finite and > 0");
  }
}

double constraint_margin(const Point2 & point, const CircularObstacle & obstacle)
{
  const double dx = point.x - obstacle.center.x;
  const double dy = point.y - obstacle.center.y;
  return dx * dx + dy * dy - obstacle.radius * obstacle.radius;
}

double min_margin(
  const VehicleState & state, const VehicleParams & params, const ConstraintSet & constraints)
{
  double best = std::numeric_limits<double>::infinity();
  if (constraints.empty()) {
    return best;
  }
  for (const auto & p : shape_points(state, params)) {
    for (const auto & obstacle : constraints.obstacles) {
      best = std::min(best, constraint_margin(p, obstacle));
    }
  }
  return best;
}

namespace
{

double barrier_value(double h, BarrierKind kind)
{
  switch (kind) {
    case BarrierKind::Inverse: return 1.0 / h;
    case BarrierKind::ShiftedLog: return std::log1p(1.0 / h);
  }
  return kUnsafe;
}

double barrier_slope(double h, BarrierKind kind)
{
  switch (kind) {
    case BarrierKind::Inverse: return -1.0 / (h * h);
    case BarrierKind::ShiftedLog: return -1.0 / (h * (h + 1.0));
  }
  return 0.0;
}

}  // namespace

double barrier(double h_value, const BarrierConfig & config)
{
  if (!(h_value > 0.0)) {
    return kUnsafe;
  }
  if (h_value >= config.epsilon_h) {
    return barrier_value(h_value, config.kind);
  }
  // tangent continuation below epsilon_h: finite, still strictly decreasing in h
  const double eps = config.epsilon_h;
  return barrier_value(eps, config.kind) + barrier_slope(eps, config.kind) * (h_value - eps);
}

double fused_barrier(
  const VehicleState & state, const VehicleParams & params, const ConstraintSet & constraints,
  const BarrierConfig & config)
{
  if (constraints.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto & p : shape_points(state, params)) {
    for (const auto & obstacle : constraints.obstacles) {
      const double b = barrier(constraint_margin(p, obstacle), config);
      if (b == kUnsafe) {
        return kUnsafe;
      }
      sum += b;
    }
  }
  return sum;
}

double dbas_step(
  double beta_k, const VehicleState & next_state, const VehicleParams & params,
  const ConstraintSet & constraints, const BarrierConfig & config)
{
  if (beta_k == kUnsafe) {
    return kUnsafe;
  }
  const double fused = fused_barrier(next_state, params, constraints, config);
  if (fused == kUnsafe) {
    return kUnsafe;
  }
  return fused - config.gamma_bas * (config.beta_desired - beta_k);
}

AugmentedState make_augmented(
  const VehicleState & state, const VehicleParams & params, const ConstraintSet & constraints,
  const BarrierConfig & config)
{
  return {state, fused_barrier(state, params, constraints, config)};
}

AugmentedState augmented_step(
  const AugmentedState & state, const VehicleControl & control, const VehicleParams & params,
  const ConstraintSet & constraints, const BarrierConfig & config)
{
  AugmentedState next;
  next.nominal = step_vehicle(state.nominal, control, params);
  next.w = dbas_step(state.w, next.nominal, params, constraints, config);
  return next;
}

}  // namespace mppi_dbas
