#pragma once

#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "mppi_dbas/dynamics.hpp"

namespace mppi_dbas
{

/// Value used for a barrier or barrier state once a constraint is violated.
inline constexpr double kUnsafe = std::numeric_limits<double>::infinity();

struct CircularObstacle
{
  Point2 center;
  double radius{1.0};

  bool operator==(const CircularObstacle &) const = default;
};

/// One constraint h >= 0 per (shape point, obstacle) pair.
struct ConstraintSet
{
  std::vector<CircularObstacle> obstacles;

  bool operator==(const ConstraintSet &) const = default;
  bool empty() const {return obstacles.empty();}
};

enum class BarrierKind
{
  Inverse,     // B(h) = 1 / h
  ShiftedLog,  // B(h) = log(1 + 1 / h)
};

std::string_view to_string(BarrierKind kind);
BarrierKind barrier_kind_from_string(std::string_view name);

struct BarrierConfig
{
  BarrierKind kind{BarrierKind::Inverse};
  double gamma_bas{0.5};     // DBaS gain, [0, 1)
  double beta_desired{0.0};  // B(h(x_d)) at the desired equilibrium
  double epsilon_h{1e-3};    // below this margin B is continued linearly

  bool operator==(const BarrierConfig &) const = default;
  void validate() const;
};

/// Safety-embedded state [x; w]. w is +inf once any constraint is violated.
struct AugmentedState
{
  VehicleState nominal;
  double w{0.0};

  bool operator==(const AugmentedState &) const = default;
};

/// ||p - c||^2 - r^2; positive means the point is outside the obstacle.
double constraint_margin(const Point2 & point, const CircularObstacle & obstacle);

/// Smallest margin over all shape points and obstacles, +inf with no obstacles.
double min_margin(
  const VehicleState & state, const VehicleParams & params, const ConstraintSet & constraints);

double barrier(double h_value, const BarrierConfig & config);

/// Sum of B(h) over every shape point / obstacle pair at `state` (multi-constraint fusion).
/// kUnsafe if any margin is <= 0.
double fused_barrier(
  const VehicleState & state, const VehicleParams & params, const ConstraintSet & constraints,
  const BarrierConfig & config);

/// w_{k+1} = fused_barrier(x_{k+1}) - gamma_bas * (beta_desired - w_k)
double dbas_step(
  double beta_k, const VehicleState & next_state, const VehicleParams & params,
  const ConstraintSet & constraints, const BarrierConfig & config);

/// Starts the barrier state at the fused barrier of the given state.
AugmentedState make_augmented(
  const VehicleState & state, const VehicleParams & params, const ConstraintSet & constraints,
  const BarrierConfig & config);

AugmentedState augmented_step(
  const AugmentedState & state, const VehicleControl & control, const VehicleParams & params,
  const ConstraintSet & constraints, const BarrierConfig & config);

}  // namespace mppi_dbas
