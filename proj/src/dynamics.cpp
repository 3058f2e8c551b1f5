#include "mppi_dbas/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace mppi_dbas
{

bool VehicleState::finite() const
{
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) && std::isfinite(v);
}

void VehicleParams::validate() const
{
  auto require = [](bool ok, const char * field) {
      if (!ok) {
        throw std::invalid_argument(std::string("vehicle parameter '") + field +
                "' must be finite and positive");
      }
    };
  require(std::isfinite(wheelbase) && wheelbase > 0.0, "wheelbase");
  require(std::isfinite(length) && length > 0.0, "length");
  require(std::isfinite(width) && width > 0.0, "width");
  require(std::isfinite(dt) && dt > 0.0, "dt");
  require(std::isfinite(steer_max) && steer_max > 0.0, "steer_max");
  require(std::isfinite(accel_max) && accel_max > 0.0, "accel_max");
}

VehicleControl clamp_control(const VehicleControl & control, const VehicleParams & params)
{
  return {
    std::clamp(control.steer, -params.steer_max, params.steer_max),
    std::clamp(control.accel, -params.accel_max, params.accel_max)};
}

VehicleState step_vehicle(
  const VehicleState & state, const VehicleControl & control, const VehicleParams & params)
{
  if (!state.finite()) {
    throw NonFiniteStateError("step_vehicle: non-finite input state", 0);
  }
  const double dt = params.dt;
  return {
    state.x + state.v * std::cos(state.theta) * dt,
    state.y + state.v * std::sin(state.theta) * dt,
    state.theta + state.v * std::tan(control.steer) / params.wheelbase * dt,
    state.v + control.accel * dt};
}

ShapePointSet shape_points(const VehicleState & state, const VehicleParams & params)
{
  const double hl = 0.5 * params.length;
  const double hw = 0.5 * params.width;
  // body frame: +x forward, +y left
  static constexpr std::array<std::array<double, 2>, 8> unit = {{
    {1.0, 1.0}, {1.0, -1.0}, {-1.0, -1.0}, {-1.0, 1.0},
    {1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}, {0.0, 1.0}}};

  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  ShapePointSet points;
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const double bx = unit[i][0] * hl;
    const double by = unit[i][1] * hw;
    points[i] = {state.x + c * bx - s * by, state.y + s * bx + c * by};
  }
  return points;
}

std::vector<VehicleState> rollout(
  const VehicleState & initial, std::span<const VehicleControl> controls,
  const VehicleParams & params)
{
  std::vector<VehicleState> states;
  states.reserve(controls.size() + 1);
  states.push_back(initial);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    if (!states.back().finite()) {
      throw NonFiniteStateError(
              "rollout: non-finite state at step " + std::to_string(k), k);
    }
    states.push_back(step_vehicle(states.back(), controls[k], params));
  }
  return states;
}

}  // namespace mppi_dbas
