#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mppi_dbas
{

struct Point2
{
  double x{0.0};
  double y{0.0};

  bool operator==(const Point2 &) const = default;
};

/// Planar vehicle state. Yaw is kept unwrapped.
struct VehicleState
{
  double x{0.0};      // east (m)
  double y{0.0};      // north (m)
  double theta{0.0};  // yaw (rad)
  double v{0.0};      // longitudinal speed (m/s)

  bool operator==(const VehicleState &) const = default;
  bool finite() const;
};

struct VehicleControl
{
  double steer{0.0};  // steering angle (rad)
  double accel{0.0};  // longitudinal acceleration (m/s^2)

  bool operator==(const VehicleControl &) const = default;
};

struct VehicleParams
{
  double wheelbase{2.5};
  double length{4.0};
  double width{3.0};
  double dt{0.1};
  double steer_max{0.5};
  double accel_max{3.0};

  bool operator==(const VehicleParams &) const = default;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

/// Four body corners followed by the four side midpoints, world frame.
using ShapePointSet = std::array<Point2, 8>;

class NonFiniteStateError : public std::runtime_error
{
public:
  NonFiniteStateError(const std::string & what, std::size_t step)
  : std::runtime_error(what), step_(step) {}

  /// Index of the rollout step whose input was non-finite (0 for a single step).
  std::size_t step() const {return step_;}

private:
  std::size_t step_;
};

/// Generic discrete-time model x_{k+1} = f(x_k, u_k).
template<typename M>
concept DiscreteDynamics = requires(const M & model, const typename M::State & x,
    const typename M::Control & u) {
  {model.step(x, u)} -> std::same_as<typename M::State>;
};

/// Saturates a control to the box bounds of the vehicle.
VehicleControl clamp_control(const VehicleControl & control, const VehicleParams & params);

/// Forward-Euler Ackermann update:
///   x + v cos(theta) dt, y + v sin(theta) dt, theta + v tan(steer) / L dt, v + a dt
/// Throws NonFiniteStateError if the input state is not finite.
VehicleState step_vehicle(
  const VehicleState & state, const VehicleControl & control, const VehicleParams & params);

ShapePointSet shape_points(const VehicleState & state, const VehicleParams & params);

/// Returns controls.size() + 1 states starting with `initial`.
std::vector<VehicleState> rollout(
  const VehicleState & initial, std::span<const VehicleControl> controls,
  const VehicleParams & params);

/// The Ackermann vehicle as a DiscreteDynamics model.
class AckermannModel
{
public:
  using State = VehicleState;
  using Control = VehicleControl;

  explicit AckermannModel(VehicleParams params)
  : params_(params) {params_.validate();}

  State step(const State & x, const Control & u) const {return step_vehicle(x, u, params_);}
  const VehicleParams & params() const {return params_;}

private:
  VehicleParams params_;
};

static_assert(DiscreteDynamics<AckermannModel>);

}  // namespace mppi_dbas
