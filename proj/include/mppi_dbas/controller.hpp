#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "mppi_dbas/dynamics.hpp"
#include "mppi_dbas/safety.hpp"
#include "mppi_dbas/scenario.hpp"

namespace mppi_dbas
{

enum class ControllerMode
{
  DbasAdaptive,       // barrier-state cost + adaptive exploration rate
  DbasFixed,          // barrier-state cost, exploration rate held constant
  BaselineIndicator,  // standard MPPI: impulse penalty on predicted collisions
};

std::string_view to_string(ControllerMode mode);
ControllerMode controller_mode_from_string(std::string_view name);

struct ControllerConfig
{
  std::size_t num_samples{512};
  std::size_t horizon{30};
  /// Control-noise covariance over (steer, accel).
  Eigen::Matrix2d sigma_u{(Eigen::Matrix2d() << 0.075, 0.0, 0.0, 2.0).finished()};
  double lambda{1.0};
  double gamma_ctrl{2.0};
  double r_barrier{1.0};
  double mu{0.4};
  double s_e_max{5.0};
  /// Exploration rate used by the non-adaptive modes.
  double fixed_exploration{1.0};
  ControllerMode mode{ControllerMode::DbasAdaptive};
  double indicator_penalty{1000.0};
  int sg_window{9};
  int sg_order{3};
  std::uint64_t rng_seed{0};
  /// Rollout worker threads; results do not depend on this.
  std::size_t workers{1};

  bool operator==(const ControllerConfig &) const = default;
  void validate() const;
};

struct ControlSequence
{
  std::vector<VehicleControl> controls;

  bool operator==(const ControlSequence &) const = default;
  std::size_t size() const {return controls.size();}

  static ControlSequence zeros(std::size_t horizon) {return {std::vector<VehicleControl>(horizon)};}
};

/// M sampled rollouts around one nominal sequence. Perturbations are row-major
/// (sample, step) and hold the effective offsets after saturation.
struct RolloutBatch
{
  std::size_t num_samples{0};
  std::size_t horizon{0};
  std::vector<VehicleControl> perturbations;
  std::vector<AugmentedState> trajectories;  // num_samples x (horizon + 1)
  std::vector<double> costs;
  double rho{0.0};

  std::span<const VehicleControl> perturbation(std::size_t m) const
  {
    return std::span(perturbations).subspan(m * horizon, horizon);
  }
  std::span<const AugmentedState> trajectory(std::size_t m) const
  {
    return std::span(trajectories).subspan(m * (horizon + 1), horizon + 1);
  }
};

struct ExplorationState
{
  double s_e{1.0};
  double c_b_star{0.0};

  bool operator==(const ExplorationState &) const = default;
};

/// Exploration state a fresh controller starts from.
ExplorationState initial_exploration(const ControllerConfig & config);

struct StepDiagnostics
{
  double rho{0.0};
  double effective_sample_size{0.0};
  double sampling_s_e{0.0};  // rate the batch was drawn with
  double s_e{0.0};           // rate after the exploration update
  double c_b_star{0.0};
  double min_margin{0.0};    // at the current state
  std::size_t safe_samples{0};
};

class NoSafeSampleError : public std::runtime_error
{
public:
  explicit NoSafeSampleError(StepDiagnostics diagnostics = {})
  : std::runtime_error("no safe sample: every rollout violates a constraint"),
    diagnostics_(diagnostics) {}

  const StepDiagnostics & diagnostics() const {return diagnostics_;}

private:
  StepDiagnostics diagnostics_;
};

/// Counter-based stream key for one (seed, step, sample) triple.
std::uint64_t sample_stream_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t sample);

/// Draws M x N perturbations from N(0, s_e * sigma_u). Sample m uses its own stream
/// keyed by (config.rng_seed, step_index, m), so draws do not depend on evaluation order.
std::vector<VehicleControl> sample_perturbations(
  const ControllerConfig & config, const ExplorationState & exploration, std::uint64_t step_index);

/// Cost-to-go of one augmented rollout:
///   C_B + phi(x_N) + sum_k [ q(x_k) + 0.5 v_k^T R v_k + gamma u_k^T (S_e Sigma_u)^-1 v_k ]
/// with C_B = sum_k R_B w_k in the barrier modes (+inf if any w is unsafe) and
/// indicator_penalty * [any violation] in the baseline mode.
double trajectory_cost(
  std::span<const AugmentedState> trajectory, std::span<const VehicleControl> perturbed_controls,
  std::span<const VehicleControl> nominal_controls, const ControllerConfig & config, double s_e,
  const Scenario & scenario);

/// Rolls out and scores every sample of a batch around `nominal`, in parallel.
RolloutBatch evaluate_batch(
  const AugmentedState & start, const ControlSequence & nominal,
  std::span<const VehicleControl> raw_perturbations, const ControllerConfig & config, double s_e,
  const Scenario & scenario);

/// exp(-(S - rho) / lambda), normalised; +inf costs get weight 0.
/// Throws NoSafeSampleError when no cost is finite.
std::vector<double> importance_weights(std::span<const double> costs, double lambda);

/// Per-channel Savitzky-Golay smoothing of an update sequence. Falls back to the
/// identity (with a one-time diagnostic) when the window does not fit the horizon.
std::vector<VehicleControl> smooth_controls(
  std::span<const VehicleControl> raw_update, const ControllerConfig & config);

/// u* = u + SG(sum_m w_m du_m). Throws NoSafeSampleError if every cost is +inf.
ControlSequence weighted_update(
  const ControlSequence & nominal, const RolloutBatch & batch, const ControllerConfig & config);

/// C_B of an augmented rollout: sum of R_B w_k, +inf if any w_k is unsafe.
double barrier_cost(std::span<const AugmentedState> trajectory, double r_barrier);

/// S_e = mu ln(e + C_B(X*)), capped at s_e_max. Non-adaptive modes keep the fixed rate.
ExplorationState update_exploration(
  std::span<const AugmentedState> near_optimal_trajectory, const ControllerConfig & config,
  const ExplorationState & state);

/// Drops u_0, shifts left and appends `fill`.
ControlSequence shift_warm_start(const ControlSequence & controls, VehicleControl fill = {});

struct StepResult
{
  VehicleControl applied;
  ControlSequence optimized;     // U* before the warm-start shift
  ControlSequence next_nominal;
  ExplorationState exploration;
  StepDiagnostics diagnostics;
};

/// One pass of the sampling-based MPC loop from the current safety-embedded state.
/// Throws NoSafeSampleError (carrying diagnostics) when every sample is unsafe.
StepResult control_step(
  const AugmentedState & current, const ControlSequence & nominal, const ControllerConfig & config,
  const Scenario & scenario, const ExplorationState & exploration, std::uint64_t step_index);

}  // namespace mppi_dbas
