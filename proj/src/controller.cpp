#include "mppi_dbas/controller.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

#include "mppi_dbas/parallel.hpp"
#include "mppi_dbas/savitzky_golay.hpp"

namespace mppi_dbas
{

std::string_view to_string(ControllerMode mode)
{
  switch (mode) {
    case ControllerMode::DbasAdaptive: return "dbas-adaptive";
    case ControllerMode::DbasFixed: return "dbas-fixed";
    case ControllerMode::BaselineIndicator: return "baseline-indicator";
  }
  return "unknown";
}

ControllerMode controller_mode_from_string(std::string_view name)
{
  for (auto mode : {ControllerMode::DbasAdaptive, ControllerMode::DbasFixed,
      ControllerMode::BaselineIndicator})
  {
    if (name == to_string(mode)) {
      return mode;
    }
  }
  throw std::invalid_argument("unknown controller mode '" + std::string(name) + "'");
}

void ControllerConfig::validate() const
{
  auto require = [](bool ok, const std::string & message) {
      if (!ok) {
        throw std::invalid_argument("controller: " + message);
      }
    };
  require(num_samples >= 1, "num_samples must be >= 1");
  require(horizon >= 1, "horizon must be >= 1");
  require(sigma_u.allFinite(), "sigma_u must be finite");
  require(sigma_u.isApprox(sigma_u.transpose(), 0.0), "sigma_u must be symmetric");
  require(sigma_u.llt().info() == Eigen::Success && sigma_u.determinant() > 0.0,
      "sigma_u must be positive definite");
  require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
  require(std::isfinite(gamma_ctrl) && gamma_ctrl >= 0.0, "gamma_ctrl must be >= 0");
  require(std::isfinite(r_barrier) && r_barrier >= 0.0, "r_barrier must be >= 0");
  require(mu > 0.0 && mu < 1.0, "mu must lie in (0, 1)");
  require(std::isfinite(s_e_max) && s_e_max >= mu, "s_e_max must be >= mu");
  require(std::isfinite(fixed_exploration) && fixed_exploration > 0.0,
      "fixed_exploration must be > 0");
  require(std::isfinite(indicator_penalty) && indicator_penalty >= 0.0,
      "indicator_penalty must be >= 0");
  require(sg_window >= 1 && sg_window % 2 == 1 && sg_order >= 0 && sg_window > sg_order,
      "sg_window must be odd and larger than sg_order");
  require(workers >= 1, "workers must be >= 1");
}

ExplorationState initial_exploration(const ControllerConfig & config)
{
  if (config.mode == ControllerMode::DbasAdaptive) {
    return {config.mu, 0.0};
  }
  return {config.fixed_exploration, 0.0};
}

std::uint64_t sample_stream_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t sample)
{
  // splitmix64 finaliser folded over the three counters
  auto mix = [](std::uint64_t z) {
      z += 0x9e3779b97f4a7c15ULL;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
  return mix(mix(mix(seed) ^ step) ^ sample);
}

std::vector<VehicleControl> sample_perturbations(
  const ControllerConfig & config, const ExplorationState & exploration, std::uint64_t step_index)
{
  const Eigen::Matrix2d chol = (exploration.s_e * config.sigma_u).llt().matrixL();
  std::vector<VehicleControl> out(config.num_samples * config.horizon);
  for (std::size_t m = 0; m < config.num_samples; ++m) {
    std::mt19937_64 engine(sample_stream_seed(config.rng_seed, step_index, m));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < config.horizon; ++k) {
      const double z0 = normal(engine);
      const double z1 = normal(engine);
      auto & du = out[m * config.horizon + k];
      du.steer = chol(0, 0) * z0;
      du.accel = chol(1, 0) * z0 + chol(1, 1) * z1;
    }
  }
  return out;
}

double barrier_cost(std::span<const AugmentedState> trajectory, double r_barrier)
{
  double sum = 0.0;
  for (const auto & s : trajectory) {
    if (s.w == kUnsafe) {
      return kUnsafe;
    }
    sum += s.w;
  }
  return r_barrier * sum;
}

double trajectory_cost(
  std::span<const AugmentedState> trajectory, std::span<const VehicleControl> perturbed_controls,
  std::span<const VehicleControl> nominal_controls, const ControllerConfig & config, double s_e,
  const Scenario & scenario)
{
  const std::size_t n = perturbed_controls.size();
  if (trajectory.size() != n + 1 || nominal_controls.size() != n) {
    throw std::invalid_argument("trajectory_cost: inconsistent horizon lengths");
  }

  double safety = 0.0;
  if (config.mode == ControllerMode::BaselineIndicator) {
    const bool violated = std::any_of(trajectory.begin(), trajectory.end(),
        [](const AugmentedState & s) {return s.w == kUnsafe;});
    safety = violated ? config.indicator_penalty : 0.0;
  } else {
    safety = barrier_cost(trajectory, config.r_barrier);
    if (safety == kUnsafe) {
      return kUnsafe;
    }
  }

  const Eigen::Matrix2d precision = (s_e * config.sigma_u).inverse();
  double running = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d u(nominal_controls[k].steer, nominal_controls[k].accel);
    const Eigen::Vector2d v(perturbed_controls[k].steer, perturbed_controls[k].accel);
    running += running_cost(trajectory[k].nominal, scenario.path, scenario.costs) +
      control_effort(perturbed_controls[k], scenario.costs) +
      config.gamma_ctrl * u.dot(precision * v);
  }
  return safety + terminal_cost(trajectory[n].nominal, scenario.path, scenario.costs) + running;
}

RolloutBatch evaluate_batch(
  const AugmentedState & start, const ControlSequence & nominal,
  std::span<const VehicleControl> raw_perturbations, const ControllerConfig & config, double s_e,
  const Scenario & scenario)
{
  const std::size_t m_count = config.num_samples;
  const std::size_t n = nominal.size();
  if (raw_perturbations.size() != m_count * n) {
    throw std::invalid_argument("evaluate_batch: perturbation count does not match M x N");
  }

  RolloutBatch batch;
  batch.num_samples = m_count;
  batch.horizon = n;
  batch.perturbations.resize(m_count * n);
  batch.trajectories.resize(m_count * (n + 1));
  batch.costs.resize(m_count);

  parallel_for(m_count, config.workers, [&](std::size_t m) {
      std::vector<VehicleControl> perturbed(n);
      auto * traj = &batch.trajectories[m * (n + 1)];
      traj[0] = start;
      for (std::size_t k = 0; k < n; ++k) {
        const auto & u = nominal.controls[k];
        const auto & du = raw_perturbations[m * n + k];
        perturbed[k] = clamp_control({u.steer + du.steer, u.accel + du.accel}, scenario.vehicle);
        batch.perturbations[m * n + k] = {perturbed[k].steer - u.steer, perturbed[k].accel - u.accel};
        traj[k + 1] = augmented_step(
          traj[k], perturbed[k], scenario.vehicle, scenario.constraints, scenario.barrier);
      }
      batch.costs[m] = trajectory_cost(
        std::span<const AugmentedState>(traj, n + 1), perturbed, nominal.controls, config, s_e,
        scenario);
    });

  batch.rho = *std::min_element(batch.costs.begin(), batch.costs.end());
  return batch;
}

std::vector<double> importance_weights(std::span<const double> costs, double lambda)
{
  double rho = kUnsafe;
  for (double c : costs) {
    rho = std::min(rho, c);
  }
  if (!std::isfinite(rho)) {
    throw NoSafeSampleError();
  }
  std::vector<double> weights(costs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (std::isfinite(costs[i])) {
      weights[i] = std::exp(-(costs[i] - rho) / lambda);
      total += weights[i];
    }
  }
  for (auto & w : weights) {
    w /= total;
  }
  return weights;
}

std::vector<VehicleControl> smooth_controls(
  std::span<const VehicleControl> raw_update, const ControllerConfig & config)
{
  if (static_cast<std::size_t>(config.sg_window) > raw_update.size()) {
    static std::once_flag warned;
    std::call_once(warned, [&] {
        std::clog << "mppi_dbas: Savitzky-Golay window " << config.sg_window
                  << " exceeds horizon " << raw_update.size() << "; smoothing disabled\n";
      });
    return {raw_update.begin(), raw_update.end()};
  }
  const auto kernel = savitzky_golay_kernel(config.sg_window, config.sg_order);
  std::vector<double> steer(raw_update.size());
  std::vector<double> accel(raw_update.size());
  for (std::size_t k = 0; k < raw_update.size(); ++k) {
    steer[k] = raw_update[k].steer;
    accel[k] = raw_update[k].accel;
  }
  steer = savitzky_golay_filter(steer, kernel);
  accel = savitzky_golay_filter(accel, kernel);
  std::vector<VehicleControl> out(raw_update.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {steer[k], accel[k]};
  }
  return out;
}

ControlSequence weighted_update(
  const ControlSequence & nominal, const RolloutBatch & batch, const ControllerConfig & config)
{
  if (batch.horizon != nominal.size() || batch.costs.size() != batch.num_samples) {
    throw std::invalid_argument("weighted_update: batch does not match the nominal sequence");
  }
  const auto weights = importance_weights(batch.costs, config.lambda);

  // fixed summation order (sample index) keeps the result independent of worker count
  std::vector<VehicleControl> average(batch.horizon);
  for (std::size_t m = 0; m < batch.num_samples; ++m) {
    if (weights[m] == 0.0) {
      continue;
    }
    const auto du = batch.perturbation(m);
    for (std::size_t k = 0; k < batch.horizon; ++k) {
      average[k].steer += weights[m] * du[k].steer;
      average[k].accel += weights[m] * du[k].accel;
    }
  }

  const auto smoothed = smooth_controls(average, config);
  ControlSequence out = nominal;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.controls[k].steer += smoothed[k].steer;
    out.controls[k].accel += smoothed[k].accel;
  }
  return out;
}

ExplorationState update_exploration(
  std::span<const AugmentedState> near_optimal_trajectory, const ControllerConfig & config,
  const ExplorationState & state)
{
  ExplorationState next = state;
  next.c_b_star = barrier_cost(near_optimal_trajectory, config.r_barrier);
  if (config.mode != ControllerMode::DbasAdaptive) {
    next.s_e = config.fixed_exploration;
    return next;
  }
  if (!std::isfinite(next.c_b_star)) {
    next.s_e = config.s_e_max;
    return next;
  }
  next.s_e = std::min(config.mu * std::log(std::numbers::e + next.c_b_star), config.s_e_max);
  return next;
}

ControlSequence shift_warm_start(const ControlSequence & controls, VehicleControl fill)
{
  ControlSequence out;
  out.controls.reserve(controls.size());
  for (std::size_t k = 1; k < controls.size(); ++k) {
    out.controls.push_back(controls.controls[k]);
  }
  if (!controls.controls.empty()) {
    out.controls.push_back(fill);
  }
  return out;
}

StepResult control_step(
  const AugmentedState & current, const ControlSequence & nominal, const ControllerConfig & config,
  const Scenario & scenario, const ExplorationState & exploration, std::uint64_t step_index)
{
  if (!current.nominal.finite()) {
    throw NonFiniteStateError("control_step: non-finite current state", 0);
  }
  if (nominal.size() != config.horizon) {
    throw std::invalid_argument("control_step: nominal length differs from the horizon");
  }

  StepDiagnostics diagnostics;
  diagnostics.sampling_s_e = exploration.s_e;
  diagnostics.min_margin = min_margin(current.nominal, scenario.vehicle, scenario.constraints);

  const auto raw = sample_perturbations(config, exploration, step_index);
  const RolloutBatch batch = evaluate_batch(current, nominal, raw, config, exploration.s_e, scenario);
  diagnostics.rho = batch.rho;
  diagnostics.safe_samples = static_cast<std::size_t>(std::count_if(
      batch.costs.begin(), batch.costs.end(), [](double c) {return std::isfinite(c);}));
  if (diagnostics.safe_samples == 0) {
    diagnostics.s_e = exploration.s_e;
    diagnostics.c_b_star = exploration.c_b_star;
    throw NoSafeSampleError(diagnostics);
  }

  const auto weights = importance_weights(batch.costs, config.lambda);
  double sum_sq = 0.0;
  for (double w : weights) {
    sum_sq += w * w;
  }
  diagnostics.effective_sample_size = 1.0 / sum_sq;

  StepResult result;
  result.optimized = weighted_update(nominal, batch, config);
  for (auto & u : result.optimized.controls) {
    u = clamp_control(u, scenario.vehicle);
  }
  result.applied = result.optimized.controls.front();

  std::vector<AugmentedState> near_optimal;
  near_optimal.reserve(config.horizon + 1);
  near_optimal.push_back(current);
  for (const auto & u : result.optimized.controls) {
    near_optimal.push_back(augmented_step(
        near_optimal.back(), u, scenario.vehicle, scenario.constraints, scenario.barrier));
  }
  result.exploration = update_exploration(near_optimal, config, exploration);
  result.next_nominal = shift_warm_start(result.optimized);

  diagnostics.s_e = result.exploration.s_e;
  diagnostics.c_b_star = result.exploration.c_b_star;
  result.diagnostics = diagnostics;
  return result;
}

}  // namespace mppi_dbas
