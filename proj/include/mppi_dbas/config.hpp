#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mppi_dbas/controller.hpp"
#include "mppi_dbas/scenario.hpp"

namespace mppi_dbas
{

inline constexpr int kConfigSchemaVersion = 1;

/// Raised for malformed or invalid experiment files. The message names the
/// line/column (syntax errors) or the JSON pointer of the offending field.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Contents of an experiment file: scenario, base controller settings, the modes
/// and seeds of a batch, and where results go.
struct ExperimentConfig
{
  int schema_version{kConfigSchemaVersion};
  VehicleParams vehicle{};
  VehicleState initial_state{};
  PathSpec path{};
  std::vector<CircularObstacle> obstacles;
  BarrierConfig barrier{};
  CostParams costs{};
  OutcomeLimits limits{};
  ControllerConfig controller{};
  std::vector<ControllerMode> modes{ControllerMode::DbasAdaptive};
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir{"out"};

  bool operator==(const ExperimentConfig &) const = default;

  Scenario scenario() const;
  ControllerConfig controller_for(ControllerMode mode) const;
};

/// Parses and validates an experiment document. Unknown keys are rejected;
/// omitted keys keep their defaults except `schema_version`, which is required.
ExperimentConfig parse_config(const std::string & text);

ExperimentConfig load_config(const std::filesystem::path & file);

/// Pretty-printed JSON that parse_config reads back to an equal config.
std::string serialize_config(const ExperimentConfig & config);

}  // namespace mppi_dbas
