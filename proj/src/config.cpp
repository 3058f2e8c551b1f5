#include "mppi_dbas/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mppi_dbas
{

using nlohmann::json;

namespace
{

std::string line_column(const std::string & text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

/// Strict object reader: every key must be consumed, and types are checked.
class Reader
{
public:
  Reader(const json & object, std::string pointer)
  : object_(object), pointer_(std::move(pointer))
  {
    if (!object_.is_object()) {
      fail("expected an object");
    }
  }

  [[noreturn]] void fail(const std::string & message, const std::string & key = "") const
  {
    throw ConfigError("config field '" + (key.empty() ? pointer_ : child(key)) + "': " + message);
  }

  std::string child(const std::string & key) const {return pointer_ + "/" + key;}

  bool has(const std::string & key) const {return object_.contains(key);}

  const json & at(const std::string & key)
  {
    consumed_.insert(key);
    return object_.at(key);
  }

  void number(const std::string & key, double & out)
  {
    if (!has(key)) {
      return;
    }
    const auto & v = at(key);
    if (!v.is_number()) {
      fail("expected a number", key);
    }
    out = v.get<double>();
  }

  template<typename Int>
  void integer(const std::string & key, Int & out)
  {
    if (!has(key)) {
      return;
    }
    const auto & v = at(key);
    if (!v.is_number_integer()) {
      fail("expected an integer", key);
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = static_cast<Int>(v.get<std::uint64_t>());
        return;
      }
      fail("expected a non-negative integer", key);
    } else {
      out = static_cast<Int>(v.get<std::int64_t>());
    }
  }

  void string(const std::string & key, std::string & out)
  {
    if (!has(key)) {
      return;
    }
    const auto & v = at(key);
    if (!v.is_string()) {
      fail("expected a string", key);
    }
    out = v.get<std::string>();
  }

  Reader object(const std::string & key) {return Reader(at(key), child(key));}

  void finish() const
  {
    for (const auto & [key, value] : object_.items()) {
      if (!consumed_.contains(key)) {
        fail("unknown key", key);
      }
    }
  }

private:
  const json & object_;
  std::string pointer_;
  std::set<std::string> consumed_;
};

template<typename Fn>
void section(Reader & parent, const std::string & key, Fn && fn)
{
  if (!parent.has(key)) {
    return;
  }
  Reader r = parent.object(key);
  fn(r);
  r.finish();
}

Point2 read_point(const json & v, const std::string & pointer)
{
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError("config field '" + pointer + "': expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

Scenario ExperimentConfig::scenario() const
{
  Scenario s;
  s.vehicle = vehicle;
  s.initial_state = initial_state;
  s.path_spec = path;
  s.constraints.obstacles = obstacles;
  s.barrier = barrier;
  s.costs = costs;
  s.limits = limits;
  s.build_path();
  return s;
}

ControllerConfig ExperimentConfig::controller_for(ControllerMode mode) const
{
  ControllerConfig c = controller;
  c.mode = mode;
  return c;
}

ExperimentConfig parse_config(const std::string & text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ConfigError("config syntax error at " + line_column(text, e.byte) + ": " + e.what());
  }

  ExperimentConfig cfg;
  Reader root(doc, "");
  if (!root.has("schema_version")) {
    root.fail("missing required key", "schema_version");
  }
  root.integer("schema_version", cfg.schema_version);
  if (cfg.schema_version != kConfigSchemaVersion) {
    root.fail("unsupported schema version " + std::to_string(cfg.schema_version), "schema_version");
  }

  section(root, "vehicle", [&](Reader & r) {
      r.number("wheelbase", cfg.vehicle.wheelbase);
      r.number("length", cfg.vehicle.length);
      r.number("width", cfg.vehicle.width);
      r.number("dt", cfg.vehicle.dt);
      r.number("steer_max", cfg.vehicle.steer_max);
      r.number("accel_max", cfg.vehicle.accel_max);
    });
  section(root, "initial_state", [&](Reader & r) {
      r.number("x", cfg.initial_state.x);
      r.number("y", cfg.initial_state.y);
      r.number("theta", cfg.initial_state.theta);
      r.number("v", cfg.initial_state.v);
    });
  section(root, "path", [&](Reader & r) {
      r.number("line_length", cfg.path.line_length);
      r.number("radius", cfg.path.radius);
      r.number("ref_speed", cfg.path.ref_speed);
      r.number("spacing", cfg.path.spacing);
    });
  if (root.has("obstacles")) {
    const auto & list = root.at("obstacles");
    if (!list.is_array()) {
      root.fail("expected an array", "obstacles");
    }
    cfg.obstacles.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string pointer = "/obstacles/" + std::to_string(i);
      Reader r(list[i], pointer);
      CircularObstacle o;
      if (!r.has("center") || !r.has("radius")) {
        r.fail("obstacle needs 'center' and 'radius'");
      }
      o.center = read_point(r.at("center"), pointer + "/center");
      r.number("radius", o.radius);
      r.finish();
      cfg.obstacles.push_back(o);
    }
  }
  section(root, "barrier", [&](Reader & r) {
      std::string kind(to_string(cfg.barrier.kind));
      r.string("kind", kind);
      try {
        cfg.barrier.kind = barrier_kind_from_string(kind);
      } catch (const std::invalid_argument & e) {
        r.fail(e.what(), "kind");
      }
      r.number("gamma_bas", cfg.barrier.gamma_bas);
      r.number("beta_desired", cfg.barrier.beta_desired);
      r.number("epsilon_h", cfg.barrier.epsilon_h);
    });
  section(root, "costs", [&](Reader & r) {
      r.number("q_pos", cfg.costs.q_pos);
      r.number("q_heading", cfg.costs.q_heading);
      r.number("q_speed", cfg.costs.q_speed);
      r.number("terminal_pos", cfg.costs.terminal_pos);
      r.number("terminal_heading", cfg.costs.terminal_heading);
      r.number("terminal_speed", cfg.costs.terminal_speed);
      section(r, "control_weight", [&](Reader & cw) {
        cw.number("steer", cfg.costs.control_weight.steer);
        cw.number("accel", cfg.costs.control_weight.accel);
      });
    });
  section(root, "limits", [&](Reader & r) {
      r.number("v_stall", cfg.limits.v_stall);
      r.number("t_stall", cfg.limits.t_stall);
      r.integer("max_steps", cfg.limits.max_steps);
      r.number("goal_tolerance", cfg.limits.goal_tolerance);
    });
  section(root, "controller", [&](Reader & r) {
      auto & c = cfg.controller;
      r.integer("num_samples", c.num_samples);
      r.integer("horizon", c.horizon);
      if (r.has("sigma_u")) {
        const auto & m = r.at("sigma_u");
        const bool ok = m.is_array() && m.size() == 2 &&
        std::all_of(m.begin(), m.end(), [](const json & row) {
            return row.is_array() && row.size() == 2 && row[0].is_number() && row[1].is_number();
          });
        if (!ok) {
          r.fail("expected a 2x2 array of numbers", "sigma_u");
        }
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            c.sigma_u(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
          }
        }
      }
      r.number("lambda", c.lambda);
      r.number("gamma_ctrl", c.gamma_ctrl);
      r.number("r_barrier", c.r_barrier);
      r.number("mu", c.mu);
      r.number("s_e_max", c.s_e_max);
      r.number("fixed_exploration", c.fixed_exploration);
      std::string mode(to_string(c.mode));
      r.string("mode", mode);
      try {
        c.mode = controller_mode_from_string(mode);
      } catch (const std::invalid_argument & e) {
        r.fail(e.what(), "mode");
      }
      r.number("indicator_penalty", c.indicator_penalty);
      r.integer("sg_window", c.sg_window);
      r.integer("sg_order", c.sg_order);
      r.integer("workers", c.workers);
      if (r.has("rng_seed")) {
        r.fail("the seed comes from 'seeds' or --seed", "rng_seed");
      }
    });
  if (root.has("modes")) {
    const auto & list = root.at("modes");
    if (!list.is_array() || list.empty()) {
      root.fail("expected a non-empty array of mode names", "modes");
    }
    cfg.modes.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string pointer = "/modes/" + std::to_string(i);
      if (!list[i].is_string()) {
        throw ConfigError("config field '" + pointer + "': expected a string");
      }
      try {
        cfg.modes.push_back(controller_mode_from_string(list[i].get<std::string>()));
      } catch (const std::invalid_argument & e) {
        throw ConfigError("config field '" + pointer + "': " + e.what());
      }
    }
  }
  if (root.has("seeds")) {
    const auto & list = root.at("seeds");
    if (!list.is_array() || list.empty()) {
      root.fail("expected a non-empty array of seeds", "seeds");
    }
    cfg.seeds.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_number_unsigned()) {
        throw ConfigError(
                "config field '/seeds/" + std::to_string(i) + "': expected a non-negative integer");
      }
      cfg.seeds.push_back(list[i].get<std::uint64_t>());
    }
  }
  root.string("output_dir", cfg.output_dir);
  root.finish();

  auto check = [](auto && validate, const std::string & where) {
      try {
        validate();
      } catch (const std::invalid_argument & e) {
        throw ConfigError("config field '" + where + "': " + e.what());
      }
    };
  check([&] {cfg.vehicle.validate();}, "/vehicle");
  check([&] {
      if (!cfg.initial_state.finite()) {
        throw std::invalid_argument("state must be finite");
      }
    }, "/initial_state");
  check([&] {cfg.scenario().validate();}, "/path");
  check([&] {cfg.barrier.validate();}, "/barrier");
  check([&] {cfg.costs.validate();}, "/costs");
  check([&] {cfg.limits.validate();}, "/limits");
  check([&] {cfg.controller.validate();}, "/controller");
  for (std::size_t i = 0; i < cfg.obstacles.size(); ++i) {
    if (!(std::isfinite(cfg.obstacles[i].radius) && cfg.obstacles[i].radius > 0.0)) {
      throw ConfigError("config field '/obstacles/" + std::to_string(i) + "/radius': must be > 0");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path & file)
{
  std::ifstream in(file);
  if (!in) {
    throw std::ios_base::failure("cannot read config file " + file.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig & cfg)
{
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["vehicle"] = {
    {"wheelbase", cfg.vehicle.wheelbase}, {"length", cfg.vehicle.length},
    {"width", cfg.vehicle.width}, {"dt", cfg.vehicle.dt},
    {"steer_max", cfg.vehicle.steer_max}, {"accel_max", cfg.vehicle.accel_max}};
  doc["initial_state"] = {
    {"x", cfg.initial_state.x}, {"y", cfg.initial_state.y},
    {"theta", cfg.initial_state.theta}, {"v", cfg.initial_state.v}};
  doc["path"] = {
    {"line_length", cfg.path.line_length}, {"radius", cfg.path.radius},
    {"ref_speed", cfg.path.ref_speed}, {"spacing", cfg.path.spacing}};
  doc["obstacles"] = json::array();
  for (const auto & o : cfg.obstacles) {
    doc["obstacles"].push_back({{"center", {o.center.x, o.center.y}}, {"radius", o.radius}});
  }
  doc["barrier"] = {
    {"kind", to_string(cfg.barrier.kind)}, {"gamma_bas", cfg.barrier.gamma_bas},
    {"beta_desired", cfg.barrier.beta_desired}, {"epsilon_h", cfg.barrier.epsilon_h}};
  doc["costs"] = {
    {"q_pos", cfg.costs.q_pos}, {"q_heading", cfg.costs.q_heading},
    {"q_speed", cfg.costs.q_speed}, {"terminal_pos", cfg.costs.terminal_pos},
    {"terminal_heading", cfg.costs.terminal_heading},
    {"terminal_speed", cfg.costs.terminal_speed},
    {"control_weight", {{"steer", cfg.costs.control_weight.steer},
      {"accel", cfg.costs.control_weight.accel}}}};
  doc["limits"] = {
    {"v_stall", cfg.limits.v_stall}, {"t_stall", cfg.limits.t_stall},
    {"max_steps", cfg.limits.max_steps}, {"goal_tolerance", cfg.limits.goal_tolerance}};
  const auto & c = cfg.controller;
  doc["controller"] = {
    {"num_samples", c.num_samples}, {"horizon", c.horizon},
    {"sigma_u", {{c.sigma_u(0, 0), c.sigma_u(0, 1)}, {c.sigma_u(1, 0), c.sigma_u(1, 1)}}},
    {"lambda", c.lambda}, {"gamma_ctrl", c.gamma_ctrl}, {"r_barrier", c.r_barrier},
    {"mu", c.mu}, {"s_e_max", c.s_e_max}, {"fixed_exploration", c.fixed_exploration},
    {"mode", to_string(c.mode)}, {"indicator_penalty", c.indicator_penalty},
    {"sg_window", c.sg_window}, {"sg_order", c.sg_order}, {"workers", c.workers}};
  doc["modes"] = json::array();
  for (auto m : cfg.modes) {
    doc["modes"].push_back(to_string(m));
  }
  doc["seeds"] = cfg.seeds;
  doc["output_dir"] = cfg.output_dir;
  return doc.dump(2) + "\n";
}

}  // namespace mppi_dbas
