#include "hot/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "hot/error.hpp"

namespace hot {

namespace {

struct Binding {
  EnvOverride info;
  std::function<void(ExecutorConfig&, double)> apply;
};

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      {{"HOT_DT", "simulator step (s)"}, [](ExecutorConfig& c, double v) { c.sim.dt = v; }},
      {{"HOT_TEMPERATURE", "temperature (K)"}, [](ExecutorConfig& c, double v) { c.sim.temperature = v; }},
      {{"HOT_VISCOSITY", "viscosity (Pa s)"}, [](ExecutorConfig& c, double v) { c.sim.viscosity = v; }},
      {{"HOT_K_BASE", "annular/line stiffness at full power (pN/um)"},
       [](ExecutorConfig& c, double v) { c.sim.force.k_base = v; }},
      {{"HOT_K_POINT", "point-trap stiffness at full power (pN/um)"},
       [](ExecutorConfig& c, double v) { c.sim.force.k_point = v; }},
      {{"HOT_CAPTURE_FACTOR", "capture radius / bead radius"},
       [](ExecutorConfig& c, double v) { c.sim.force.capture_radius_factor = v; }},
      {{"HOT_CONTACT_K", "contact stiffness (pN/um)"}, [](ExecutorConfig& c, double v) { c.sim.contact_stiffness = v; }},
      {{"HOT_ESCAPE_RATE", "escape hazard at score 0 (1/s)"}, [](ExecutorConfig& c, double v) { c.sim.escape_rate = v; }},
      {{"HOT_POWER_FLOOR", "structure-trap power floor"},
       [](ExecutorConfig& c, double v) { c.sim.structure_power_floor = v; }},
      {{"HOT_POINT_POWER_FLOOR", "point-trap power floor"},
       [](ExecutorConfig& c, double v) { c.sim.point_power_floor = v; }},
      {{"HOT_R_BR", "planner buffer radius (um)"}, [](ExecutorConfig& c, double v) { c.r_br = v; }},
      {{"HOT_TIME_CAP", "run timeout (sim s)"}, [](ExecutorConfig& c, double v) { c.time_cap = v; }},
      {{"HOT_VISION_PERIOD", "camera period (s)"}, [](ExecutorConfig& c, double v) { c.vision_period = v; }},
      {{"HOT_NOISE_SIGMA", "camera noise (gray levels)"}, [](ExecutorConfig& c, double v) { c.vision.noise_sigma = v; }},
      {{"HOT_THRESHOLD_OFFSET", "adaptive threshold offset (gray levels)"},
       [](ExecutorConfig& c, double v) { c.vision.threshold_offset = v; }},
      {{"HOT_GATE_UM", "tracker gate (um)"}, [](ExecutorConfig& c, double v) { c.tracker.gate_um = v; }},
      {{"HOT_WEIGHT_POINT", "power weight of point traps"}, [](ExecutorConfig& c, double v) { c.weights.point = v; }},
      {{"HOT_WEIGHT_LINE", "power weight of line traps"}, [](ExecutorConfig& c, double v) { c.weights.line = v; }},
      {{"HOT_WEIGHT_ANNULAR", "power weight of annular traps"}, [](ExecutorConfig& c, double v) { c.weights.annular = v; }},
  };
  return table;
}

}  // namespace

const std::vector<EnvOverride>& env_overrides() {
  static const std::vector<EnvOverride> list = [] {
    std::vector<EnvOverride> out;
    for (const auto& b : bindings()) out.push_back(b.info);
    return out;
  }();
  return list;
}

std::vector<std::string> apply_env_overrides(ExecutorConfig& cfg, const EnvLookup& lookup) {
  auto get = [&](const std::string& name) -> std::optional<std::string> {
    if (lookup) return lookup(name);
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
  std::vector<std::string> applied;
  ExecutorConfig next = cfg;
  for (const auto& b : bindings()) {
    const auto raw = get(b.info.name);
    if (!raw) continue;
    double v = 0.0;
    const char* first = raw->data();
    const char* last = first + raw->size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
      throw UsageError(std::string(b.info.name) + ": not a number: '" + *raw + "'");
    b.apply(next, v);
    applied.emplace_back(b.info.name);
  }
  next.sim.validate();
  if (next.r_br < 0.0 || next.time_cap <= 0.0 || next.vision_period <= 0.0)
    throw UsageError("environment overrides produce an invalid configuration");
  cfg = next;
  return applied;
}

}  // namespace hot
