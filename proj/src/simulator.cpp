#include "hot/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hot/error.hpp"
#include "text_util.hpp"

namespace hot {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw UsageError("dt must be > 0");
  if (!(temperature >= 0.0)) throw UsageError("temperature must be >= 0");
  if (!(viscosity > 0.0)) throw UsageError("viscosity must be > 0");
  if (!(bead_radius > 0.0)) throw UsageError("bead_radius must be > 0");
  if (boundary_influx_rate < 0.0) throw UsageError("boundary_influx_rate must be >= 0");
  if (escape_rate < 0.0) throw UsageError("escape_rate must be >= 0");
  if (!(structure_power_floor > 0.0) || !(point_power_floor > 0.0))
    throw UsageError("power floors must be > 0");
  const double gamma = drag();
  // A trap that jumps one 0.5 um waypoint may drag its bead at most 0.1 r in one step.
  const double k_max = std::max(force.k_base, force.k_point);
  if (k_max * 0.5 * dt / gamma > 0.1 * bead_radius)
    throw UsageError("dt too coarse: trap drift per step exceeds 0.1 bead radius");
  if (contact_stiffness * dt / gamma >= 1.0) throw UsageError("dt too coarse for contact stiffness");
}

namespace {

Vec2 contact_direction(Vec2 d) {
  const double n = norm(d);
  return n > 0.0 ? d / n : Vec2{1.0, 0.0};
}

double geometry_factor(double q) {
  if (q < 1.0) return q * q * q;
  if (q > 2.0) return (2.0 / q) * (2.0 / q);
  return 1.0;
}

void project_overlaps(Scene& scene, const SimConfig& cfg) {
  const double min_d = 2.0 * scene.bead_radius * (1.0 - cfg.overlap_tolerance);
  auto& beads = scene.beads;
  for (int sweep = 0; sweep < cfg.projection_sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < beads.size(); ++i)
      for (std::size_t j = i + 1; j < beads.size(); ++j) {
        const Vec2 d = beads[j].pos - beads[i].pos;
        const double n = norm(d);
        if (n >= min_d) continue;
        const Vec2 u = contact_direction(d);
        // Aim slightly past the tolerance so a sweep settles the pair.
        const double push = 0.5 * (2.0 * scene.bead_radius * (1.0 - 0.5 * cfg.overlap_tolerance) - n);
        beads[i].pos -= u * push;
        beads[j].pos += u * push;
        moved = true;
      }
    if (!moved) break;
  }
}

Vec2 boundary_point(Rng& rng, double inset) {
  const double w = Workspace::width_um;
  const double h = Workspace::height_um;
  std::uniform_real_distribution<double> uni(0.0, 2.0 * (w + h));
  double s = uni(rng);
  if (s < w) return {s, inset};
  s -= w;
  if (s < h) return {w - inset, s};
  s -= h;
  if (s < w) return {w - s, h - inset};
  s -= w;
  return {inset, h - s};
}

}  // namespace

StepEvents step(Scene& scene, const SimConfig& cfg) {
  StepEvents events;
  const double gamma = cfg.drag();
  const double sigma = std::sqrt(2.0 * cfg.diffusion() * cfg.dt);
  const double r = scene.bead_radius;
  auto& beads = scene.beads;

  std::vector<Vec2> forces(beads.size());
  for (std::size_t i = 0; i < beads.size(); ++i) {
    const Bead& b = beads[i];
    if (b.state != BeadState::free)
      if (const Trap* t = scene.find_trap(b.trap_id)) forces[i] += trap_force(*t, b.pos, cfg.force, r).force;
    if (cfg.spurious_force) forces[i] += cfg.spurious_force(scene, b);
  }
  for (std::size_t i = 0; i < beads.size(); ++i)
    for (std::size_t j = i + 1; j < beads.size(); ++j) {
      const Vec2 d = beads[j].pos - beads[i].pos;
      const double n = norm(d);
      if (n >= 2.0 * r) continue;
      const Vec2 f = contact_direction(d) * (cfg.contact_stiffness * (2.0 * r - n));
      forces[i] -= f;
      forces[j] += f;
    }

  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < beads.size(); ++i) {
    Vec2 noise;
    if (sigma > 0.0) {
      noise.x = normal(scene.rng);
      noise.y = normal(scene.rng);
    }
    beads[i].pos += forces[i] * (cfg.dt / gamma) + noise * sigma;
  }
  project_overlaps(scene, cfg);

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto& trap : scene.traps) {
    if (trap.roster.empty()) continue;
    const double p = (1.0 - trap_stability(trap, cfg)) * cfg.escape_rate * cfg.dt;
    const std::vector<int> roster = trap.roster;
    for (int bid : roster) {
      if (uni(scene.rng) < p) events.escapes.push_back({bid, trap.id});
    }
  }
  for (const auto& e : events.escapes) scene.release_bead(e.bead_id);

  std::vector<int> gone;
  for (const auto& b : beads)
    if (!Workspace::contains(b.pos)) gone.push_back(b.id);
  for (int id : gone) {
    scene.release_bead(id);
    std::erase_if(beads, [id](const Bead& b) { return b.id == id; });
    events.removed.push_back(id);
  }

  if (cfg.boundary_influx_rate > 0.0) {
    std::poisson_distribution<int> poisson(cfg.boundary_influx_rate * cfg.dt);
    const int n = poisson(scene.rng);
    for (int k = 0; k < n; ++k) {
      const Vec2 p = boundary_point(scene.rng, 0.5 * r);
      const bool clear = std::none_of(beads.begin(), beads.end(),
                                      [&](const Bead& b) { return distance(b.pos, p) < 2.0 * r; });
      if (!clear) continue;
      Bead b;
      b.id = scene.next_bead_id++;
      b.pos = p;
      b.radius = r;
      beads.push_back(b);
      events.spawned.push_back(b.id);
    }
  }

  ++scene.step_index;
  scene.time = static_cast<double>(scene.step_index) * cfg.dt;
  return events;
}

double trap_stability(const Trap& trap, const SimConfig& cfg) {
  const double diameter = 2.0 * cfg.bead_radius;
  const double n = static_cast<double>(trap.roster.size());
  double score = 1.0;
  switch (trap.kind) {
    case TrapKind::line:
      if (n > 0) score *= geometry_factor(trap.length / (n * diameter));
      break;
    case TrapKind::annular: {
      if (n > 0) score *= geometry_factor(kTwoPi * trap.ring_radius / (n * diameter));
      const double dz = std::abs(trap.z_offset) - cfg.z_tolerance;
      if (dz > 0.0) score *= std::exp(-(dz / cfg.z_falloff) * (dz / cfg.z_falloff));
      break;
    }
    case TrapKind::point:
      break;
  }
  const double floor = trap.kind == TrapKind::point ? cfg.point_power_floor : cfg.structure_power_floor;
  score *= std::min(1.0, trap.power_share / floor);
  return std::clamp(score, 0.0, 1.0);
}

std::vector<Observation> render_ground_truth(const Scene& scene) {
  std::vector<Observation> out;
  out.reserve(scene.beads.size());
  for (const auto& b : scene.beads) out.push_back({b.id, b.pos});
  return out;
}

int capture_beads(Scene& scene, int trap_id, std::span<const int> bead_ids, const SimConfig& cfg,
                  BeadState state) {
  const Trap* trap = scene.find_trap(trap_id);
  if (!trap) return 0;
  const double rc = capture_radius(cfg.force, scene.bead_radius);
  int captured = 0;
  for (int bid : bead_ids) {
    const Bead* b = scene.find_bead(bid);
    if (!b) continue;
    const Vec2 anchor = trap_anchor(*scene.find_trap(trap_id), b->pos, scene.bead_radius);
    if (distance(anchor, b->pos) > rc) continue;
    scene.assign_to_trap(bid, trap_id, state);
    ++captured;
  }
  return captured;
}

double total_potential(const Scene& scene, const SimConfig& cfg) {
  const double r = scene.bead_radius;
  double u = 0.0;
  for (const auto& b : scene.beads)
    if (b.state != BeadState::free)
      if (const Trap* t = scene.find_trap(b.trap_id)) u += trap_force(*t, b.pos, cfg.force, r).potential;
  for (std::size_t i = 0; i < scene.beads.size(); ++i)
    for (std::size_t j = i + 1; j < scene.beads.size(); ++j) {
      const double overlap = 2.0 * r - distance(scene.beads[i].pos, scene.beads[j].pos);
      if (overlap > 0.0) u += 0.5 * cfg.contact_stiffness * overlap * overlap;
    }
  return u;
}

// ---------------------------------------------------------------------------

void TrajectoryLog::record(double time, const std::string& kind, int id, Vec2 pos, const std::string& state) {
  text_ += detail::format_double(time);
  text_ += '\t';
  text_ += kind;
  text_ += '\t';
  text_ += std::to_string(id);
  text_ += '\t';
  text_ += detail::format_double(pos.x);
  text_ += '\t';
  text_ += detail::format_double(pos.y);
  text_ += '\t';
  text_ += state;
  text_ += '\n';
  ++rows_;
}

void TrajectoryLog::record_event(double time, const std::string& kind, int id, const std::string& state) {
  text_ += detail::format_double(time) + '\t' + kind + '\t' + std::to_string(id) + "\t-\t-\t" + state + '\n';
  ++rows_;
}

void TrajectoryLog::record_scene(const Scene& scene) {
  for (const auto& b : scene.beads) {
    std::string state = to_string(b.state);
    if (b.state != BeadState::free) state += ":" + std::to_string(b.trap_id);
    record(scene.time, "bead", b.id, b.pos, state);
  }
  for (const auto& t : scene.traps) record(scene.time, "trap", t.id, t.center, to_string(t.kind));
}

void TrajectoryLog::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trajectory log " + path);
  out << text_;
}

std::vector<TrajectoryRow> parse_trajectory(const std::string& text) {
  std::vector<TrajectoryRow> rows;
  std::istringstream in(text);
  std::string line;
  auto num = [](std::string_view s) {
    if (s == "-") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError("bad number in trajectory log");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("time_s", 0) == 0) continue;
    const auto f = detail::split(line, '\t');
    if (f.size() != 6) throw UsageError("trajectory row needs 6 columns");
    rows.push_back({num(f[0]), std::string(f[1]), static_cast<int>(num(f[2])), num(f[3]), num(f[4]), std::string(f[5])});
  }
  return rows;
}

}  // namespace hot
