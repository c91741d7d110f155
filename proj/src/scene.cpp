#include "hot/scene.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hot/error.hpp"
#include "text_util.hpp"

namespace hot {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::range: return "range";
    case ErrorCode::planning: return "planning";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::phase_mismatch: return "phase_mismatch";
    case ErrorCode::run_failed: return "run_failed";
  }
  return "unknown";
}

const char* to_string(PlanningCause cause) {
  switch (cause) {
    case PlanningCause::blocked_start: return "blocked_start";
    case PlanningCause::blocked_goal: return "blocked_goal";
    case PlanningCause::inflation: return "inflation";
    case PlanningCause::prior_paths: return "prior_paths";
  }
  return "unknown";
}

const char* to_string(BeadState s) {
  switch (s) {
    case BeadState::free: return "free";
    case BeadState::trapped: return "trapped";
    case BeadState::obstacle_trapped: return "obstacle_trapped";
  }
  return "unknown";
}

const char* to_string(TrapKind k) {
  switch (k) {
    case TrapKind::point: return "point";
    case TrapKind::annular: return "annular";
    case TrapKind::line: return "line";
  }
  return "unknown";
}

std::optional<TrapKind> trap_kind_from_string(std::string_view s) {
  if (s == "point") return TrapKind::point;
  if (s == "annular") return TrapKind::annular;
  if (s == "line") return TrapKind::line;
  return std::nullopt;
}

std::pair<int, int> Workspace::to_pixel(Vec2 um) {
  const Vec2 px = to_camera_px(um);
  const int col = std::clamp(static_cast<int>(std::floor(px.x)), 0, camera_width_px - 1);
  const int row = std::clamp(static_cast<int>(std::floor(px.y)), 0, camera_height_px - 1);
  return {col, row};
}

void validate_trap(const Trap& t, const std::string& field) {
  auto fail = [&](const std::string& sub, const std::string& what) {
    throw ScenarioError(ErrorCode::validation, field + "." + sub, what);
  };
  if (!Workspace::contains(t.center)) fail("center", "start pose outside the workspace");
  if (t.power_share < 0.0 || t.power_share > 1.0) fail("power_share", "must lie in [0, 1]");
  switch (t.kind) {
    case TrapKind::annular:
      if (t.topological_charge < 1) fail("l", "annular trap requires l >= 1");
      if (!(t.ring_radius > 0.0)) fail("ring_radius", "must be > 0");
      break;
    case TrapKind::line:
      if (!(t.length > 0.0)) fail("length", "line trap requires length > 0");
      break;
    case TrapKind::point:
      break;
  }
}

namespace {

using detail::format_double;

struct LineCursor {
  std::string source;
  int number = 0;
};

[[noreturn]] void parse_fail(const LineCursor& at, const std::string& field, const std::string& what) {
  throw ScenarioError(ErrorCode::parse, field, what + " (" + at.source + ")", at.number);
}

double parse_number(const LineCursor& at, const std::string& field, std::string_view tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    parse_fail(at, field, "expected a number, got '" + std::string(tok) + "'");
  return v;
}

long long parse_integer(const LineCursor& at, const std::string& field, std::string_view tok) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    parse_fail(at, field, "expected an integer, got '" + std::string(tok) + "'");
  return v;
}

bool parse_bool(const LineCursor& at, const std::string& field, std::string_view tok) {
  if (tok == "on" || tok == "true" || tok == "1") return true;
  if (tok == "off" || tok == "false" || tok == "0") return false;
  parse_fail(at, field, "expected on/off, got '" + std::string(tok) + "'");
}

void expect_args(const LineCursor& at, const std::string& key, const std::vector<std::string_view>& toks,
                 std::size_t n) {
  if (toks.size() != n + 1)
    parse_fail(at, key, "expected " + std::to_string(n) + " value(s), got " + std::to_string(toks.size() - 1));
}

Trap parse_trap(const LineCursor& at, const std::vector<std::string_view>& toks, std::size_t index) {
  const std::string field = "trap[" + std::to_string(index) + "]";
  if (toks.size() < 5) parse_fail(at, field, "expected 'trap <id> <kind> <x> <y> [key=value...]'");
  Trap t;
  t.id = static_cast<int>(parse_integer(at, field + ".id", toks[1]));
  auto kind = trap_kind_from_string(toks[2]);
  if (!kind) parse_fail(at, field + ".kind", "unknown trap kind '" + std::string(toks[2]) + "'");
  t.kind = *kind;
  t.center = {parse_number(at, field + ".x", toks[3]), parse_number(at, field + ".y", toks[4])};
  bool ring_given = false;
  for (std::size_t i = 5; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string_view::npos) parse_fail(at, field, "expected key=value, got '" + std::string(toks[i]) + "'");
    const std::string_view key = toks[i].substr(0, eq);
    const std::string_view val = toks[i].substr(eq + 1);
    const std::string kf = field + "." + std::string(key);
    if (key == "l") {
      t.topological_charge = static_cast<int>(parse_integer(at, kf, val));
    } else if (key == "ring_radius") {
      t.ring_radius = parse_number(at, kf, val);
      ring_given = true;
    } else if (key == "z") {
      t.z_offset = parse_number(at, kf, val);
    } else if (key == "length") {
      t.length = parse_number(at, kf, val);
    } else if (key == "angle") {
      t.angle = parse_number(at, kf, val);
    } else if (key == "roster") {
      for (auto id : detail::split(val, ',')) t.roster.push_back(static_cast<int>(parse_integer(at, kf, id)));
    } else {
      parse_fail(at, kf, "unknown trap key");
    }
  }
  if (t.kind == TrapKind::annular && !ring_given) t.ring_radius = ring_radius_for_charge(t.topological_charge);
  return t;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
  Scenario s;
  LineCursor at{source, 0};
  bool header = false;
  std::set<std::string> seen_singletons;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++at.number;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    const std::string key(toks[0]);
    if (!header) {
      if (key != "hot-scenario" || toks.size() != 2)
        parse_fail(at, "header", "first line must be 'hot-scenario <version>'");
      const auto v = parse_integer(at, "header", toks[1]);
      if (v != kScenarioFormatVersion)
        parse_fail(at, "header", "unsupported format version " + std::to_string(v));
      header = true;
      continue;
    }
    auto singleton = [&] {
      if (!seen_singletons.insert(key).second) parse_fail(at, key, "given more than once");
    };
    if (key == "name") {
      singleton();
      expect_args(at, key, toks, 1);
      s.name = std::string(toks[1]);
    } else if (key == "seed") {
      singleton();
      expect_args(at, key, toks, 1);
      const auto v = parse_integer(at, key, toks[1]);
      if (v < 0) parse_fail(at, key, "must be non-negative");
      s.seed = static_cast<std::uint64_t>(v);
    } else if (key == "bead_radius") {
      singleton();
      expect_args(at, key, toks, 1);
      s.bead_radius = parse_number(at, key, toks[1]);
    } else if (key == "obstacle_trapping") {
      singleton();
      expect_args(at, key, toks, 1);
      s.obstacle_trapping = parse_bool(at, key, toks[1]);
    } else if (key == "boundary_influx_rate") {
      singleton();
      expect_args(at, key, toks, 1);
      s.boundary_influx_rate = parse_number(at, key, toks[1]);
    } else if (key == "bead") {
      const std::string field = "bead[" + std::to_string(s.beads.size()) + "]";
      expect_args(at, field, toks, 3);
      Bead b;
      b.id = static_cast<int>(parse_integer(at, field + ".id", toks[1]));
      b.pos = {parse_number(at, field + ".x", toks[2]), parse_number(at, field + ".y", toks[3])};
      s.beads.push_back(b);
    } else if (key == "trap") {
      s.traps.push_back(parse_trap(at, toks, s.traps.size()));
    } else if (key == "goal") {
      const std::string field = "goal[" + std::to_string(s.goals.size()) + "]";
      expect_args(at, field, toks, 2);
      s.goals.push_back({parse_number(at, field + ".x", toks[1]), parse_number(at, field + ".y", toks[2])});
    } else if (key == "speed") {
      const std::string field = "speed[" + std::to_string(s.speeds.size()) + "]";
      expect_args(at, field, toks, 1);
      s.speeds.push_back(parse_number(at, field, toks[1]));
    } else if (key == "priority") {
      singleton();
      for (std::size_t i = 1; i < toks.size(); ++i)
        s.priority.push_back(static_cast<int>(parse_integer(at, key, toks[i])));
    } else {
      parse_fail(at, key, "unknown key");
    }
  }
  if (!header) {
    at.number = 1;
    parse_fail(at, "header", "missing 'hot-scenario <version>' header");
  }
  for (auto& b : s.beads) b.radius = s.bead_radius;
  if (s.priority.empty())
    for (std::size_t i = 0; i < s.traps.size(); ++i) s.priority.push_back(static_cast<int>(i));
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ScenarioError(ErrorCode::validation, field, what);
  };
  if (!(s.bead_radius > 0.0)) fail("bead_radius", "must be > 0");
  if (s.boundary_influx_rate < 0.0) fail("boundary_influx_rate", "must be >= 0");
  std::unordered_set<int> bead_ids;
  for (std::size_t i = 0; i < s.beads.size(); ++i) {
    const auto& b = s.beads[i];
    const std::string field = "bead[" + std::to_string(i) + "]";
    if (!bead_ids.insert(b.id).second) fail(field + ".id", "duplicate bead id " + std::to_string(b.id));
    if (b.id < 0) fail(field + ".id", "must be non-negative");
    if (!Workspace::contains(b.pos)) fail(field + ".pos", "outside the workspace");
  }
  if (s.goals.size() != s.traps.size())
    fail("goal", std::to_string(s.goals.size()) + " goals for " + std::to_string(s.traps.size()) + " traps");
  if (s.speeds.size() != s.traps.size())
    fail("speed", std::to_string(s.speeds.size()) + " speeds for " + std::to_string(s.traps.size()) + " traps");
  std::unordered_set<int> trap_ids;
  std::unordered_set<int> rostered;
  for (std::size_t i = 0; i < s.traps.size(); ++i) {
    const auto& t = s.traps[i];
    const std::string field = "trap[" + std::to_string(i) + "]";
    if (!trap_ids.insert(t.id).second) fail(field + ".id", "duplicate trap id " + std::to_string(t.id));
    validate_trap(t, field);
    for (int id : t.roster) {
      if (!bead_ids.count(id)) fail(field + ".roster", "unknown bead id " + std::to_string(id));
      if (!rostered.insert(id).second) fail(field + ".roster", "bead " + std::to_string(id) + " already in a roster");
    }
    if (!Workspace::contains(s.goals[i])) fail("goal[" + std::to_string(i) + "]", "outside the workspace");
    if (!(s.speeds[i] > 0.0)) fail("speed[" + std::to_string(i) + "]", "must be > 0");
  }
  if (s.priority.size() != s.traps.size()) fail("priority", "must list every trap index exactly once");
  std::vector<int> sorted = s.priority;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<int>(i)) fail("priority", "not a permutation of trap indices");
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "hot-scenario " << kScenarioFormatVersion << "\n";
  if (!s.name.empty()) out << "name " << s.name << "\n";
  out << "seed " << s.seed << "\n";
  out << "bead_radius " << format_double(s.bead_radius) << "\n";
  out << "obstacle_trapping " << (s.obstacle_trapping ? "on" : "off") << "\n";
  out << "boundary_influx_rate " << format_double(s.boundary_influx_rate) << "\n";
  for (const auto& b : s.beads)
    out << "bead " << b.id << " " << format_double(b.pos.x) << " " << format_double(b.pos.y) << "\n";
  for (const auto& t : s.traps) {
    out << "trap " << t.id << " " << to_string(t.kind) << " " << format_double(t.center.x) << " "
        << format_double(t.center.y);
    switch (t.kind) {
      case TrapKind::annular:
        out << " l=" << t.topological_charge << " ring_radius=" << format_double(t.ring_radius)
            << " z=" << format_double(t.z_offset);
        break;
      case TrapKind::line:
        out << " length=" << format_double(t.length) << " angle=" << format_double(t.angle);
        break;
      case TrapKind::point:
        if (t.z_offset != 0.0) out << " z=" << format_double(t.z_offset);
        break;
    }
    if (!t.roster.empty()) {
      out << " roster=";
      for (std::size_t i = 0; i < t.roster.size(); ++i) out << (i ? "," : "") << t.roster[i];
    }
    out << "\n";
  }
  for (const auto& g : s.goals) out << "goal " << format_double(g.x) << " " << format_double(g.y) << "\n";
  for (double v : s.speeds) out << "speed " << format_double(v) << "\n";
  if (!s.priority.empty()) {
    out << "priority";
    for (int p : s.priority) out << " " << p;
    out << "\n";
  }
  return out.str();
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scenario file " + path.string());
  out << format_scenario(s);
}

Bead* Scene::find_bead(int id) {
  for (auto& b : beads)
    if (b.id == id) return &b;
  return nullptr;
}
const Bead* Scene::find_bead(int id) const { return const_cast<Scene*>(this)->find_bead(id); }
Trap* Scene::find_trap(int id) {
  for (auto& t : traps)
    if (t.id == id) return &t;
  return nullptr;
}
const Trap* Scene::find_trap(int id) const { return const_cast<Scene*>(this)->find_trap(id); }

void Scene::remove_trap(int id) {
  auto it = std::find_if(traps.begin(), traps.end(), [id](const Trap& t) { return t.id == id; });
  if (it == traps.end()) return;
  for (int bid : it->roster)
    if (auto* b = find_bead(bid)) {
      b->state = BeadState::free;
      b->trap_id = -1;
    }
  traps.erase(it);
}

void Scene::assign_to_trap(int bead_id, int trap_id, BeadState state) {
  auto* b = find_bead(bead_id);
  auto* t = find_trap(trap_id);
  if (!b || !t) return;
  if (b->state != BeadState::free) release_bead(bead_id);
  b->state = state;
  b->trap_id = trap_id;
  t->roster.push_back(bead_id);
}

void Scene::release_bead(int bead_id) {
  auto* b = find_bead(bead_id);
  if (!b) return;
  if (auto* t = find_trap(b->trap_id)) std::erase(t->roster, bead_id);
  b->state = BeadState::free;
  b->trap_id = -1;
}

Scene make_scene(const Scenario& s) {
  Scene scene;
  scene.bead_radius = s.bead_radius;
  scene.rng.seed(s.seed);
  scene.beads = s.beads;
  for (auto& b : scene.beads) {
    b.radius = s.bead_radius;
    b.state = BeadState::free;
    b.trap_id = -1;
    scene.next_bead_id = std::max(scene.next_bead_id, b.id + 1);
  }
  for (const auto& t : s.traps) {
    Trap trap = t;
    trap.roster.clear();
    trap.power_share = s.traps.empty() ? 1.0 : 1.0 / static_cast<double>(s.traps.size());
    scene.traps.push_back(trap);
    scene.next_trap_id = std::max(scene.next_trap_id, t.id + 1);
    for (int bid : t.roster) scene.assign_to_trap(bid, t.id);
  }
  return scene;
}

std::vector<int> derive_obstacles(std::span<const Observation> detected, std::span<const Trap> traps) {
  std::unordered_set<int> rostered;
  for (const auto& t : traps) rostered.insert(t.roster.begin(), t.roster.end());
  std::vector<int> out;
  for (const auto& o : detected)
    if (!rostered.count(o.id)) out.push_back(o.id);
  return out;
}

std::vector<int> derive_obstacles(const Scene& scene) {
  std::vector<Observation> all;
  all.reserve(scene.beads.size());
  for (const auto& b : scene.beads) all.push_back({b.id, b.pos});
  return derive_obstacles(all, scene.traps);
}

}  // namespace hot
