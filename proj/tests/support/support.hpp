#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hot/error.hpp"
#include "hot/executor.hpp"
#include "hot/planner.hpp"
#include "hot/scene.hpp"

#ifndef HOT_SOURCE_DIR
#define HOT_SOURCE_DIR "."
#endif

namespace hot::testing {

inline std::string source_path(const std::string& rel) { return std::string(HOT_SOURCE_DIR) + "/" + rel; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Hex dump with '#' comment lines.
inline std::vector<std::uint8_t> read_hex(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::uint8_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string byte;
    while (ls >> byte) out.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
  }
  return out;
}

/// Plain BFS shortest 4-connected path length between two free cells; nullopt if unreachable.
inline std::optional<int> bfs_distance(const OccupancyGrid& g, Cell start, Cell goal) {
  if (g.blocked(start) || g.blocked(goal)) return std::nullopt;
  std::vector<int> dist(static_cast<std::size_t>(g.cols()) * g.rows(), -1);
  std::deque<Cell> q{start};
  dist[g.index(start)] = 0;
  const int dc[4] = {0, 1, 0, -1}, dr[4] = {-1, 0, 1, 0};
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    if (c == goal) return dist[g.index(c)];
    for (int k = 0; k < 4; ++k) {
      Cell n{c.col + dc[k], c.row + dr[k]};
      if (!g.in_bounds(n) || g.blocked(n) || dist[g.index(n)] >= 0) continue;
      dist[g.index(n)] = dist[g.index(c)] + 1;
      q.push_back(n);
    }
  }
  return std::nullopt;
}

inline OccupancyGrid random_world(Rng& rng, double density) {
  OccupancyGrid g;
  std::bernoulli_distribution blocked(density);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c)
      if (blocked(rng)) g.set({c, r}, CellState::obstacle);
  return g;
}

/// Inflated random discs added until the blocked fraction reaches `density`.
inline OccupancyGrid clustered_world(Rng& rng, double density) {
  std::uniform_real_distribution<double> x(0.0, kGridCols * kCellSize), y(0.0, kGridRows * kCellSize), rad(2.0, 6.0);
  OccupancyGrid g;
  std::size_t blocked = 0;
  const std::size_t target = static_cast<std::size_t>(density * g.cols() * g.rows());
  while (blocked < target) {
    const Vec2 c{x(rng), y(rng)};
    const double r = rad(rng);
    for (int row = 0; row < g.rows(); ++row)
      for (int col = 0; col < g.cols(); ++col)
        if (blocked < target && !g.blocked({col, row}) && distance(OccupancyGrid::center_of({col, row}), c) <= r) {
          g.set({col, row}, CellState::obstacle);
          ++blocked;
        }
  }
  return g;
}

inline Cell random_free_cell(const OccupancyGrid& g, Rng& rng) {
  std::uniform_int_distribution<int> col(0, g.cols() - 1), row(0, g.rows() - 1);
  for (;;) {
    Cell c{col(rng), row(rng)};
    if (!g.blocked(c)) return c;
  }
}

/// Beads for a trap whose payload fills its equilibrium set.
inline std::vector<Vec2> payload_positions(const Trap& t, double r) {
  std::vector<Vec2> out;
  switch (t.kind) {
    case TrapKind::point:
      out.push_back(t.center);
      break;
    case TrapKind::annular: {
      const int n = std::max(1, static_cast<int>(std::floor(kTwoPi * t.ring_radius / (2.0 * r))));
      for (int k = 0; k < n; ++k) out.push_back(t.center + unit_from_angle(kTwoPi * k / n) * t.ring_radius);
      break;
    }
    case TrapKind::line: {
      const int n = std::max(1, static_cast<int>(std::floor(t.length / (2.0 * r) + 1e-9)));
      const Vec2 u = unit_from_angle(t.angle);
      for (int k = 0; k < n; ++k) out.push_back(t.center + u * ((k - 0.5 * (n - 1)) * 2.0 * r));
      break;
    }
  }
  return out;
}

struct WorldSpec {
  int min_traps = 1;
  int max_traps = 3;
  int min_free = 3;
  int max_free = 10;
  double min_speed = 1.5;
  double max_speed = 3.0;
  bool obstacle_trapping = false;
  double influx = 0.0;
};

/// Random valid scenario: traps of mixed kinds with full payloads, separated starts and goals,
/// free beads kept clear of every payload.
inline Scenario random_scenario(std::uint64_t seed, const WorldSpec& spec = {}) {
  Rng rng(seed);
  Scenario s;
  s.name = "random_" + std::to_string(seed);
  s.seed = seed;
  s.bead_radius = 2.5;
  s.obstacle_trapping = spec.obstacle_trapping;
  s.boundary_influx_rate = spec.influx;
  const double r = s.bead_radius;
  std::uniform_int_distribution<int> ntraps(spec.min_traps, spec.max_traps), nfree(spec.min_free, spec.max_free);
  std::uniform_int_distribution<int> kind(0, 2), beads_on_line(1, 3), quarter(0, 3);
  std::uniform_real_distribution<double> speed(spec.min_speed, spec.max_speed);
  auto footprint = [&](const Trap& t) { return trap_footprint(t, r); };
  std::vector<std::pair<Vec2, double>> starts, goals;
  auto uniform_point = [&](double margin) {
    std::uniform_real_distribution<double> x(margin, Workspace::width_um - margin), y(margin, Workspace::height_um - margin);
    return Vec2{x(rng), y(rng)};
  };
  auto clear_of = [](const std::vector<std::pair<Vec2, double>>& used, Vec2 p, double fp, double gap) {
    for (const auto& [q, f] : used)
      if (distance(p, q) < fp + f + gap) return false;
    return true;
  };
  const int n = ntraps(rng);
  for (int i = 0; i < n; ++i) {
    Trap t;
    t.id = i;
    t.kind = static_cast<TrapKind>(kind(rng));
    if (t.kind == TrapKind::annular) {
      t.topological_charge = 15;
      t.ring_radius = ring_radius_for_charge(15);
    } else if (t.kind == TrapKind::line) {
      t.length = 2.0 * r * beads_on_line(rng);
      t.angle = quarter(rng) * 0.5 * kPi;
    }
    const double fp = footprint(t);
    Vec2 start, goal;
    int tries = 0;
    do {
      start = uniform_point(fp + 4.0);
    } while (!clear_of(starts, start, fp, 6.0) && ++tries < 1000);
    tries = 0;
    do {
      goal = uniform_point(fp + 4.0);
    } while ((!clear_of(goals, goal, fp, 6.0) || !clear_of(starts, goal, fp, 6.0)) && ++tries < 1000);
    t.center = start;
    starts.emplace_back(start, fp);
    goals.emplace_back(goal, fp);
    s.traps.push_back(t);
    s.goals.push_back(goal);
    s.speeds.push_back(speed(rng));
    s.priority.push_back(i);
  }
  std::shuffle(s.priority.begin(), s.priority.end(), rng);
  int next_bead = 0;
  for (auto& t : s.traps) {
    for (Vec2 p : payload_positions(t, r)) {
      t.roster.push_back(next_bead);
      s.beads.push_back({next_bead++, p, r});
    }
  }
  const int nf = nfree(rng);
  for (int k = 0, tries = 0; k < nf && tries < 5000; ++tries) {
    Vec2 p = uniform_point(r + 1.0);
    bool ok = clear_of(starts, p, r, 2.0) && clear_of(goals, p, r, 0.0);
    for (const auto& b : s.beads) ok = ok && distance(b.pos, p) >= 2.0 * r + 2.0;
    if (!ok) continue;
    s.beads.push_back({next_bead++, p, r});
    ++k;
  }
  return s;
}

/// Canonical phase order; ObstacleTrapping only with obstacle trapping on.
inline bool phase_order_ok(const std::vector<Phase>& seen, bool obstacle_trapping) {
  std::vector<Phase> canon = {Phase::TrapGeneration, Phase::ObstacleDetection, Phase::PriorityPlanning,
                              Phase::SecondaryPlanning};
  if (obstacle_trapping) canon.push_back(Phase::ObstacleTrapping);
  canon.push_back(Phase::PathExecution);
  canon.push_back(Phase::Done);
  if (seen.empty()) return false;
  std::size_t i = 0;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (seen[k] == Phase::Failed) return k + 1 == seen.size() && k > 0;
    if (i >= canon.size() || seen[k] != canon[i]) return false;
    ++i;
  }
  return seen.back() == Phase::Done && i == canon.size();
}

inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t idx = std::min(v.size() - 1, static_cast<std::size_t>(std::ceil(p * v.size())) - 1);
  return v[idx];
}

}  // namespace hot::testing
