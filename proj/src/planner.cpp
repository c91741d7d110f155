#include "hot/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <string>

#include "hot/error.hpp"

namespace hot {

namespace {

// N, E, S, W with N toward smaller row (image up).
constexpr std::array<Cell, 4> kNeighbours{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

Cell offset(Cell c, Cell d) { return {c.col + d.col, c.row + d.row}; }

std::string cell_text(Cell c) { return "(" + std::to_string(c.col) + ", " + std::to_string(c.row) + ")"; }

}  // namespace

Cell OccupancyGrid::cell_of(Vec2 p) {
  const int col = std::clamp(static_cast<int>(std::floor(p.x / kCellSize)), 0, kGridCols - 1);
  const int row = std::clamp(static_cast<int>(std::floor(p.y / kCellSize)), 0, kGridRows - 1);
  return {col, row};
}

OccupancyGrid build_grid(std::span<const Vec2> obstacles, double r_br, std::span<const Cell> extra_blocked) {
  OccupancyGrid grid;
  for (Vec2 o : obstacles) {
    const int reach = static_cast<int>(std::ceil(r_br / kCellSize)) + 1;
    const Cell oc = OccupancyGrid::cell_of(o);
    for (int row = oc.row - reach; row <= oc.row + reach; ++row)
      for (int col = oc.col - reach; col <= oc.col + reach; ++col) {
        const Cell c{col, row};
        if (!grid.in_bounds(c)) continue;
        if (distance(OccupancyGrid::center_of(c), o) <= r_br && grid.at(c) == CellState::free)
          grid.set(c, CellState::inflated);
      }
  }
  for (Cell c : extra_blocked)
    if (grid.in_bounds(c)) grid.set(c, CellState::obstacle);
  return grid;
}

int CostField::max_value() const { return values_.empty() ? 0 : *std::max_element(values_.begin(), values_.end()); }

CostField wavefront(const OccupancyGrid& grid, Cell goal) {
  if (!grid.in_bounds(goal) || grid.blocked(goal))
    throw PlanningError("goal cell " + cell_text(goal) + " is blocked", -1, PlanningCause::blocked_goal);
  CostField field(grid.cols(), grid.rows());
  std::deque<Cell> queue{goal};
  field.set(goal, 2);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (Cell d : kNeighbours) {
      const Cell n = offset(c, d);
      if (!grid.in_bounds(n) || grid.blocked(n) || field.at(n) != 0) continue;
      field.set(n, field.at(c) + 1);
      queue.push_back(n);
    }
  }
  return field;
}

std::vector<bool> connected_component(const OccupancyGrid& grid, Cell start) {
  std::vector<bool> mask(static_cast<std::size_t>(grid.cols()) * grid.rows(), false);
  if (!grid.in_bounds(start) || grid.blocked(start)) return mask;
  std::deque<Cell> queue{start};
  mask[grid.index(start)] = true;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (Cell d : kNeighbours) {
      const Cell n = offset(c, d);
      if (!grid.in_bounds(n) || grid.blocked(n) || mask[grid.index(n)]) continue;
      mask[grid.index(n)] = true;
      queue.push_back(n);
    }
  }
  return mask;
}

Path backtrack(const CostField& field, Cell start, const OccupancyGrid* grid) {
  if (!field.in_bounds(start) || field.at(start) == 0) {
    const bool blocked = grid && grid->in_bounds(start) && grid->blocked(start);
    throw PlanningError("no path from start cell " + cell_text(start), -1,
                        blocked ? PlanningCause::blocked_start : PlanningCause::inflation,
                        grid ? connected_component(*grid, start) : std::vector<bool>{});
  }
  Path path{start};
  Cell c = start;
  while (field.at(c) != 2) {
    Cell best = c;
    int best_v = field.at(c);
    for (Cell d : kNeighbours) {
      const Cell n = offset(c, d);
      if (!field.in_bounds(n)) continue;
      const int v = field.at(n);
      if (v != 0 && v < best_v) {
        best = n;
        best_v = v;
      }
    }
    c = best;
    path.push_back(c);
  }
  return path;
}

WaypointTrack interpolate(const Path& path, Vec2 start, Vec2 goal, double spacing) {
  if (path.empty()) throw UsageError("interpolate: empty path");
  if (!(spacing > 0.0)) throw UsageError("interpolate: spacing must be > 0");
  const std::size_t n = path.size();
  // Vertices: start pose, then interior centers that turn, then goal pose.
  std::vector<Vec2> vertices{start};
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const bool interior_run = i >= 2 && i + 2 < n;
    if (interior_run) {
      const Cell a{path[i].col - path[i - 1].col, path[i].row - path[i - 1].row};
      const Cell b{path[i + 1].col - path[i].col, path[i + 1].row - path[i].row};
      if (a == b) continue;
    }
    vertices.push_back(OccupancyGrid::center_of(path[i]));
  }
  vertices.push_back(goal);

  WaypointTrack track;
  track.points.push_back(start);
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    const Vec2 a = vertices[i];
    const Vec2 b = vertices[i + 1];
    const double len = distance(a, b);
    if (len == 0.0) continue;
    const Vec2 dir = (b - a) / len;
    for (int k = 1;; ++k) {
      const double s = k * spacing;
      if (s >= len - 1e-9) break;
      track.points.push_back(a + dir * s);
    }
    track.points.push_back(b);
  }
  return track;
}

double speed_to_delay(double v_um_per_s, double step_um) {
  if (!(v_um_per_s > 0.0)) throw UsageError("speed must be > 0");
  return step_um / v_um_per_s;
}

std::vector<Cell> inflate_path(const Path& path, double radius) {
  OccupancyGrid mark;
  std::vector<Cell> out;
  const int reach = static_cast<int>(std::ceil(radius / kCellSize)) + 1;
  for (Cell p : path) {
    const Vec2 pc = OccupancyGrid::center_of(p);
    for (int row = p.row - reach; row <= p.row + reach; ++row)
      for (int col = p.col - reach; col <= p.col + reach; ++col) {
        const Cell c{col, row};
        if (!mark.in_bounds(c) || mark.blocked(c)) continue;
        if (distance(OccupancyGrid::center_of(c), pc) > radius && c != p) continue;
        mark.set(c, CellState::obstacle);
        out.push_back(c);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double trap_footprint(const Trap& trap, double bead_radius) {
  switch (trap.kind) {
    case TrapKind::annular: return trap.ring_radius + bead_radius;
    case TrapKind::line: return 0.5 * trap.length + bead_radius;
    case TrapKind::point: return bead_radius;
  }
  return bead_radius;
}

PlannedTrap plan_single(const PlanRequest& req, std::span<const Vec2> obstacles, std::span<const Cell> reserved,
                        double r_br) {
  const double clearance = r_br + req.footprint;
  OccupancyGrid grid = build_grid(obstacles, clearance, reserved);
  const Cell start = OccupancyGrid::cell_of(req.start);
  const Cell goal = OccupancyGrid::cell_of(req.goal);
  const std::string who = "trap " + std::to_string(req.trap_id);

  // Attribute a failure to prior paths when the obstacle-only grid would have succeeded.
  auto blame = [&](PlanningCause own) {
    if (reserved.empty()) return own;
    const OccupancyGrid bare = build_grid(obstacles, clearance);
    if (bare.blocked(start) || bare.blocked(goal)) return own;
    const CostField f = wavefront(bare, goal);
    return f.at(start) != 0 ? PlanningCause::prior_paths : own;
  };

  if (grid.blocked(goal)) {
    const auto cause = blame(PlanningCause::blocked_goal);
    throw PlanningError(who + ": goal cell " + cell_text(goal) + " blocked by " +
                            (cause == PlanningCause::prior_paths ? "prior paths" : "obstacle inflation"),
                        req.trap_id, cause);
  }
  if (grid.blocked(start)) {
    const auto cause = blame(PlanningCause::blocked_start);
    throw PlanningError(who + ": start cell " + cell_text(start) + " blocked by " +
                            (cause == PlanningCause::prior_paths ? "prior paths" : "obstacle inflation"),
                        req.trap_id, cause, connected_component(grid, start));
  }
  CostField field = wavefront(grid, goal);
  if (field.at(start) == 0) {
    const auto cause = blame(PlanningCause::inflation);
    throw PlanningError(who + ": goal unreachable because of " +
                            (cause == PlanningCause::prior_paths ? "prior paths" : "obstacle inflation"),
                        req.trap_id, cause, connected_component(grid, start));
  }
  Path path = backtrack(field, start, &grid);
  return {req.trap_id, std::move(path), std::move(field), std::move(grid)};
}

std::vector<PlannedTrap> plan_prioritized(std::span<const PlanRequest> ordered, std::span<const Vec2> obstacles,
                                          double r_br) {
  if (ordered.empty()) throw UsageError("plan_prioritized: no traps");
  std::vector<PlannedTrap> out;
  std::vector<Cell> reserved;
  for (const auto& req : ordered) {
    out.push_back(plan_single(req, obstacles, reserved, r_br));
    const auto cells = inflate_path(out.back().path, req.footprint);
    reserved.insert(reserved.end(), cells.begin(), cells.end());
  }
  return out;
}

}  // namespace hot
