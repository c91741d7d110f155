#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hot/geometry.hpp"
#include "hot/scene.hpp"

namespace hot {

inline constexpr int kGridCols = 53;
inline constexpr int kGridRows = 40;
inline constexpr double kCellSize = 2.25;

enum class CellState : std::uint8_t { free, obstacle, inflated };

class OccupancyGrid {
 public:
  OccupancyGrid(int cols = kGridCols, int rows = kGridRows)
      : cols_(cols), rows_(rows), cells_(static_cast<std::size_t>(cols) * rows, CellState::free) {}

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < cols_ && c.row < rows_; }
  CellState at(Cell c) const { return cells_[index(c)]; }
  void set(Cell c, CellState s) { cells_[index(c)] = s; }
  bool blocked(Cell c) const { return at(c) != CellState::free; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * cols_ + c.col; }

  /// floor(p / 2.25), clamped into the grid.
  static Cell cell_of(Vec2 p);
  static Vec2 center_of(Cell c) { return {(c.col + 0.5) * kCellSize, (c.row + 0.5) * kCellSize}; }

 private:
  int cols_;
  int rows_;
  std::vector<CellState> cells_;
};

/// Marks every cell whose center lies within `r_br` of an obstacle as inflated and every
/// `extra_blocked` cell as obstacle.
OccupancyGrid build_grid(std::span<const Vec2> obstacles, double r_br = 3.0,
                         std::span<const Cell> extra_blocked = {});

/// BFS distance from the goal plus 2; zero for blocked or unreached cells.
class CostField {
 public:
  CostField(int cols = kGridCols, int rows = kGridRows)
      : cols_(cols), rows_(rows), values_(static_cast<std::size_t>(cols) * rows, 0) {}
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < cols_ && c.row < rows_; }
  int at(Cell c) const { return values_[static_cast<std::size_t>(c.row) * cols_ + c.col]; }
  void set(Cell c, int v) { values_[static_cast<std::size_t>(c.row) * cols_ + c.col] = v; }
  std::span<const int> values() const { return values_; }
  int max_value() const;

 private:
  int cols_;
  int rows_;
  std::vector<int> values_;
};

/// Throws PlanningError(blocked_goal) when the goal cell is not free.
CostField wavefront(const OccupancyGrid& grid, Cell goal);

using Path = std::vector<Cell>;

/// Steepest descent from `start`, ties broken N, E, S, W. On failure the error carries the
/// start's connected component when `grid` is given.
Path backtrack(const CostField& field, Cell start, const OccupancyGrid* grid = nullptr);

/// Cells reachable from `start` through free cells (row-major mask).
std::vector<bool> connected_component(const OccupancyGrid& grid, Cell start);

struct WaypointTrack {
  std::vector<Vec2> points;
  /// Seconds between consecutive moves.
  double delay = 0.0;
  std::size_t moves() const { return points.empty() ? 0 : points.size() - 1; }
};

/// Polyline start -> interior cell centers -> goal with straight cell runs merged, sampled
/// every `spacing` um plus the remainder at each vertex.
WaypointTrack interpolate(const Path& path, Vec2 start, Vec2 goal, double spacing = 0.5);

/// 0.5 um step divided by the speed. Throws UsageError for v <= 0.
double speed_to_delay(double v_um_per_s, double step_um = 0.5);

/// Cells whose centers lie within `radius` of any path cell center, including the path itself.
std::vector<Cell> inflate_path(const Path& path, double radius);

/// Clearance the planner keeps around a trap center: ring + bead, half line + bead, bead.
double trap_footprint(const Trap& trap, double bead_radius);

struct PlanRequest {
  int trap_id = 0;
  Vec2 start;
  Vec2 goal;
  double footprint = 0.0;
};

struct PlannedTrap {
  int trap_id = 0;
  Path path;
  CostField field;
  OccupancyGrid grid;
};

/// One trap against the obstacle set (inflated by r_br + footprint) and cells reserved by
/// earlier plans.
PlannedTrap plan_single(const PlanRequest& req, std::span<const Vec2> obstacles, std::span<const Cell> reserved,
                        double r_br = 3.0);

/// Plans in the given order; each path, inflated by its trap's footprint, is reserved for the rest.
std::vector<PlannedTrap> plan_prioritized(std::span<const PlanRequest> ordered, std::span<const Vec2> obstacles,
                                          double r_br = 3.0);

}  // namespace hot
