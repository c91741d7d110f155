#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hot/geometry.hpp"

namespace hot {

/// Camera field of view. Origin top-left, x rightward, y downward (image indexing).
struct Workspace {
  static constexpr double width_um = 120.0;
  static constexpr double height_um = 90.0;
  static constexpr int camera_width_px = 640;
  static constexpr int camera_height_px = 480;
  static constexpr double um_per_px = width_um / camera_width_px;  // 0.1875

  static bool contains(Vec2 p) {
    return p.x >= 0.0 && p.x < width_um && p.y >= 0.0 && p.y < height_um;
  }
  /// Continuous camera coordinates; pixel (i, j) spans [i, i+1) x [j, j+1).
  static Vec2 to_camera_px(Vec2 um) { return um / um_per_px; }
  static Vec2 to_um(Vec2 px) { return px * um_per_px; }
  /// Integer pixel containing `um`, clamped to the frame.
  static std::pair<int, int> to_pixel(Vec2 um);
  static Vec2 pixel_center_um(int col, int row) {
    return {(col + 0.5) * um_per_px, (row + 0.5) * um_per_px};
  }
};

static_assert(Workspace::um_per_px == 0.1875);
static_assert(Workspace::height_um / Workspace::camera_height_px == Workspace::um_per_px);

enum class BeadState : std::uint8_t { free, trapped, obstacle_trapped };

const char* to_string(BeadState s);

struct Bead {
  int id = 0;
  Vec2 pos;
  double radius = 2.5;
  BeadState state = BeadState::free;
  int trap_id = -1;  // valid when state != free

  friend bool operator==(const Bead&, const Bead&) = default;
};

enum class TrapKind : std::uint8_t { point = 0, annular = 1, line = 2 };

const char* to_string(TrapKind k);
std::optional<TrapKind> trap_kind_from_string(std::string_view s);

struct Trap {
  int id = 0;
  TrapKind kind = TrapKind::point;
  Vec2 center;
  // annular
  int topological_charge = 0;
  double ring_radius = 0.0;
  double z_offset = 0.0;
  // line
  double length = 0.0;
  double angle = 0.0;

  std::vector<int> roster;
  double power_share = 1.0;
  /// Set on point traps created to hold obstacles.
  bool holds_obstacle = false;

  friend bool operator==(const Trap&, const Trap&) = default;
};

/// Ring radius for charge `l` under the linear model ring_radius = alpha * l.
inline double ring_radius_for_charge(int l, double alpha_um = 0.27) { return alpha_um * l; }

/// Throws ScenarioError(validation) naming `field` when the trap violates its kind constraints.
void validate_trap(const Trap& t, const std::string& field);

using Rng = std::mt19937_64;

/// Experiment description loaded from a `.scenario` file.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double bead_radius = 2.5;
  std::vector<Bead> beads;
  /// Trap centers are the start poses S_i.
  std::vector<Trap> traps;
  /// Goal poses G_i, index-matched to `traps`.
  std::vector<Vec2> goals;
  /// Permutation of trap indices; first entry is planned first.
  std::vector<int> priority;
  /// um/s per trap, index-matched to `traps`.
  std::vector<double> speeds;
  bool obstacle_trapping = false;
  double boundary_influx_rate = 0.05;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline constexpr int kScenarioFormatVersion = 1;

Scenario parse_scenario(std::string_view text, const std::string& source = "<memory>");
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical text form; parse_scenario(format_scenario(s)) == s.
std::string format_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);
void validate_scenario(const Scenario& s);

/// Authoritative simulation state. Copies are immutable snapshots.
struct Scene {
  std::vector<Bead> beads;
  std::vector<Trap> traps;
  double bead_radius = 2.5;
  double time = 0.0;
  std::uint64_t step_index = 0;
  int next_bead_id = 0;
  int next_trap_id = 0;
  Rng rng;

  Bead* find_bead(int id);
  const Bead* find_bead(int id) const;
  Trap* find_trap(int id);
  const Trap* find_trap(int id) const;
  /// Removes the trap and frees its roster.
  void remove_trap(int id);
  void assign_to_trap(int bead_id, int trap_id, BeadState state = BeadState::trapped);
  void release_bead(int bead_id);
};

/// Builds the initial scene: beads placed, traps at their start poses, rosters bound and
/// power split evenly. Scenario invariants must already hold.
Scene make_scene(const Scenario& s);

/// Position observation with an identity (ground-truth bead id or tracker id).
struct Observation {
  int id = 0;
  Vec2 pos;
};

/// Detected set minus every id present in a trap roster (the obstacle set O).
std::vector<int> derive_obstacles(std::span<const Observation> detected,
                                  std::span<const Trap> traps);
/// Ground-truth form: every bead not bound to any roster.
std::vector<int> derive_obstacles(const Scene& scene);

}  // namespace hot
