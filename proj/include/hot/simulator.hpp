#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hot/optics.hpp"
#include "hot/scene.hpp"

namespace hot {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

/// Overdamped Langevin parameters. Units: um, s, pN; viscosity in Pa*s (== pN*s/um^2).
struct SimConfig {
  double dt = 1e-3;
  double temperature = 295.0;
  double viscosity = 1e-3;
  double bead_radius = 2.5;
  double boundary_influx_rate = 0.05;
  /// Forces D = 0 when false.
  bool thermal = true;

  TrapForceConfig force;
  /// Linear contact spring between overlapping beads (pN/um).
  double contact_stiffness = 10.0;
  /// Hard-sphere projection keeps pairs at >= 2r * (1 - overlap_tolerance).
  double overlap_tolerance = 0.005;
  int projection_sweeps = 20;

  /// Escape hazard at score 0 (1/s).
  double escape_rate = 0.2;
  double structure_power_floor = 0.18;
  double point_power_floor = 0.02;
  /// Annular traps lose stability beyond this |z_offset| (um).
  double z_tolerance = 3.0;
  double z_falloff = 2.0;

  /// Optional extra force on every bead; off when empty.
  std::function<Vec2(const Scene&, const Bead&)> spurious_force;

  double kT() const { return kBoltzmann * temperature * 1e18; }  // pN*um
  double drag() const { return 6.0 * kPi * viscosity * bead_radius; }
  double diffusion() const { return thermal ? kT() / drag() : 0.0; }
  /// Throws UsageError when parameters are out of range or dt is too coarse.
  void validate() const;
};

struct EscapeEvent {
  int bead_id;
  int trap_id;
};

struct StepEvents {
  std::vector<EscapeEvent> escapes;
  std::vector<int> spawned;
  std::vector<int> removed;
};

/// Advances the scene by one dt.
StepEvents step(Scene& scene, const SimConfig& cfg);

/// Geometry, depth and power stability in [0, 1].
double trap_stability(const Trap& trap, const SimConfig& cfg);

/// Exact bead positions.
std::vector<Observation> render_ground_truth(const Scene& scene);

/// Binds each listed bead lying within the capture radius of the trap's anchor set.
/// Returns the number of beads captured.
int capture_beads(Scene& scene, int trap_id, std::span<const int> bead_ids, const SimConfig& cfg,
                  BeadState state = BeadState::trapped);

/// Trap potential of bound beads plus contact energy.
double total_potential(const Scene& scene, const SimConfig& cfg);

/// Append-only columnar record stream: time_s, record, id, x_um, y_um, state.
class TrajectoryLog {
 public:
  static constexpr const char* kHeader = "time_s\trecord\tid\tx_um\ty_um\tstate";

  void record_scene(const Scene& scene);
  void record(double time, const std::string& kind, int id, Vec2 pos, const std::string& state);
  /// Row without a position (phase changes, notes).
  void record_event(double time, const std::string& kind, int id, const std::string& state);

  const std::string& text() const { return text_; }
  std::size_t rows() const { return rows_; }
  void write(const std::string& path) const;

 private:
  std::string text_ = std::string("# hot-trajectory 1\n") + kHeader + "\n";
  std::size_t rows_ = 0;
};

struct TrajectoryRow {
  double time;
  std::string kind;
  int id;
  double x;  // NaN when absent
  double y;
  std::string state;
};

std::vector<TrajectoryRow> parse_trajectory(const std::string& text);

}  // namespace hot
