#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hot/planner.hpp"
#include "hot/scene.hpp"
#include "hot/simulator.hpp"
#include "hot/slm_link.hpp"
#include "hot/vision.hpp"

namespace hot {

enum class Phase {
  TrapGeneration,
  ObstacleDetection,
  PriorityPlanning,
  SecondaryPlanning,
  ObstacleTrapping,
  PathExecution,
  Done,
  Failed,
};

const char* to_string(Phase p);

struct PowerWeights {
  double point = 1.0;
  double line = 2.0;
  double annular = 3.0;
};

struct ExecutorConfig {
  SimConfig sim;
  VisionConfig vision;
  TrackerConfig tracker;
  PowerWeights weights;
  double r_br = 3.0;
  double time_cap = 120.0;
  /// Camera cadence during the stepped phases.
  double vision_period = 0.1;
  bool vision_during_execution = true;
  /// Step 2 from ground truth instead of the camera (diagnostics only).
  bool oracle_detection = false;
  double escape_hold = 2.0;
  double recapture_min = 0.5;
  double obstacle_settle = 0.25;
  /// Trajectory-log sampling period; 0 logs every step.
  double log_period = 0.1;
  /// Time-lapse interval during PathExecution; 0 disables.
  double timelapse_interval = 0.0;
  /// How far the executor may move a blocked goal, in cells (8-neighbourhood).
  int goal_nudge_cells = 1;
};

struct LoopStats {
  double mean_ms = 0.0;
  double sd_ms = 0.0;
  std::size_t samples = 0;
};

class LoopTimer {
 public:
  void add(double ms) { samples_.push_back(ms); }
  LoopStats stats() const;

 private:
  std::vector<double> samples_;
};

struct GoalNudge {
  int trap_id;
  Vec2 from;
  Vec2 to;
};

struct PhaseEntry {
  Phase phase;
  double time;
};

struct RunMetrics {
  Phase final_phase = Phase::TrapGeneration;
  std::string failure_reason;
  double assembly_time = 0.0;  // sim seconds spent in PathExecution
  double sim_time = 0.0;
  double wall_time = 0.0;
  LoopStats detection;
  LoopStats tracking;
  LoopStats planning;
  LoopStats slm;
  /// Smallest distance between any executed waypoint and a plan-time obstacle center.
  double min_obstacle_clearance = 0.0;
  /// Largest displacement of an obstacle-trapped bead during PathExecution.
  double max_obstacle_drift = 0.0;
  int escape_events = 0;
  int recaptures = 0;
  int obstacle_escapes = 0;
  std::vector<int> trap_ids;
  std::vector<double> placement_error;
  std::size_t obstacles_detected = 0;
  std::size_t obstacles_trapped = 0;
  std::size_t waypoint_moves = 0;
  std::size_t slm_move_messages = 0;
  std::size_t slm_messages = 0;
  std::vector<GoalNudge> goal_nudges;
  std::vector<PhaseEntry> phases;

  bool done() const { return final_phase == Phase::Done; }
};

std::string metrics_to_json(const RunMetrics& m);

/// Shares proportional to the per-kind weights, normalized to 1.
void divide_power(std::span<Trap> traps, const PowerWeights& weights = {});

/// Sets the trap pose and publishes the full trap set. Returns the datagram sequence.
std::uint32_t move_trap(Scene& scene, int trap_id, Vec2 waypoint, SlmPublisher* slm);

struct TimelapseFrame {
  double time = 0.0;  // seconds since PathExecution entry
  Frame frame;
  std::vector<Vec2> detections_um;
  std::vector<Trap> traps;
};

/// Hooks for telemetry; all calls happen on the executing thread.
class ExecutorObserver {
 public:
  virtual ~ExecutorObserver() = default;
  virtual void on_phase(Phase, double /*time*/, const std::string& /*detail*/) {}
  virtual void on_plan(const PlannedTrap&, const WaypointTrack&) {}
  virtual void on_frame(const Frame&, std::span<const Observation> /*tracked*/) {}
  virtual void on_traps(const Scene&) {}
  virtual void on_escape(const EscapeEvent&, double /*time*/) {}
};

/// The six-step assembly pipeline as a tick-driven state machine on simulation time.
class Executor {
 public:
  Executor(Scenario scenario, ExecutorConfig cfg, SlmSink* sink = nullptr, ExecutorObserver* observer = nullptr);

  /// One tick: a whole setup phase, or one simulator step in the stepped phases.
  void advance();
  /// Ticks until Done or Failed.
  void run_to_end();

  Phase phase() const { return phase_; }
  bool finished() const { return phase_ == Phase::Done || phase_ == Phase::Failed; }
  bool motion_paused() const { return !pending_escapes_.empty(); }
  const Scene& scene() const { return scene_; }
  const Scenario& scenario() const { return scenario_; }
  const ExecutorConfig& config() const { return cfg_; }
  RunMetrics metrics() const;
  const TrajectoryLog& log() const { return log_; }

  /// Frozen obstacle set O from step 2 (tracker ids and positions).
  const std::vector<Observation>& obstacles() const { return obstacles_; }
  const std::vector<PlannedTrap>& plans() const { return plans_; }
  /// Tracks index-matched to plans().
  const std::vector<WaypointTrack>& tracks() const { return tracks_; }
  const std::vector<TimelapseFrame>& timelapse() const { return timelapse_; }
  /// Poses of each moved trap in execution order: (time, trap id, pose).
  struct MoveRecord {
    double time;
    int trap_id;
    Vec2 pose;
  };
  const std::vector<MoveRecord>& moves() const { return move_log_; }

 private:
  void enter(Phase p, const std::string& detail = {});
  void fail(const std::string& reason);
  void trap_generation();
  void obstacle_detection();
  void plan_next(bool primary);
  void obstacle_trapping_tick();
  void execution_tick();
  void sim_tick();
  void finish();
  void publish();
  void observe_camera();
  void capture_timelapse(double rel_time);
  std::vector<Vec2> obstacle_positions() const;

  Scenario scenario_;
  ExecutorConfig cfg_;
  ExecutorObserver* observer_;
  SlmPublisher slm_;
  Phase phase_ = Phase::TrapGeneration;
  bool started_ = false;
  Scene scene_;
  Rng camera_rng_;
  TrackerState tracker_;
  TrajectoryLog log_;
  double next_log_time_ = 0.0;
  double next_frame_time_ = 0.0;

  std::vector<Observation> obstacles_;
  std::vector<PlannedTrap> plans_;
  std::vector<WaypointTrack> tracks_;
  std::vector<Cell> reserved_;
  std::vector<Vec2> goals_;  // possibly nudged goal pose per plan

  struct Progress {
    std::size_t index = 0;
    double next_due = 0.0;
  };
  std::vector<Progress> progress_;
  double execution_start_ = 0.0;
  double settle_until_ = 0.0;

  struct PendingEscape {
    int bead_id;
    int trap_id;
    double time;
  };
  std::vector<PendingEscape> pending_escapes_;
  double pause_started_ = 0.0;

  std::vector<std::pair<int, Vec2>> obstacle_anchor_;  // bead id, position at execution entry
  std::vector<TimelapseFrame> timelapse_;
  double next_timelapse_ = 0.0;
  std::vector<MoveRecord> move_log_;

  RunMetrics m_;
  LoopTimer t_detect_, t_track_, t_plan_, t_slm_;
  std::chrono::steady_clock::time_point wall_start_;
  std::chrono::steady_clock::time_point wall_end_;
};

/// Convenience wrapper: executes the scenario to completion.
RunMetrics run(const Scenario& scenario, const ExecutorConfig& cfg = {}, SlmSink* sink = nullptr,
               ExecutorObserver* observer = nullptr);

}  // namespace hot
