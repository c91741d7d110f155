#include "hot/executor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "hot/error.hpp"

namespace hot {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::TrapGeneration: return "TrapGeneration";
    case Phase::ObstacleDetection: return "ObstacleDetection";
    case Phase::PriorityPlanning: return "PriorityPlanning";
    case Phase::SecondaryPlanning: return "SecondaryPlanning";
    case Phase::ObstacleTrapping: return "ObstacleTrapping";
    case Phase::PathExecution: return "PathExecution";
    case Phase::Done: return "Done";
    case Phase::Failed: return "Failed";
  }
  return "unknown";
}

LoopStats LoopTimer::stats() const {
  LoopStats s;
  s.samples = samples_.size();
  if (samples_.empty()) return s;
  s.mean_ms = std::accumulate(samples_.begin(), samples_.end(), 0.0) / samples_.size();
  double var = 0.0;
  for (double v : samples_) var += (v - s.mean_ms) * (v - s.mean_ms);
  s.sd_ms = samples_.size() > 1 ? std::sqrt(var / (samples_.size() - 1)) : 0.0;
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

nlohmann::json stats_json(const LoopStats& s) {
  return {{"mean_ms", s.mean_ms}, {"sd_ms", s.sd_ms}, {"samples", s.samples}};
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string metrics_to_json(const RunMetrics& m) {
  nlohmann::json j;
  j["final_phase"] = to_string(m.final_phase);
  j["done"] = m.done();
  j["failure_reason"] = m.failure_reason;
  j["assembly_time_s"] = m.assembly_time;
  j["sim_time_s"] = m.sim_time;
  j["wall_time_s"] = m.wall_time;
  j["loop_times"] = {{"bead_detection", stats_json(m.detection)},
                     {"bead_tracking", stats_json(m.tracking)},
                     {"path_planning", stats_json(m.planning)},
                     {"slm_communication", stats_json(m.slm)}};
  j["min_obstacle_clearance_um"] = finite_or_null(m.min_obstacle_clearance);
  j["max_obstacle_drift_um"] = m.max_obstacle_drift;
  j["escape_events"] = m.escape_events;
  j["recaptures"] = m.recaptures;
  j["obstacle_escapes"] = m.obstacle_escapes;
  auto& placement = j["placement_error_um"] = nlohmann::json::array();
  for (std::size_t i = 0; i < m.trap_ids.size(); ++i)
    placement.push_back({{"trap", m.trap_ids[i]}, {"error_um", i < m.placement_error.size() ? m.placement_error[i] : 0.0}});
  j["obstacles_detected"] = m.obstacles_detected;
  j["obstacles_trapped"] = m.obstacles_trapped;
  j["waypoint_moves"] = m.waypoint_moves;
  j["slm_move_messages"] = m.slm_move_messages;
  j["slm_messages"] = m.slm_messages;
  auto& nudges = j["goal_nudges"] = nlohmann::json::array();
  for (const auto& n : m.goal_nudges)
    nudges.push_back({{"trap", n.trap_id}, {"from", {n.from.x, n.from.y}}, {"to", {n.to.x, n.to.y}}});
  auto& phases = j["phases"] = nlohmann::json::array();
  for (const auto& p : m.phases) phases.push_back({{"phase", to_string(p.phase)}, {"time_s", p.time}});
  return j.dump(2);
}

void divide_power(std::span<Trap> traps, const PowerWeights& w) {
  auto weight = [&](const Trap& t) {
    switch (t.kind) {
      case TrapKind::point: return w.point;
      case TrapKind::line: return w.line;
      case TrapKind::annular: return w.annular;
    }
    return 0.0;
  };
  double total = 0.0;
  for (const auto& t : traps) total += weight(t);
  if (!(total > 0.0)) return;
  for (auto& t : traps) t.power_share = weight(t) / total;
}

std::uint32_t move_trap(Scene& scene, int trap_id, Vec2 waypoint, SlmPublisher* slm) {
  Trap* t = scene.find_trap(trap_id);
  if (!t) throw UsageError("move_trap: unknown trap " + std::to_string(trap_id));
  t->center = waypoint;
  return slm ? slm->publish(scene.traps) : 0;
}

// ---------------------------------------------------------------------------

Executor::Executor(Scenario scenario, ExecutorConfig cfg, SlmSink* sink, ExecutorObserver* observer)
    : scenario_(std::move(scenario)), cfg_(std::move(cfg)), observer_(observer), slm_(sink) {
  validate_scenario(scenario_);
  cfg_.sim.bead_radius = scenario_.bead_radius;
  cfg_.sim.boundary_influx_rate = scenario_.boundary_influx_rate;
  cfg_.vision.bead_radius_um = scenario_.bead_radius;
  cfg_.sim.validate();
  camera_rng_.seed(scenario_.seed ^ 0x9E3779B97F4A7C15ULL);
  m_.min_obstacle_clearance = std::numeric_limits<double>::infinity();
}

void Executor::enter(Phase p, const std::string& detail) {
  phase_ = p;
  m_.phases.push_back({p, scene_.time});
  log_.record_event(scene_.time, "phase", -1, to_string(p));
  if (p == Phase::Done || p == Phase::Failed) wall_end_ = Clock::now();
  if (observer_) observer_->on_phase(p, scene_.time, detail);
  if (p == Phase::PathExecution) {
    execution_start_ = scene_.time;
    for (std::size_t i = 0; i < tracks_.size(); ++i) progress_.push_back({0, execution_start_ + tracks_[i].delay});
    for (const auto& b : scene_.beads)
      if (b.state == BeadState::obstacle_trapped) obstacle_anchor_.emplace_back(b.id, b.pos);
    if (cfg_.timelapse_interval > 0.0) {
      capture_timelapse(0.0);
      next_timelapse_ = cfg_.timelapse_interval;
    }
  }
}

void Executor::fail(const std::string& reason) {
  m_.failure_reason = reason;
  enter(Phase::Failed, reason);
}

void Executor::advance() {
  if (finished()) return;
  try {
    if (!started_) {
      started_ = true;
      wall_start_ = Clock::now();
      enter(Phase::TrapGeneration);
      trap_generation();
      return;
    }
    switch (phase_) {
      case Phase::ObstacleDetection:
        obstacle_detection();
        break;
      case Phase::PriorityPlanning:
        plan_next(true);
        break;
      case Phase::SecondaryPlanning:
        plan_next(false);
        break;
      case Phase::ObstacleTrapping:
        obstacle_trapping_tick();
        break;
      case Phase::PathExecution:
        execution_tick();
        break;
      default:
        break;
    }
  } catch (const Error& e) {
    fail(e.what());
  }
}

void Executor::run_to_end() {
  while (!finished()) advance();
}

void Executor::trap_generation() {
  scene_ = make_scene(scenario_);
  m_.phases.front().time = scene_.time;
  const double rc = capture_radius(cfg_.sim.force, scene_.bead_radius);
  for (const auto& t : scene_.traps)
    for (int bid : t.roster) {
      const Bead* b = scene_.find_bead(bid);
      if (!b || distance(trap_anchor(t, b->pos, scene_.bead_radius), b->pos) > rc)
        return fail("trap " + std::to_string(t.id) + " cannot hold bead " + std::to_string(bid) + " at its start pose");
    }
  divide_power(scene_.traps, cfg_.weights);
  publish();
  log_.record_scene(scene_);
  next_log_time_ = cfg_.log_period;
  next_frame_time_ = 0.0;
  if (observer_) observer_->on_traps(scene_);
  enter(Phase::ObstacleDetection);
}

void Executor::obstacle_detection() {
  std::vector<Observation> seen;
  if (cfg_.oracle_detection) {
    seen = render_ground_truth(scene_);
  } else {
    const Frame frame = render_frame(scene_, cfg_.vision, camera_rng_);
    auto t0 = Clock::now();
    const auto dets = detect(equalize(frame), cfg_.vision);
    t_detect_.add(ms_since(t0));
    std::vector<Vec2> pos;
    for (const auto& d : dets) pos.push_back(d.position_um());
    t0 = Clock::now();
    seen = track(tracker_, pos, cfg_.tracker);
    t_track_.add(ms_since(t0));
    if (observer_) observer_->on_frame(frame, seen);
  }
  // Detections inside a loaded trap's hold zone belong to its roster.
  const double rc = capture_radius(cfg_.sim.force, scene_.bead_radius);
  for (const auto& o : seen) {
    bool held = false;
    for (const auto& t : scene_.traps)
      if (!t.roster.empty() && distance(trap_anchor(t, o.pos, scene_.bead_radius), o.pos) <= rc) held = true;
    if (held) continue;
    if (cfg_.oracle_detection) {
      const Bead* b = scene_.find_bead(o.id);
      if (b && b->state != BeadState::free) continue;
    }
    obstacles_.push_back(o);
  }
  m_.obstacles_detected = obstacles_.size();
  enter(Phase::PriorityPlanning);
}

std::vector<Vec2> Executor::obstacle_positions() const {
  std::vector<Vec2> out;
  out.reserve(obstacles_.size());
  for (const auto& o : obstacles_) out.push_back(o.pos);
  return out;
}

void Executor::plan_next(bool primary) {
  const auto& order = scenario_.priority;
  const std::size_t first = primary ? 0 : 1;
  const std::size_t last = primary ? std::min<std::size_t>(1, order.size()) : order.size();
  const auto obstacles = obstacle_positions();
  for (std::size_t k = first; k < last; ++k) {
    const int idx = order[k];
    const Trap& spec = scenario_.traps[static_cast<std::size_t>(idx)];
    const Trap* trap = scene_.find_trap(spec.id);
    PlanRequest req{spec.id, trap->center, scenario_.goals[static_cast<std::size_t>(idx)],
                    trap_footprint(*trap, scene_.bead_radius)};

    const auto t0 = Clock::now();
    const OccupancyGrid grid = build_grid(obstacles, cfg_.r_br + req.footprint, reserved_);
    const Cell gc = OccupancyGrid::cell_of(req.goal);
    if (grid.blocked(gc)) {
      std::optional<Cell> best;
      double best_d = std::numeric_limits<double>::infinity();
      const int n = cfg_.goal_nudge_cells;
      for (int dr = -n; dr <= n; ++dr)
        for (int dc = -n; dc <= n; ++dc) {
          const Cell c{gc.col + dc, gc.row + dr};
          if ((dr == 0 && dc == 0) || !grid.in_bounds(c) || grid.blocked(c)) continue;
          const double d = distance(OccupancyGrid::center_of(c), req.goal);
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
      if (!best) {
        t_plan_.add(ms_since(t0));
        return fail("trap " + std::to_string(spec.id) + ": goal blocked and no free cell within " +
                    std::to_string(n) + " cell(s)");
      }
      const Vec2 nudged = OccupancyGrid::center_of(*best);
      m_.goal_nudges.push_back({spec.id, req.goal, nudged});
      req.goal = nudged;
    }
    PlannedTrap plan;
    try {
      plan = plan_single(req, obstacles, reserved_, cfg_.r_br);
    } catch (const PlanningError& e) {
      t_plan_.add(ms_since(t0));
      return fail(std::string("no-path: ") + e.what() + " [cause " + to_string(e.cause()) + "]");
    }
    WaypointTrack track = interpolate(plan.path, req.start, req.goal);
    track.delay = speed_to_delay(scenario_.speeds[static_cast<std::size_t>(idx)]);
    t_plan_.add(ms_since(t0));
    const auto cells = inflate_path(plan.path, req.footprint);
    reserved_.insert(reserved_.end(), cells.begin(), cells.end());
    if (observer_) observer_->on_plan(plan, track);
    m_.waypoint_moves += track.moves();
    plans_.push_back(std::move(plan));
    tracks_.push_back(std::move(track));
    goals_.push_back(req.goal);
  }
  if (primary)
    enter(Phase::SecondaryPlanning);
  else if (scenario_.obstacle_trapping)
    enter(Phase::ObstacleTrapping);
  else
    enter(Phase::PathExecution);
}

void Executor::obstacle_trapping_tick() {
  if (settle_until_ <= 0.0) {
    const double rc = capture_radius(cfg_.sim.force, scene_.bead_radius);
    for (const auto& o : obstacles_) {
      const Bead* nearest = nullptr;
      double best = rc;
      for (const auto& b : scene_.beads)
        if (b.state == BeadState::free && distance(b.pos, o.pos) <= best) {
          best = distance(b.pos, o.pos);
          nearest = &b;
        }
      if (!nearest) continue;
      Trap t;
      t.id = scene_.next_trap_id++;
      t.kind = TrapKind::point;
      t.center = o.pos;
      t.holds_obstacle = true;
      const int bid = nearest->id;
      scene_.traps.push_back(t);
      const int ids[] = {bid};
      m_.obstacles_trapped += static_cast<std::size_t>(capture_beads(scene_, t.id, ids, cfg_.sim, BeadState::obstacle_trapped));
    }
    divide_power(scene_.traps, cfg_.weights);
    publish();
    if (observer_) observer_->on_traps(scene_);
    settle_until_ = scene_.time + cfg_.obstacle_settle;
    if (cfg_.obstacle_settle <= 0.0) return enter(Phase::PathExecution);
    return;
  }
  sim_tick();
  if (finished()) return;
  if (scene_.time >= settle_until_ - 1e-9) enter(Phase::PathExecution);
}

void Executor::execution_tick() {
  bool complete = true;
  for (std::size_t i = 0; i < tracks_.size(); ++i)
    if (progress_[i].index + 1 < tracks_[i].points.size()) complete = false;
  if (complete) return finish();

  if (!motion_paused()) {
    bool moved = false;
    const auto obstacles = obstacle_positions();
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      auto& p = progress_[i];
      if (p.index + 1 >= tracks_[i].points.size() || scene_.time < p.next_due - 1e-9) continue;
      ++p.index;
      p.next_due += tracks_[i].delay;
      const Vec2 wp = tracks_[i].points[p.index];
      const auto t0 = Clock::now();
      move_trap(scene_, plans_[i].trap_id, wp, &slm_);
      t_slm_.add(ms_since(t0));
      ++m_.slm_messages;
      ++m_.slm_move_messages;
      move_log_.push_back({scene_.time, plans_[i].trap_id, wp});
      for (Vec2 o : obstacles) m_.min_obstacle_clearance = std::min(m_.min_obstacle_clearance, distance(wp, o));
      moved = true;
    }
    if (moved && observer_) observer_->on_traps(scene_);
  }
  sim_tick();
  if (finished()) return;
  const double rel = scene_.time - execution_start_;
  if (cfg_.timelapse_interval > 0.0 && rel >= next_timelapse_ - 1e-9) {
    capture_timelapse(rel);
    next_timelapse_ += cfg_.timelapse_interval;
  }
  if (scene_.time > cfg_.time_cap) fail("timeout: sim time exceeded " + std::to_string(cfg_.time_cap) + " s");
}

void Executor::sim_tick() {
  const StepEvents ev = step(scene_, cfg_.sim);
  const double now = scene_.time;
  for (const auto& e : ev.escapes) {
    const Trap* t = scene_.find_trap(e.trap_id);
    if (observer_) observer_->on_escape(e, now);
    log_.record_event(now, "escape", e.bead_id, "trap:" + std::to_string(e.trap_id));
    if (t && t->holds_obstacle) {
      ++m_.obstacle_escapes;
      continue;
    }
    ++m_.escape_events;
    if (pending_escapes_.empty()) pause_started_ = now;
    pending_escapes_.push_back({e.bead_id, e.trap_id, now});
  }

  if (!pending_escapes_.empty()) {
    const double rc = capture_radius(cfg_.sim.force, scene_.bead_radius);
    std::vector<PendingEscape> still;
    for (const auto& pe : pending_escapes_) {
      const Bead* b = scene_.find_bead(pe.bead_id);
      const Trap* t = scene_.find_trap(pe.trap_id);
      if (b && t && b->state == BeadState::free && now - pe.time >= cfg_.recapture_min - 1e-9 &&
          distance(trap_anchor(*t, b->pos, scene_.bead_radius), b->pos) <= rc) {
        scene_.assign_to_trap(pe.bead_id, pe.trap_id);
        ++m_.recaptures;
        log_.record_event(now, "recapture", pe.bead_id, "trap:" + std::to_string(pe.trap_id));
        continue;
      }
      if (now - pe.time > cfg_.escape_hold)
        return fail("roster-loss: bead " + std::to_string(pe.bead_id) + " escaped trap " + std::to_string(pe.trap_id) +
                    " and was not recaptured within " + std::to_string(cfg_.escape_hold) + " s");
      still.push_back(pe);
    }
    pending_escapes_ = std::move(still);
    if (pending_escapes_.empty() && phase_ == Phase::PathExecution) {
      const double held = now - std::max(pause_started_, execution_start_);
      for (auto& p : progress_) p.next_due += held;
    }
  }

  if (phase_ == Phase::PathExecution)
    for (const auto& [id, p0] : obstacle_anchor_)
      if (const Bead* b = scene_.find_bead(id); b && b->state == BeadState::obstacle_trapped)
        m_.max_obstacle_drift = std::max(m_.max_obstacle_drift, distance(b->pos, p0));

  if (cfg_.log_period <= 0.0 || now >= next_log_time_ - 1e-9) {
    log_.record_scene(scene_);
    next_log_time_ += cfg_.log_period;
  }
  if (cfg_.vision_during_execution && now >= next_frame_time_ - 1e-9) {
    observe_camera();
    next_frame_time_ = now + cfg_.vision_period;
  }
}

void Executor::observe_camera() {
  const Frame frame = render_frame(scene_, cfg_.vision, camera_rng_);
  auto t0 = Clock::now();
  const auto dets = detect(equalize(frame), cfg_.vision);
  t_detect_.add(ms_since(t0));
  std::vector<Vec2> pos;
  for (const auto& d : dets) pos.push_back(d.position_um());
  t0 = Clock::now();
  const auto tracked = track(tracker_, pos, cfg_.tracker);
  t_track_.add(ms_since(t0));
  if (observer_) observer_->on_frame(frame, tracked);
}

void Executor::capture_timelapse(double rel_time) {
  TimelapseFrame tf;
  tf.time = rel_time;
  tf.frame = render_frame(scene_, cfg_.vision, camera_rng_);
  for (const auto& d : detect(equalize(tf.frame), cfg_.vision)) tf.detections_um.push_back(d.position_um());
  tf.traps = scene_.traps;
  timelapse_.push_back(std::move(tf));
}

void Executor::publish() {
  const auto t0 = Clock::now();
  slm_.publish(scene_.traps);
  t_slm_.add(ms_since(t0));
  ++m_.slm_messages;
}

void Executor::finish() {
  const double end = scene_.time;
  m_.assembly_time = end - execution_start_;
  if (cfg_.timelapse_interval > 0.0 &&
      (timelapse_.empty() || timelapse_.back().time < m_.assembly_time - 0.5 * cfg_.timelapse_interval))
    capture_timelapse(m_.assembly_time);
  std::vector<int> held;
  for (const auto& t : scene_.traps)
    if (t.holds_obstacle) held.push_back(t.id);
  for (int id : held) scene_.remove_trap(id);
  divide_power(scene_.traps, cfg_.weights);
  publish();
  for (std::size_t i = 0; i < scenario_.traps.size(); ++i) {
    const Trap* t = scene_.find_trap(scenario_.traps[i].id);
    m_.trap_ids.push_back(scenario_.traps[i].id);
    m_.placement_error.push_back(t ? distance(t->center, scenario_.goals[i]) : 0.0);
  }
  if (observer_) observer_->on_traps(scene_);
  log_.record_scene(scene_);
  enter(Phase::Done);
}

RunMetrics Executor::metrics() const {
  RunMetrics m = m_;
  m.final_phase = phase_;
  m.sim_time = scene_.time;
  if (started_) {
    auto end = finished() ? wall_end_ : Clock::now();
    m.wall_time = std::chrono::duration<double>(end - wall_start_).count();
  }
  m.detection = t_detect_.stats();
  m.tracking = t_track_.stats();
  m.planning = t_plan_.stats();
  m.slm = t_slm_.stats();
  return m;
}

RunMetrics run(const Scenario& scenario, const ExecutorConfig& cfg, SlmSink* sink, ExecutorObserver* observer) {
  Executor ex(scenario, cfg, sink, observer);
  ex.run_to_end();
  return ex.metrics();
}

}  // namespace hot
