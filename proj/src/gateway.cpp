#include "hot/gateway.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <sstream>

#include "hot/error.hpp"
#include "hot/image_io.hpp"

namespace hot {

using nlohmann::json;

const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::setup: return "setup";
    case SessionState::running: return "running";
    case SessionState::paused: return "paused";
    case SessionState::finished: return "finished";
  }
  return "unknown";
}

namespace {

json trap_json(const Trap& t) {
  json j = {{"id", t.id},     {"kind", to_string(t.kind)}, {"x", t.center.x}, {"y", t.center.y},
            {"roster", t.roster}, {"power", t.power_share}, {"holds_obstacle", t.holds_obstacle}};
  if (t.kind == TrapKind::annular) {
    j["l"] = t.topological_charge;
    j["ring_radius"] = t.ring_radius;
    j["z"] = t.z_offset;
  } else if (t.kind == TrapKind::line) {
    j["length"] = t.length;
    j["angle"] = t.angle;
  }
  return j;
}

json bead_json(const Bead& b) {
  return {{"id", b.id}, {"x", b.pos.x}, {"y", b.pos.y}, {"state", to_string(b.state)}, {"trap", b.trap_id}};
}

double number(const json& args, const char* key) {
  if (!args.contains(key) || !args[key].is_number()) throw UsageError(std::string("missing numeric field '") + key + "'");
  return args[key].get<double>();
}

double number_or(const json& args, const char* key, double fallback) {
  if (!args.contains(key)) return fallback;
  return number(args, key);
}

int integer(const json& args, const char* key) {
  if (!args.contains(key) || !args[key].is_number_integer())
    throw UsageError(std::string("missing integer field '") + key + "'");
  return args[key].get<int>();
}

std::string id_text(const json& id) { return id.dump(); }

}  // namespace

class Session::Observer : public ExecutorObserver {
 public:
  explicit Observer(Session& s) : s_(s) {}
  void on_phase(Phase p, double, const std::string& detail) override {
    json body = {{"phase", to_string(p)}};
    if (!detail.empty()) body["detail"] = detail;
    s_.emit("phase_change", std::move(body));
  }
  void on_plan(const PlannedTrap& plan, const WaypointTrack& track) override {
    json path = json::array();
    for (Cell c : plan.path) path.push_back({c.col, c.row});
    json inflated = json::array();
    for (int row = 0; row < plan.grid.rows(); ++row)
      for (int col = 0; col < plan.grid.cols(); ++col)
        if (plan.grid.blocked({col, row})) inflated.push_back({col, row});
    s_.emit("costfield", {{"trap", plan.trap_id},
                          {"cols", plan.field.cols()},
                          {"rows", plan.field.rows()},
                          {"cell_um", kCellSize},
                          {"values", std::vector<int>(plan.field.values().begin(), plan.field.values().end())},
                          {"blocked", std::move(inflated)},
                          {"path", std::move(path)},
                          {"start", {track.points.front().x, track.points.front().y}},
                          {"goal", {track.points.back().x, track.points.back().y}},
                          {"waypoints", track.points.size()},
                          {"delay_s", track.delay}});
  }
  void on_frame(const Frame& frame, std::span<const Observation> tracked) override {
    if (s_.cfg_.stream_frames) {
      const auto png = encode_png_gray8(Frame::width, Frame::height, frame.pixels);
      s_.emit("frame", {{"width", Frame::width}, {"height", Frame::height}, {"png_base64", base64_encode(png)}});
    }
    json items = json::array();
    for (const auto& o : tracked) items.push_back({{"id", o.id}, {"x", o.pos.x}, {"y", o.pos.y}});
    s_.emit("detections", {{"items", std::move(items)}});
  }
  void on_traps(const Scene& scene) override {
    json traps = json::array();
    for (const auto& t : scene.traps) traps.push_back(trap_json(t));
    s_.emit("trap_states", {{"traps", std::move(traps)}});
  }
  void on_escape(const EscapeEvent& e, double) override {
    s_.emit("escape", {{"bead", e.bead_id}, {"trap", e.trap_id}});
  }

 private:
  Session& s_;
};

Session::Session(SessionConfig cfg)
    : cfg_(std::move(cfg)),
      observer_(std::make_unique<Observer>(*this)),
      slm_sink_(std::make_unique<MemorySink>()),
      telemetry_(cfg_.telemetry_depth) {
  if (!cfg_.preload_path.empty()) dispatch("load_scenario", {{"path", cfg_.preload_path}});
}

Session::~Session() = default;

double Session::sim_time() const { return executor_ ? executor_->scene().time : 0.0; }

void Session::emit(const std::string& type, json body) {
  body["type"] = type;
  body["seq"] = next_event_seq_++;
  const double t = sim_time();
  body["t"] = t;
  last_event_time_ = t;
  telemetry_.push(std::move(body));
}

std::vector<json> Session::drain_events() {
  std::vector<json> out;
  while (auto e = telemetry_.try_pop()) out.push_back(std::move(*e));
  return out;
}

Scenario Session::draft() const {
  Scenario s = scenario_;
  s.goals.clear();
  s.speeds.clear();
  for (std::size_t i = 0; i < s.traps.size(); ++i) {
    s.goals.push_back(goals_[i].value_or(s.traps[i].center));
    s.speeds.push_back(speeds_[i].value_or(cfg_.default_speed));
  }
  return s;
}

void Session::require(std::initializer_list<SessionState> allowed, const std::string& cmd) const {
  if (std::find(allowed.begin(), allowed.end(), state_) != allowed.end()) return;
  throw PhaseMismatchError(cmd + " is not allowed while the session is " + to_string(state_));
}

void Session::emit_snapshot() {
  json traps = json::array();
  for (const auto& t : scenario_.traps) traps.push_back(trap_json(t));
  json beads = json::array();
  for (const auto& b : scenario_.beads) beads.push_back(bead_json(b));
  json goals = json::array();
  for (const auto& g : goals_) goals.push_back(g ? json{g->x, g->y} : json(nullptr));
  emit("scenario", {{"name", scenario_.name},
                    {"workspace", {{"width_um", Workspace::width_um},
                                   {"height_um", Workspace::height_um},
                                   {"camera_px", {Workspace::camera_width_px, Workspace::camera_height_px}},
                                   {"um_per_px", Workspace::um_per_px}}},
                    {"traps", std::move(traps)},
                    {"beads", std::move(beads)},
                    {"goals", std::move(goals)},
                    {"obstacle_trapping", scenario_.obstacle_trapping}});
}

std::size_t Session::trap_index(const json& args) const {
  const int id = integer(args, "trap");
  for (std::size_t i = 0; i < scenario_.traps.size(); ++i)
    if (scenario_.traps[i].id == id) return i;
  throw ScenarioError(ErrorCode::validation, "trap", "no trap with id " + std::to_string(id));
}

json Session::apply(const json& command) {
  json id = nullptr;
  auto reply_error = [&](const std::string& code, const std::string& message) {
    emit("error", {{"id", id}, {"code", code}, {"message", message}});
    return json{{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
  };
  if (!command.is_object()) return reply_error("malformed", "command must be a JSON object");
  transcript_ += json{{"cmd", command}}.dump() + "\n";
  if (!command.contains("id") || !(command["id"].is_string() || command["id"].is_number_integer()))
    return reply_error("malformed", "command needs a string or integer 'id'");
  id = command["id"];
  if (!command.contains("cmd") || !command["cmd"].is_string()) return reply_error("malformed", "command needs a 'cmd' string");
  const std::string key = id_text(id);
  if (std::find(seen_ids_.begin(), seen_ids_.end(), key) != seen_ids_.end())
    return reply_error("duplicate_id", "request id " + key + " was already used in this session");
  seen_ids_.push_back(key);
  const json args = command.value("args", json::object());
  try {
    json result = dispatch(command["cmd"].get<std::string>(), args.is_object() ? args : json::object());
    return {{"id", id}, {"ok", true}, {"result", std::move(result)}};
  } catch (const PhaseMismatchError& e) {
    return reply_error("phase_mismatch", e.what());
  } catch (const ScenarioError& e) {
    auto r = reply_error("validation", e.what());
    r["error"]["field"] = e.field();
    return r;
  } catch (const Error& e) {
    return reply_error(to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return reply_error("malformed", e.what());
  }
}

std::string Session::apply_text(const std::string& text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& e) {
    transcript_ += json{{"raw", text}}.dump() + "\n";
    emit("error", {{"id", nullptr}, {"code", "malformed"}, {"message", e.what()}});
    return json{{"id", nullptr}, {"ok", false}, {"error", {{"code", "malformed"}, {"message", e.what()}}}}.dump();
  }
  return apply(parsed).dump();
}

json Session::dispatch(const std::string& cmd, const json& args) {
  if (cmd == "load_scenario") {
    require({SessionState::setup, SessionState::finished}, cmd);
    Scenario s;
    if (args.contains("text"))
      s = parse_scenario(args.at("text").get<std::string>(), "<command>");
    else if (args.contains("path"))
      s = load_scenario(args.at("path").get<std::string>());
    else
      throw UsageError("load_scenario needs 'path' or 'text'");
    scenario_ = std::move(s);
    goals_.assign(scenario_.goals.begin(), scenario_.goals.end());
    speeds_.assign(scenario_.speeds.begin(), scenario_.speeds.end());
    executor_.reset();
    state_ = SessionState::setup;
    emit_snapshot();
    return {{"name", scenario_.name}, {"traps", scenario_.traps.size()}, {"beads", scenario_.beads.size()}};
  }
  if (cmd == "place_trap") {
    require({SessionState::setup}, cmd);
    const auto kind = trap_kind_from_string(args.at("kind").get<std::string>());
    if (!kind) throw UsageError("unknown trap kind");
    Trap t;
    t.kind = *kind;
    t.center = {number(args, "x"), number(args, "y")};
    int next = 0;
    for (const auto& o : scenario_.traps) next = std::max(next, o.id + 1);
    t.id = args.contains("trap") ? integer(args, "trap") : next;
    for (const auto& o : scenario_.traps)
      if (o.id == t.id) throw ScenarioError(ErrorCode::validation, "trap", "trap id already in use");
    if (t.kind == TrapKind::annular) {
      t.topological_charge = integer(args, "l");
      t.ring_radius = number_or(args, "ring_radius", ring_radius_for_charge(t.topological_charge));
      t.z_offset = number_or(args, "z", 0.0);
    } else if (t.kind == TrapKind::line) {
      t.length = number(args, "length");
      t.angle = number_or(args, "angle", 0.0);
    }
    validate_trap(t, "trap");
    scenario_.priority.push_back(static_cast<int>(scenario_.traps.size()));
    scenario_.traps.push_back(t);
    goals_.emplace_back();
    speeds_.emplace_back();
    emit_snapshot();
    return {{"trap", t.id}};
  }
  if (cmd == "assign_roster") {
    require({SessionState::setup}, cmd);
    const std::size_t i = trap_index(args);
    const auto ids = args.at("beads").get<std::vector<int>>();
    for (int bid : ids) {
      const bool exists = std::any_of(scenario_.beads.begin(), scenario_.beads.end(), [&](const Bead& b) { return b.id == bid; });
      if (!exists) throw ScenarioError(ErrorCode::validation, "beads", "no bead with id " + std::to_string(bid));
      for (std::size_t k = 0; k < scenario_.traps.size(); ++k)
        if (k != i && std::count(scenario_.traps[k].roster.begin(), scenario_.traps[k].roster.end(), bid))
          throw ScenarioError(ErrorCode::validation, "beads", "bead " + std::to_string(bid) + " is in another roster");
    }
    scenario_.traps[i].roster = ids;
    emit_snapshot();
    return {{"trap", scenario_.traps[i].id}, {"roster", ids}};
  }
  if (cmd == "set_goal") {
    require({SessionState::setup}, cmd);
    const std::size_t i = trap_index(args);
    const Vec2 g{number(args, "x"), number(args, "y")};
    if (!Workspace::contains(g)) throw ScenarioError(ErrorCode::validation, "goal", "goal outside the workspace");
    goals_[i] = g;
    emit_snapshot();
    return {{"trap", scenario_.traps[i].id}};
  }
  if (cmd == "set_speed") {
    require({SessionState::setup}, cmd);
    const std::size_t i = trap_index(args);
    const double v = number(args, "v");
    if (!(v > 0.0)) throw ScenarioError(ErrorCode::validation, "speed", "speed must be > 0");
    speeds_[i] = v;
    return {{"trap", scenario_.traps[i].id}};
  }
  if (cmd == "set_obstacle_trapping") {
    require({SessionState::setup}, cmd);
    scenario_.obstacle_trapping = args.at("enabled").get<bool>();
    return {{"enabled", scenario_.obstacle_trapping}};
  }
  if (cmd == "start") {
    require({SessionState::setup}, cmd);
    if (scenario_.traps.empty()) throw PhaseMismatchError("start needs at least one placed trap");
    for (std::size_t i = 0; i < goals_.size(); ++i)
      if (!goals_[i]) throw PhaseMismatchError("trap " + std::to_string(scenario_.traps[i].id) + " has no goal");
    Scenario s = draft();
    if (args.contains("seed")) s.seed = args.at("seed").get<std::uint64_t>();
    validate_scenario(s);
    executor_ = std::make_unique<Executor>(s, cfg_.exec, slm_sink_.get(), observer_.get());
    state_ = SessionState::running;
    return {{"seed", s.seed}};
  }
  if (cmd == "pause") {
    require({SessionState::running}, cmd);
    state_ = SessionState::paused;
    return {{"time", sim_time()}};
  }
  if (cmd == "resume") {
    require({SessionState::paused}, cmd);
    state_ = SessionState::running;
    return {{"time", sim_time()}};
  }
  if (cmd == "step") {
    require({SessionState::running, SessionState::paused}, cmd);
    const int n = args.contains("n") ? integer(args, "n") : 1;
    if (n < 0) throw UsageError("step count must be >= 0");
    for (int k = 0; k < n && !executor_->finished(); ++k) executor_->advance();
    if (executor_->finished()) {
      state_ = SessionState::finished;
      emit("metrics", json::parse(metrics_to_json(executor_->metrics())));
    }
    return {{"time", sim_time()}, {"phase", to_string(executor_->phase())}};
  }
  if (cmd == "abort") {
    require({SessionState::running, SessionState::paused}, cmd);
    state_ = SessionState::finished;
    emit("phase_change", {{"phase", "Failed"}, {"detail", "aborted by operator"}});
    return {{"time", sim_time()}};
  }
  throw Error(ErrorCode::usage, "unknown command '" + cmd + "'");
}

void Session::advance(int ticks) {
  transcript_ += json{{"advance", ticks}}.dump() + "\n";
  if (state_ != SessionState::running || !executor_) return;
  for (int k = 0; k < ticks; ++k) {
    executor_->advance();
    if (executor_->finished()) {
      state_ = SessionState::finished;
      emit("metrics", json::parse(metrics_to_json(executor_->metrics())));
      break;
    }
  }
}

std::unique_ptr<Session> replay_transcript(const std::string& transcript, SessionConfig cfg) {
  auto s = std::make_unique<Session>(std::move(cfg));
  std::istringstream in(transcript);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("cmd"))
      s->apply(j["cmd"]);
    else if (j.contains("advance"))
      s->advance(j["advance"].get<int>());
    else if (j.contains("raw"))
      s->apply_text(j["raw"].get<std::string>());
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_frame(const std::string& payload) {
  std::vector<std::uint8_t> out(4 + payload.size());
  const auto n = static_cast<std::uint32_t>(payload.size());
  out[0] = static_cast<std::uint8_t>(n >> 24);
  out[1] = static_cast<std::uint8_t>(n >> 16);
  out[2] = static_cast<std::uint8_t>(n >> 8);
  out[3] = static_cast<std::uint8_t>(n);
  std::copy(payload.begin(), payload.end(), out.begin() + 4);
  return out;
}

std::optional<std::string> take_frame(std::vector<std::uint8_t>& buffer, std::size_t max_len) {
  if (buffer.size() < 4) return std::nullopt;
  const std::size_t n = (static_cast<std::size_t>(buffer[0]) << 24) | (static_cast<std::size_t>(buffer[1]) << 16) |
                        (static_cast<std::size_t>(buffer[2]) << 8) | buffer[3];
  if (n > max_len) throw ProtocolError(ProtocolFault::length_mismatch, "frame length exceeds the limit");
  if (buffer.size() < 4 + n) return std::nullopt;
  std::string payload(buffer.begin() + 4, buffer.begin() + 4 + static_cast<std::ptrdiff_t>(n));
  buffer.erase(buffer.begin(), buffer.begin() + 4 + static_cast<std::ptrdiff_t>(n));
  return payload;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int k = 3; k >= 0; --k) out += kB64[(v >> (6 * k)) & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    const int v = val(c);
    if (v < 0) throw UsageError("invalid base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

GatewayServer::GatewayServer(ServerConfig cfg) : cfg_(std::move(cfg)) {}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw IoError("cannot open TCP socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(cfg_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 1) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw IoError("cannot listen on port " + std::to_string(cfg_.port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void GatewayServer::stop() {
  running_ = false;
  if (accept_thread_.joinable() && accept_thread_.get_id() != std::this_thread::get_id()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void GatewayServer::wait() {
  if (accept_thread_.joinable()) accept_thread_.join();
}

void GatewayServer::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    serve_client(fd);
    ::close(fd);
  }
}

namespace {

bool send_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

void GatewayServer::serve_client(int fd) {
  Session session(cfg_.session);
  BoundedQueue<std::string> commands(256);
  BoundedQueue<std::string> replies(1024);
  std::atomic<bool> alive{true};

  std::thread reader([&] {
    std::vector<std::uint8_t> buf;
    std::uint8_t chunk[65536];
    while (alive && running_) {
      pollfd pfd{fd, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, 50);
      if (rc < 0) break;
      if (rc == 0) continue;
      const auto n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.insert(buf.end(), chunk, chunk + n);
      try {
        while (auto payload = take_frame(buf)) commands.push(std::move(*payload));
      } catch (const ProtocolError&) {
        break;
      }
    }
    alive = false;
    commands.close();
  });

  std::thread writer([&] {
    while (alive && running_) {
      bool idle = true;
      while (auto r = replies.try_pop()) {
        idle = false;
        if (!send_all(fd, encode_frame(*r))) alive = false;
      }
      if (auto ev = session.telemetry().try_pop()) {
        idle = false;
        if (!send_all(fd, encode_frame(ev->dump()))) alive = false;
      }
      if (idle) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  });

  using Clock = std::chrono::steady_clock;
  auto pace_wall = Clock::now();
  double pace_sim = 0.0;
  SessionState last_state = session.state();
  while (alive && running_) {
    if (auto text = commands.pop_for(std::chrono::milliseconds(5))) {
      json parsed = json::parse(*text, nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object() && parsed.value("cmd", "") == "shutdown") {
        replies.push(json{{"id", parsed.value("id", json(nullptr))}, {"ok", true}, {"result", json::object()}}.dump());
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        running_ = false;
        break;
      }
      replies.push(session.apply_text(*text));
    }
    if (session.state() == SessionState::running) {
      if (last_state != SessionState::running) {
        pace_wall = Clock::now();
        pace_sim = session.sim_time();
      }
      const double elapsed = std::chrono::duration<double>(Clock::now() - pace_wall).count();
      const double target = pace_sim + cfg_.realtime_factor * elapsed;
      int budget = 2000;
      while (session.state() == SessionState::running && session.sim_time() < target && budget-- > 0) session.advance(1);
    }
    last_state = session.state();
  }
  alive = false;
  reader.join();
  writer.join();
}

}  // namespace hot
