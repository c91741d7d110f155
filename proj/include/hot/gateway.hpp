#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hot/bounded_queue.hpp"
#include "hot/executor.hpp"

namespace hot {

struct SessionConfig {
  ExecutorConfig exec;
  std::size_t telemetry_depth = 4096;
  /// Encode camera frames into telemetry (10 Hz at the default vision period).
  bool stream_frames = true;
  /// Speed given to traps placed without set_speed (um/s).
  double default_speed = 1.5;
  /// Scenario loaded when the session opens; empty for none.
  std::string preload_path;
};

enum class SessionState { setup, running, paused, finished };

const char* to_string(SessionState s);

/// Operator session: commands in, replies and telemetry out. Single-threaded and
/// deterministic; the TCP server drives one of these from its simulation loop.
class Session {
 public:
  explicit Session(SessionConfig cfg = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Applies one command object and returns its reply.
  nlohmann::json apply(const nlohmann::json& command);
  /// Text form; malformed JSON yields an error reply with id null.
  std::string apply_text(const std::string& text);

  /// Runs `ticks` executor ticks when running; no-op when paused or idle.
  void advance(int ticks = 1);

  SessionState state() const { return state_; }
  const Executor* executor() const { return executor_.get(); }
  /// Draft scenario assembled by the operator (or loaded).
  Scenario draft() const;

  /// Events since the last drain, oldest first.
  std::vector<nlohmann::json> drain_events();
  BoundedQueue<nlohmann::json>& telemetry() { return telemetry_; }
  std::uint64_t events_emitted() const { return next_event_seq_; }

  /// Every applied command and advance, one JSON object per line.
  const std::string& transcript() const { return transcript_; }

  void emit(const std::string& type, nlohmann::json body);
  double sim_time() const;

 private:
  class Observer;
  nlohmann::json dispatch(const std::string& cmd, const nlohmann::json& args);
  void require(std::initializer_list<SessionState> allowed, const std::string& cmd) const;
  void emit_snapshot();
  std::size_t trap_index(const nlohmann::json& args) const;

  SessionConfig cfg_;
  SessionState state_ = SessionState::setup;
  Scenario scenario_;
  std::vector<std::optional<Vec2>> goals_;
  std::vector<std::optional<double>> speeds_;
  std::unique_ptr<Observer> observer_;
  std::unique_ptr<MemorySink> slm_sink_;
  std::unique_ptr<Executor> executor_;
  std::vector<std::string> seen_ids_;
  BoundedQueue<nlohmann::json> telemetry_;
  std::uint64_t next_event_seq_ = 0;
  double last_event_time_ = 0.0;
  std::string transcript_;
};

/// Replays a transcript produced by Session::transcript() into a fresh session.
std::unique_ptr<Session> replay_transcript(const std::string& transcript, SessionConfig cfg = {});

/// Frame codec: 4-byte big-endian length followed by a UTF-8 JSON payload.
std::vector<std::uint8_t> encode_frame(const std::string& payload);
/// Pops one complete frame from the front of `buffer`. Throws ProtocolError when the
/// announced length exceeds `max_len`.
std::optional<std::string> take_frame(std::vector<std::uint8_t>& buffer, std::size_t max_len = 16u << 20);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

struct ServerConfig {
  std::uint16_t port = 7070;
  /// Sim seconds per wall second while a run is active.
  double realtime_factor = 1.0;
  SessionConfig session;
};

/// Single-operator TCP endpoint. The simulation loop, the socket reader and the writer run
/// on separate threads and share only the command and outgoing queues.
class GatewayServer {
 public:
  explicit GatewayServer(ServerConfig cfg);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds and starts the threads. Port 0 picks an ephemeral port.
  void start();
  std::uint16_t port() const { return port_; }
  void stop();
  /// Blocks until stop() or a shutdown command.
  void wait();

 private:
  void accept_loop();
  void serve_client(int fd);

  ServerConfig cfg_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
};

}  // namespace hot
