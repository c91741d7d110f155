#include "hot/hot.h"

#include <cstring>
#include <memory>
#include <optional>
#include <string>

#include "hot/config.hpp"
#include "hot/error.hpp"
#include "hot/executor.hpp"
#include "hot/gateway.hpp"
#include "hot/report.hpp"
#include "hot/scene.hpp"

struct hot_scenario {
  hot::Scenario value;
};

struct hot_run {
  hot::Scenario scenario;
  hot::ExecutorConfig cfg;
  std::string report_dir;
  std::optional<hot::Endpoint> slm_dest;
  std::optional<hot::RunMetrics> metrics;
};

struct hot_session {
  std::unique_ptr<hot::Session> session;
};

namespace {

thread_local std::string g_last_error;

hot_status status_of(hot::ErrorCode code) {
  switch (code) {
    case hot::ErrorCode::usage: return HOT_ERR_USAGE;
    case hot::ErrorCode::io: return HOT_ERR_IO;
    case hot::ErrorCode::parse: return HOT_ERR_PARSE;
    case hot::ErrorCode::validation: return HOT_ERR_VALIDATION;
    case hot::ErrorCode::range: return HOT_ERR_RANGE;
    case hot::ErrorCode::planning: return HOT_ERR_PLANNING;
    case hot::ErrorCode::protocol: return HOT_ERR_PROTOCOL;
    case hot::ErrorCode::phase_mismatch: return HOT_ERR_PHASE;
    case hot::ErrorCode::run_failed: return HOT_ERR_RUN_FAILED;
  }
  return HOT_ERR_INTERNAL;
}

template <typename F>
hot_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return HOT_OK;
  } catch (const hot::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HOT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HOT_ERR_INTERNAL;
  }
}

hot_status null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return HOT_ERR_USAGE;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* hot_version(void) { return "1.0.0"; }

const char* hot_status_name(hot_status status) {
  switch (status) {
    case HOT_OK: return "ok";
    case HOT_ERR_USAGE: return "usage";
    case HOT_ERR_IO: return "io";
    case HOT_ERR_PARSE: return "parse";
    case HOT_ERR_VALIDATION: return "validation";
    case HOT_ERR_RANGE: return "range";
    case HOT_ERR_PLANNING: return "planning";
    case HOT_ERR_PROTOCOL: return "protocol";
    case HOT_ERR_PHASE: return "phase_mismatch";
    case HOT_ERR_RUN_FAILED: return "run_failed";
    case HOT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hot_last_error(void) { return g_last_error.c_str(); }

void hot_string_free(char* s) { std::free(s); }

hot_status hot_scenario_load(const char* path, hot_scenario** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new hot_scenario{hot::load_scenario(path)}; });
}

hot_status hot_scenario_parse(const char* text, hot_scenario** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new hot_scenario{hot::parse_scenario(text)}; });
}

hot_status hot_scenario_set_seed(hot_scenario* s, uint64_t seed) {
  if (!s) return null_arg("scenario");
  s->value.seed = seed;
  return HOT_OK;
}

hot_status hot_scenario_to_text(const hot_scenario* s, char** out) {
  if (!s) return null_arg("scenario");
  if (!out) return null_arg("out");
  return guarded([&] { *out = dup_string(hot::format_scenario(s->value)); });
}

void hot_scenario_free(hot_scenario* s) { delete s; }

hot_status hot_run_create(const hot_scenario* s, hot_run** out) {
  if (!s) return null_arg("scenario");
  if (!out) return null_arg("out");
  return guarded([&] {
    auto r = std::make_unique<hot_run>();
    r->scenario = s->value;
    hot::apply_env_overrides(r->cfg);
    *out = r.release();
  });
}

hot_status hot_run_set_report_dir(hot_run* r, const char* dir) {
  if (!r) return null_arg("run");
  r->report_dir = dir ? dir : "";
  return HOT_OK;
}

hot_status hot_run_set_timelapse(hot_run* r, double interval_s) {
  if (!r) return null_arg("run");
  if (!(interval_s >= 0.0)) {
    g_last_error = "time-lapse interval must be >= 0";
    return HOT_ERR_USAGE;
  }
  r->cfg.timelapse_interval = interval_s;
  return HOT_OK;
}

hot_status hot_run_set_slm_destination(hot_run* r, const char* host_port) {
  if (!r) return null_arg("run");
  return guarded([&] {
    if (host_port)
      r->slm_dest = hot::parse_endpoint(host_port);
    else
      r->slm_dest.reset();
  });
}

hot_status hot_run_set_vision(hot_run* r, int enabled) {
  if (!r) return null_arg("run");
  r->cfg.vision_during_execution = enabled != 0;
  return HOT_OK;
}

hot_status hot_run_execute(hot_run* r, int* done) {
  if (!r) return null_arg("run");
  return guarded([&] {
    std::unique_ptr<hot::SlmSink> sink;
    if (r->slm_dest)
      sink = std::make_unique<hot::UdpSender>(*r->slm_dest);
    else
      sink = std::make_unique<hot::MemorySink>();
    hot::Executor ex(r->scenario, r->cfg, sink.get());
    ex.run_to_end();
    r->metrics = ex.metrics();
    if (!r->report_dir.empty()) hot::write_report(ex, r->report_dir);
    if (done) *done = r->metrics->done() ? 1 : 0;
    if (!r->metrics->done()) g_last_error = r->metrics->failure_reason;
  });
}

hot_status hot_run_metrics_json(const hot_run* r, char** out) {
  if (!r) return null_arg("run");
  if (!out) return null_arg("out");
  if (!r->metrics) {
    g_last_error = "run has not been executed";
    return HOT_ERR_PHASE;
  }
  return guarded([&] { *out = dup_string(hot::metrics_to_json(*r->metrics)); });
}

void hot_run_free(hot_run* r) { delete r; }

hot_status hot_gateway_serve(uint16_t port, double realtime_factor, const char* scenario_path) {
  return guarded([&] {
    hot::ServerConfig cfg;
    cfg.port = port;
    cfg.realtime_factor = realtime_factor > 0.0 ? realtime_factor : 1.0;
    hot::apply_env_overrides(cfg.session.exec);
    if (scenario_path) {
      (void)hot::load_scenario(scenario_path);
      cfg.session.preload_path = scenario_path;
    }
    hot::GatewayServer server(cfg);
    server.start();
    server.wait();
  });
}

hot_status hot_session_create(hot_session** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    hot::SessionConfig cfg;
    hot::apply_env_overrides(cfg.exec);
    *out = new hot_session{std::make_unique<hot::Session>(cfg)};
  });
}

hot_status hot_session_apply(hot_session* s, const char* command_json, char** reply_json) {
  if (!s) return null_arg("session");
  if (!command_json) return null_arg("command_json");
  if (!reply_json) return null_arg("reply_json");
  return guarded([&] { *reply_json = dup_string(s->session->apply_text(command_json)); });
}

hot_status hot_session_advance(hot_session* s, int ticks) {
  if (!s) return null_arg("session");
  return guarded([&] { s->session->advance(ticks); });
}

hot_status hot_session_drain(hot_session* s, char** events_json) {
  if (!s) return null_arg("session");
  if (!events_json) return null_arg("events_json");
  return guarded([&] {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& e : s->session->drain_events()) arr.push_back(std::move(e));
    *events_json = dup_string(arr.dump());
  });
}

void hot_session_free(hot_session* s) { delete s; }

hot_status hot_optics_export(const char* dir) {
  if (!dir) return null_arg("dir");
  return guarded([&] { hot::export_optics_figures(dir); });
}

}  // extern "C"
