/* C interface to the holographic optical tweezers automation library. */
#ifndef HOT_H
#define HOT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define HOT_API __attribute__((visibility("default")))
#else
#define HOT_API
#endif

typedef enum hot_status {
  HOT_OK = 0,
  HOT_ERR_USAGE = 1,
  HOT_ERR_IO = 2,
  HOT_ERR_PARSE = 3,
  HOT_ERR_VALIDATION = 4,
  HOT_ERR_RANGE = 5,
  HOT_ERR_PLANNING = 6,
  HOT_ERR_PROTOCOL = 7,
  HOT_ERR_PHASE = 8,
  HOT_ERR_RUN_FAILED = 9,
  HOT_ERR_INTERNAL = 10
} hot_status;

typedef struct hot_scenario hot_scenario;
typedef struct hot_run hot_run;
typedef struct hot_session hot_session;

HOT_API const char* hot_version(void);
HOT_API const char* hot_status_name(hot_status status);
/* Message of the last failing call on this thread; empty when none. */
HOT_API const char* hot_last_error(void);
/* Releases strings returned through char** out-parameters. */
HOT_API void hot_string_free(char* s);

HOT_API hot_status hot_scenario_load(const char* path, hot_scenario** out);
HOT_API hot_status hot_scenario_parse(const char* text, hot_scenario** out);
HOT_API hot_status hot_scenario_set_seed(hot_scenario* s, uint64_t seed);
HOT_API hot_status hot_scenario_to_text(const hot_scenario* s, char** out);
HOT_API void hot_scenario_free(hot_scenario* s);

/* Copies the scenario. HOT_* environment overrides are applied here. */
HOT_API hot_status hot_run_create(const hot_scenario* s, hot_run** out);
HOT_API hot_status hot_run_set_report_dir(hot_run* r, const char* dir);
/* Sim-time interval of time-lapse frames; 0 disables. */
HOT_API hot_status hot_run_set_timelapse(hot_run* r, double interval_s);
/* "host:port" for UDP trap updates; NULL keeps them in memory. */
HOT_API hot_status hot_run_set_slm_destination(hot_run* r, const char* host_port);
/* Camera frames during path execution (on by default). Step-2 detection always runs. */
HOT_API hot_status hot_run_set_vision(hot_run* r, int enabled);
/* Runs to Done or Failed and writes the report if a directory was set.
   *done is 1 on Done. Returns HOT_OK when the run completed either way. */
HOT_API hot_status hot_run_execute(hot_run* r, int* done);
HOT_API hot_status hot_run_metrics_json(const hot_run* r, char** out);
HOT_API void hot_run_free(hot_run* r);

/* Blocks serving one operator at a time until a shutdown command.
   scenario_path may be NULL; otherwise it is loaded into each new session. */
HOT_API hot_status hot_gateway_serve(uint16_t port, double realtime_factor, const char* scenario_path);

HOT_API hot_status hot_session_create(hot_session** out);
/* One JSON command in, one JSON reply out. */
HOT_API hot_status hot_session_apply(hot_session* s, const char* command_json, char** reply_json);
HOT_API hot_status hot_session_advance(hot_session* s, int ticks);
/* Pending telemetry events as a JSON array. */
HOT_API hot_status hot_session_drain(hot_session* s, char** events_json);
HOT_API void hot_session_free(hot_session* s);

/* Phase-mask and far-field PNGs for vortex, line and point traps. */
HOT_API hot_status hot_optics_export(const char* dir);

#ifdef __cplusplus
}
#endif

#endif
