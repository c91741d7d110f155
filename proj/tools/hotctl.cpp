// hotctl: headless runs, the operator gateway and optics figure export.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hot/hot.h"

namespace {

enum Exit { kDone = 0, kFailed = 1, kUsage = 2, kMissingFile = 3, kInvalidScenario = 4 };

int exit_for_load(hot_status st) {
  switch (st) {
    case HOT_ERR_IO: return kMissingFile;
    case HOT_ERR_PARSE:
    case HOT_ERR_VALIDATION:
    case HOT_ERR_RANGE: return kInvalidScenario;
    case HOT_ERR_USAGE: return kUsage;
    default: return kFailed;
  }
}

void report_error(const char* what, hot_status st) {
  std::fprintf(stderr, "hotctl: %s: %s (%s)\n", what, hot_last_error(), hot_status_name(st));
}

int do_run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const std::string& report,
           double timelapse, const std::string& slm_dest, bool no_vision, bool quiet) {
  hot_scenario* sc = nullptr;
  hot_status st = hot_scenario_load(scenario_path.c_str(), &sc);
  if (st != HOT_OK) {
    report_error("cannot load scenario", st);
    return exit_for_load(st);
  }
  if (seed) hot_scenario_set_seed(sc, *seed);
  hot_run* run = nullptr;
  st = hot_run_create(sc, &run);
  hot_scenario_free(sc);
  if (st != HOT_OK) {
    report_error("cannot configure run", st);
    return st == HOT_ERR_USAGE ? kUsage : kFailed;
  }
  int rc = kFailed;
  if (!report.empty()) hot_run_set_report_dir(run, report.c_str());
  if ((st = hot_run_set_timelapse(run, timelapse)) != HOT_OK ||
      (!slm_dest.empty() && (st = hot_run_set_slm_destination(run, slm_dest.c_str())) != HOT_OK)) {
    report_error("invalid option", st);
    hot_run_free(run);
    return kUsage;
  }
  hot_run_set_vision(run, no_vision ? 0 : 1);
  int done = 0;
  st = hot_run_execute(run, &done);
  if (st != HOT_OK) {
    report_error("run aborted", st);
  } else {
    char* json = nullptr;
    if (!quiet && hot_run_metrics_json(run, &json) == HOT_OK) {
      std::printf("%s\n", json);
      hot_string_free(json);
    }
    if (!done) std::fprintf(stderr, "hotctl: run failed: %s\n", hot_last_error());
    rc = done ? kDone : kFailed;
  }
  hot_run_free(run);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Holographic optical tweezers automation"};
  app.require_subcommand(1);

  std::string scenario, report, slm_dest;
  std::optional<std::uint64_t> seed;
  double timelapse = 0.0;
  int serve_port = -1;
  double realtime = 1.0;
  bool headless = false, no_vision = false, quiet = false;

  auto* run = app.add_subcommand("run", "Execute a scenario");
  run->add_option("--scenario", scenario, "Scenario file");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--report", report, "Report directory");
  run->add_option("--timelapse", timelapse, "Time-lapse interval in sim seconds (0 = off)")->check(CLI::NonNegativeNumber);
  run->add_option("--slm-dest", slm_dest, "UDP destination host:port for trap updates");
  run->add_option("--serve", serve_port, "Serve the operator gateway on this TCP port instead of running")
      ->check(CLI::Range(0, 65535));
  run->add_option("--realtime", realtime, "Sim seconds per wall second when serving")->check(CLI::PositiveNumber);
  run->add_flag("--headless", headless, "No interactive session (default when --serve is absent)");
  run->add_flag("--no-vision", no_vision, "Skip camera frames during path execution");
  run->add_flag("--quiet", quiet, "Do not print the metrics report");

  std::string optics_dir;
  auto* optics = app.add_subcommand("optics", "Export phase masks and far-field intensities");
  optics->add_option("--out", optics_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*optics) {
    const hot_status st = hot_optics_export(optics_dir.c_str());
    if (st != HOT_OK) {
      report_error("optics export failed", st);
      return st == HOT_ERR_IO ? kMissingFile : kFailed;
    }
    return kDone;
  }

  if (serve_port >= 0 && !headless) {
    const hot_status st = hot_gateway_serve(static_cast<std::uint16_t>(serve_port), realtime,
                                            scenario.empty() ? nullptr : scenario.c_str());
    if (st != HOT_OK) {
      report_error("gateway stopped", st);
      return exit_for_load(st);
    }
    return kDone;
  }
  if (scenario.empty()) {
    std::fprintf(stderr, "hotctl: run needs --scenario (or --serve <port>)\n");
    return kUsage;
  }
  return do_run(scenario, seed, report, timelapse, slm_dest, no_vision, quiet);
}
