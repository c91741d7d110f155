#include "hot/report.hpp"

#include <cstdio>
#include <fstream>

#include "hot/error.hpp"
#include "hot/image_io.hpp"
#include "hot/optics.hpp"

namespace hot {

namespace {

std::string numbered(const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02zu.png", stem, i);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<std::filesystem::path> write_report(const Executor& ex, const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> files;

  const auto report = dir / "report.json";
  {
    std::ofstream out(report);
    if (!out) throw IoError("cannot write " + report.string());
    out << metrics_to_json(ex.metrics()) << "\n";
  }
  files.push_back(report);

  const auto log = dir / "trajectory.tsv";
  ex.log().write(log.string());
  files.push_back(log);

  std::vector<Vec2> obstacles;
  for (const auto& o : ex.obstacles()) obstacles.push_back(o.pos);
  for (std::size_t i = 0; i < ex.plans().size(); ++i) {
    const auto& plan = ex.plans()[i];
    const auto& track = ex.tracks()[i];
    const auto path = dir / ("costfield_trap" + std::to_string(plan.trap_id) + ".png");
    write_png(path, costfield_heatmap(plan, track.points.front(), track.points.back(), obstacles));
    files.push_back(path);
  }

  const auto& lapse = ex.timelapse();
  if (!lapse.empty()) {
    std::vector<RgbImage> tiles;
    for (std::size_t i = 0; i < lapse.size(); ++i) {
      std::vector<Trap> active;
      for (const auto& t : lapse[i].traps) active.push_back(t);
      tiles.push_back(overlay_frame(lapse[i].frame, active, lapse[i].detections_um, ex.scene().bead_radius));
      const auto path = dir / numbered("timelapse", i);
      write_png(path, tiles.back());
      files.push_back(path);
    }
    const auto strip = dir / "timelapse_strip.png";
    write_png(strip, hstack(tiles));
    files.push_back(strip);
  }
  return files;
}

std::vector<std::filesystem::path> export_optics_figures(const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> files;
  const OpticsConfig cfg;
  auto save = [&](const std::string& stem, const PhaseMask& mask, int crop) {
    const auto phase = dir / (stem + "_phase.png");
    write_png_gray16(phase, mask.size(), mask.size(), phase_to_gray16(mask));
    const auto field = far_field(mask);
    const auto inten = dir / (stem + "_intensity.png");
    write_png_gray16(inten, crop, crop, intensity_to_gray16(field, crop, 0.5));
    files.push_back(phase);
    files.push_back(inten);
  };
  for (int l : {1, 5, 15}) save("vortex_l" + std::to_string(l), vortex_phase(l, cfg), 256);
  save("line_10um", line_phase(10.0, 0.0, cfg), 256);
  save("point_offset", point_phase({8.0, -5.0}, 0.0, cfg), 512);
  return files;
}

}  // namespace hot
