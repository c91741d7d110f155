#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hot/scene.hpp"

namespace hot {

/// Synthetic camera and detector calibration.
struct VisionConfig {
  double background = 128.0;
  double noise_sigma = 6.0;
  /// Relative brightness loss at the frame corners.
  double vignette = 0.12;
  double core_level = 45.0;
  double rim_level = 195.0;
  /// Dark core and bright rim radii as fractions of the bead radius.
  double core_fraction = 0.9;
  double rim_fraction = 1.15;
  double bead_radius_um = 2.5;

  int threshold_block = 51;
  double threshold_offset = 60.0;
  bool pre_blur = true;
  int area_min = 350;
  int area_max = 750;
};

/// 640 x 480 8-bit grayscale image.
struct Frame {
  static constexpr int width = Workspace::camera_width_px;
  static constexpr int height = Workspace::camera_height_px;
  std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0);
  double timestamp = 0.0;

  std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

struct Detection {
  Vec2 centroid_px;
  int area = 0;
  /// Mean darkness of the blob below its local threshold mean, in gray levels.
  double score = 0.0;

  Vec2 position_um() const { return Workspace::to_um(centroid_px); }
};

/// Noise comes from `rng`, which should not be the scene's dynamics stream.
Frame render_frame(const Scene& scene, const VisionConfig& cfg, Rng& rng);
Frame render_frame(std::span<const Vec2> bead_positions_um, double timestamp, const VisionConfig& cfg, Rng& rng);

/// Cumulative-histogram remap. A constant frame is returned unchanged.
Frame equalize(const Frame& frame);

/// Detections sorted by x, then y.
std::vector<Detection> detect(const Frame& equalized, const VisionConfig& cfg);

struct TrackerConfig {
  double gate_um = 2.0;
  int max_missed = 3;
};

struct Track {
  int id = 0;
  Vec2 pos;
  int missed = 0;
};

struct TrackerState {
  std::vector<Track> tracks;
  int next_id = 0;
};

/// Greedy mutual-nearest-neighbour association inside the gate. Returns the ids and positions
/// of this frame's detections; unmatched tracks are kept for `max_missed` frames.
std::vector<Observation> track(TrackerState& state, std::span<const Vec2> detections_um,
                               const TrackerConfig& cfg = {});

}  // namespace hot
