#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hot/optics.hpp"
#include "hot/planner.hpp"
#include "hot/vision.hpp"

namespace hot {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {});
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void draw_circle(Vec2 center, double radius, Rgb c, double thickness = 1.5);
  void fill_circle(Vec2 center, double radius, Rgb c);
  void draw_line(Vec2 a, Vec2 b, Rgb c);
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_png_gray8(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> data);
void write_png_gray16(const std::filesystem::path& path, int width, int height, std::span<const std::uint16_t> data);
std::vector<std::uint8_t> encode_png_gray8(int width, int height, std::span<const std::uint8_t> data);
/// Any PNG, converted to 8-bit gray.
GrayImage read_png_gray8(const std::filesystem::path& path);
RgbImage read_png_rgb(const std::filesystem::path& path);

/// Phase [0, 2pi) mapped onto 0..65535.
std::vector<std::uint16_t> phase_to_gray16(const PhaseMask& mask);
/// Central `crop` x `crop` window of the far field, scaled 0..65535 with optional gamma.
std::vector<std::uint16_t> intensity_to_gray16(const IntensityMap& map, int crop, double gamma = 1.0);

/// Frame with active traps in green and detections in blue.
RgbImage overlay_frame(const Frame& frame, std::span<const Trap> traps, std::span<const Vec2> detections_um,
                       double bead_radius);

/// Cost field with inflation in blue, reserved cells gray, obstacles red, start yellow, goal green.
RgbImage costfield_heatmap(const PlannedTrap& plan, Vec2 start, Vec2 goal, std::span<const Vec2> obstacles,
                           int px_per_cell = 12);

/// Images side by side with a small gap.
RgbImage hstack(std::span<const RgbImage> images, int gap = 8);

}  // namespace hot
