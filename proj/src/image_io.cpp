#include "hot/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hot/error.hpp"

namespace hot {

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill.r;
    data[i + 1] = fill.g;
    data[i + 2] = fill.b;
  }
}

Rgb RgbImage::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {data[i], data[i + 1], data[i + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  data[i] = c.r;
  data[i + 1] = c.g;
  data[i + 2] = c.b;
}

void RgbImage::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) set(x, y, c);
}

void RgbImage::draw_circle(Vec2 center, double radius, Rgb c, double thickness) {
  const int x0 = static_cast<int>(std::floor(center.x - radius - thickness));
  const int x1 = static_cast<int>(std::ceil(center.x + radius + thickness));
  const int y0 = static_cast<int>(std::floor(center.y - radius - thickness));
  const int y1 = static_cast<int>(std::ceil(center.y + radius + thickness));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x + 0.5 - center.x, y + 0.5 - center.y);
      if (std::abs(d - radius) <= 0.5 * thickness) set(x, y, c);
    }
}

void RgbImage::fill_circle(Vec2 center, double radius, Rgb c) {
  for (int y = static_cast<int>(center.y - radius - 1); y <= static_cast<int>(center.y + radius + 1); ++y)
    for (int x = static_cast<int>(center.x - radius - 1); x <= static_cast<int>(center.x + radius + 1); ++x)
      if (std::hypot(x + 0.5 - center.x, y + 0.5 - center.y) <= radius) set(x, y, c);
}

void RgbImage::draw_line(Vec2 a, Vec2 b, Rgb c) {
  const int n = static_cast<int>(std::ceil(distance(a, b))) + 1;
  for (int i = 0; i <= n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
    set(static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)), c);
  }
}

namespace {

void write_image(const std::filesystem::path& path, png_image& image, const void* buffer) {
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer, 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

png_image make_image(int w, int h, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  return image;
}

void check_size(int w, int h, std::size_t n, std::size_t channels) {
  if (w <= 0 || h <= 0 || n != static_cast<std::size_t>(w) * h * channels) throw UsageError("image buffer size mismatch");
}

Rgb jet(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto ch = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); };
  return {ch(1.5 - std::abs(4.0 * t - 3.0)), ch(1.5 - std::abs(4.0 * t - 2.0)), ch(1.5 - std::abs(4.0 * t - 1.0))};
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  check_size(img.width, img.height, img.data.size(), 3);
  png_image image = make_image(img.width, img.height, PNG_FORMAT_RGB);
  write_image(path, image, img.data.data());
}

void write_png_gray8(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> data) {
  check_size(width, height, data.size(), 1);
  png_image image = make_image(width, height, PNG_FORMAT_GRAY);
  write_image(path, image, data.data());
}

void write_png_gray16(const std::filesystem::path& path, int width, int height, std::span<const std::uint16_t> data) {
  check_size(width, height, data.size(), 1);
  png_image image = make_image(width, height, PNG_FORMAT_LINEAR_Y);
  write_image(path, image, data.data());
}

std::vector<std::uint8_t> encode_png_gray8(int width, int height, std::span<const std::uint8_t> data) {
  check_size(width, height, data.size(), 1);
  png_image image = make_image(width, height, PNG_FORMAT_GRAY);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

namespace {

std::vector<std::uint8_t> read_as(const std::filesystem::path& path, png_uint_32 format, int& w, int& h) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  w = static_cast<int>(image.width);
  h = static_cast<int>(image.height);
  return buf;
}

}  // namespace

GrayImage read_png_gray8(const std::filesystem::path& path) {
  GrayImage g;
  g.data = read_as(path, PNG_FORMAT_GRAY, g.width, g.height);
  return g;
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  RgbImage img;
  img.data = read_as(path, PNG_FORMAT_RGB, img.width, img.height);
  return img;
}

std::vector<std::uint16_t> phase_to_gray16(const PhaseMask& mask) {
  std::vector<std::uint16_t> out(mask.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint16_t>(std::min(65535.0, std::floor(mask.values()[i] / kTwoPi * 65536.0)));
  return out;
}

std::vector<std::uint16_t> intensity_to_gray16(const IntensityMap& map, int crop, double gamma) {
  crop = std::clamp(crop, 1, map.size());
  const int off = map.center() - crop / 2;
  std::vector<double> v(static_cast<std::size_t>(crop) * crop);
  double peak = 0.0;
  for (int r = 0; r < crop; ++r)
    for (int c = 0; c < crop; ++c) {
      const double x = map.at(off + r, off + c);
      v[static_cast<std::size_t>(r) * crop + c] = x;
      peak = std::max(peak, x);
    }
  std::vector<std::uint16_t> out(v.size(), 0);
  if (peak <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = static_cast<std::uint16_t>(std::lround(65535.0 * std::pow(v[i] / peak, gamma)));
  return out;
}

RgbImage overlay_frame(const Frame& frame, std::span<const Trap> traps, std::span<const Vec2> detections_um,
                       double bead_radius) {
  RgbImage img(Frame::width, Frame::height);
  for (int y = 0; y < Frame::height; ++y)
    for (int x = 0; x < Frame::width; ++x) {
      const auto g = frame.at(x, y);
      img.set(x, y, {g, g, g});
    }
  const double scale = 1.0 / Workspace::um_per_px;
  const Rgb blue{40, 90, 255};
  const Rgb green{40, 220, 60};
  for (Vec2 d : detections_um) img.draw_circle(d * scale, bead_radius * scale * 1.1, blue, 2.0);
  for (const auto& t : traps) {
    const Vec2 c = t.center * scale;
    switch (t.kind) {
      case TrapKind::annular:
        img.draw_circle(c, t.ring_radius * scale, green, 2.0);
        break;
      case TrapKind::line: {
        const Vec2 h = unit_from_angle(t.angle) * (0.5 * t.length * scale);
        const Vec2 n{-unit_from_angle(t.angle).y, unit_from_angle(t.angle).x};
        for (int k = -1; k <= 1; ++k) img.draw_line(c - h + n * k, c + h + n * k, green);
        break;
      }
      case TrapKind::point:
        img.draw_circle(c, 0.6 * bead_radius * scale, green, 2.0);
        break;
    }
  }
  return img;
}

RgbImage costfield_heatmap(const PlannedTrap& plan, Vec2 start, Vec2 goal, std::span<const Vec2> obstacles,
                           int px_per_cell) {
  const auto& f = plan.field;
  const auto& g = plan.grid;
  RgbImage img(f.cols() * px_per_cell, f.rows() * px_per_cell);
  const double vmax = std::max(3, f.max_value());
  for (int row = 0; row < f.rows(); ++row)
    for (int col = 0; col < f.cols(); ++col) {
      const Cell c{col, row};
      Rgb color;
      if (g.at(c) == CellState::inflated)
        color = {20, 30, 170};
      else if (g.at(c) == CellState::obstacle)
        color = {110, 110, 110};
      else if (f.at(c) == 0)
        color = {0, 0, 0};
      else
        color = jet((f.at(c) - 2) / (vmax - 2));
      img.fill_rect(col * px_per_cell, row * px_per_cell, (col + 1) * px_per_cell, (row + 1) * px_per_cell, color);
    }
  const double s = px_per_cell / kCellSize;
  for (std::size_t i = 1; i < plan.path.size(); ++i)
    img.draw_line(OccupancyGrid::center_of(plan.path[i - 1]) * s, OccupancyGrid::center_of(plan.path[i]) * s, {255, 255, 255});
  for (Vec2 o : obstacles) img.fill_circle(o * s, 0.3 * px_per_cell + 1, {230, 30, 30});
  img.fill_circle(start * s, 0.45 * px_per_cell, {255, 230, 0});
  img.fill_circle(goal * s, 0.45 * px_per_cell, {0, 200, 60});
  return img;
}

RgbImage hstack(std::span<const RgbImage> images, int gap) {
  if (images.empty()) return {};
  int w = 0, h = 0;
  for (const auto& im : images) {
    w += im.width;
    h = std::max(h, im.height);
  }
  w += gap * static_cast<int>(images.size() - 1);
  RgbImage out(w, h, {255, 255, 255});
  int x0 = 0;
  for (const auto& im : images) {
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) out.set(x0 + x, y, im.at(x, y));
    x0 += im.width + gap;
  }
  return out;
}

}  // namespace hot
