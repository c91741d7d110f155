#include "hot/vision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace hot {

namespace {

double coverage(double radius, double d) { return std::clamp(radius - d + 0.5, 0.0, 1.0); }

}  // namespace

Frame render_frame(const Scene& scene, const VisionConfig& cfg, Rng& rng) {
  std::vector<Vec2> pos;
  pos.reserve(scene.beads.size());
  for (const auto& b : scene.beads) pos.push_back(b.pos);
  return render_frame(pos, scene.time, cfg, rng);
}

Frame render_frame(std::span<const Vec2> bead_positions_um, double timestamp, const VisionConfig& cfg, Rng& rng) {
  constexpr int w = Frame::width;
  constexpr int h = Frame::height;
  std::vector<double> img(static_cast<std::size_t>(w) * h);
  const double half_diag2 = 0.25 * (w * w + h * h);
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) {
      const double dx = col + 0.5 - 0.5 * w;
      const double dy = row + 0.5 - 0.5 * h;
      img[static_cast<std::size_t>(row) * w + col] = cfg.background * (1.0 - cfg.vignette * (dx * dx + dy * dy) / half_diag2);
    }

  const double radius_px = cfg.bead_radius_um / Workspace::um_per_px;
  const double core = cfg.core_fraction * radius_px;
  const double rim = cfg.rim_fraction * radius_px;
  for (Vec2 um : bead_positions_um) {
    const Vec2 c = Workspace::to_camera_px(um);
    const int c0 = std::max(0, static_cast<int>(std::floor(c.x - rim - 1)));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + rim + 1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(c.y - rim - 1)));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + rim + 1)));
    for (int row = r0; row <= r1; ++row)
      for (int col = c0; col <= c1; ++col) {
        const double d = std::hypot(col + 0.5 - c.x, row + 0.5 - c.y);
        const double in_core = coverage(core, d);
        const double in_rim = coverage(rim, d) - in_core;
        if (in_core <= 0.0 && in_rim <= 0.0) continue;
        double& v = img[static_cast<std::size_t>(row) * w + col];
        v = v * (1.0 - in_core - in_rim) + cfg.core_level * in_core + cfg.rim_level * in_rim;
      }
  }

  Frame frame;
  frame.timestamp = timestamp;
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = cfg.noise_sigma > 0.0 ? img[i] + noise(rng) : img[i];
    frame.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return frame;
}

Frame equalize(const Frame& frame) {
  std::array<std::size_t, 256> hist{};
  for (auto p : frame.pixels) ++hist[p];
  std::array<std::size_t, 256> cdf{};
  std::partial_sum(hist.begin(), hist.end(), cdf.begin());
  const std::size_t total = frame.pixels.size();
  std::size_t cdf_min = 0;
  for (auto c : cdf)
    if (c > 0) {
      cdf_min = c;
      break;
    }
  if (total == cdf_min) return frame;
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const double t = static_cast<double>(cdf[v] > cdf_min ? cdf[v] - cdf_min : 0) / static_cast<double>(total - cdf_min);
    lut[v] = static_cast<std::uint8_t>(std::lround(t * 255.0));
  }
  Frame out = frame;
  for (auto& p : out.pixels) p = lut[p];
  return out;
}

std::vector<Detection> detect(const Frame& equalized, const VisionConfig& cfg) {
  constexpr int w = Frame::width;
  constexpr int h = Frame::height;
  auto idx = [](int col, int row) { return static_cast<std::size_t>(row) * w + col; };

  // Integral image with a zero border; sum over [c0, c1) x [r0, r1).
  auto integral_of = [&](const std::vector<double>& src) {
    std::vector<double> s(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int row = 0; row < h; ++row) {
      double run = 0.0;
      for (int col = 0; col < w; ++col) {
        run += src[idx(col, row)];
        s[static_cast<std::size_t>(row + 1) * (w + 1) + col + 1] = s[static_cast<std::size_t>(row) * (w + 1) + col + 1] + run;
      }
    }
    return s;
  };
  auto box_mean = [&](const std::vector<double>& s, int col, int row, int half) {
    const int c0 = std::max(0, col - half), c1 = std::min(w, col + half + 1);
    const int r0 = std::max(0, row - half), r1 = std::min(h, row + half + 1);
    auto at = [&](int c, int r) { return s[static_cast<std::size_t>(r) * (w + 1) + c]; };
    const double sum = at(c1, r1) - at(c0, r1) - at(c1, r0) + at(c0, r0);
    return sum / static_cast<double>((c1 - c0) * (r1 - r0));
  };

  std::vector<double> img(equalized.pixels.begin(), equalized.pixels.end());
  if (cfg.pre_blur) {
    const auto s = integral_of(img);
    std::vector<double> blurred(img.size());
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col) blurred[idx(col, row)] = box_mean(s, col, row, 1);
    img = std::move(blurred);
  }
  const auto s = integral_of(img);
  const int half = cfg.threshold_block / 2;
  std::vector<std::uint8_t> fg(img.size(), 0);
  std::vector<double> darkness(img.size(), 0.0);
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) {
      const double mean = box_mean(s, col, row, half);
      const double v = img[idx(col, row)];
      if (v < mean - cfg.threshold_offset) {
        fg[idx(col, row)] = 1;
        darkness[idx(col, row)] = mean - v;
      }
    }

  std::vector<Detection> out;
  std::vector<std::pair<int, int>> stack;
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) {
      if (fg[idx(col, row)] != 1) continue;
      fg[idx(col, row)] = 2;
      stack.assign(1, {col, row});
      long area = 0;
      double sx = 0.0, sy = 0.0, dark = 0.0;
      while (!stack.empty()) {
        const auto [c, r] = stack.back();
        stack.pop_back();
        ++area;
        sx += c + 0.5;
        sy += r + 0.5;
        dark += darkness[idx(c, r)];
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nc = c + dc, nr = r + dr;
            if (nc < 0 || nr < 0 || nc >= w || nr >= h || fg[idx(nc, nr)] != 1) continue;
            fg[idx(nc, nr)] = 2;
            stack.emplace_back(nc, nr);
          }
      }
      if (area < cfg.area_min || area > cfg.area_max) continue;
      out.push_back({{sx / area, sy / area}, static_cast<int>(area), dark / area});
    }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.centroid_px.x != b.centroid_px.x ? a.centroid_px.x < b.centroid_px.x : a.centroid_px.y < b.centroid_px.y;
  });
  return out;
}

std::vector<Observation> track(TrackerState& state, std::span<const Vec2> detections_um, const TrackerConfig& cfg) {
  struct Pair {
    double d;
    std::size_t track;
    std::size_t det;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < state.tracks.size(); ++t)
    for (std::size_t d = 0; d < detections_um.size(); ++d) {
      const double dist = distance(state.tracks[t].pos, detections_um[d]);
      if (dist <= cfg.gate_um) pairs.push_back({dist, t, d});
    }
  // Taking pairs in increasing distance matches each pair only when both ends are each
  // other's nearest remaining partner.
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.track != b.track) return a.track < b.track;
    return a.det < b.det;
  });
  std::vector<int> det_track(detections_um.size(), -1);
  std::vector<bool> track_used(state.tracks.size(), false);
  for (const auto& p : pairs) {
    if (track_used[p.track] || det_track[p.det] >= 0) continue;
    track_used[p.track] = true;
    det_track[p.det] = static_cast<int>(p.track);
  }

  std::vector<Track> next;
  std::vector<Observation> out;
  for (std::size_t d = 0; d < detections_um.size(); ++d) {
    int id;
    if (det_track[d] >= 0) {
      id = state.tracks[static_cast<std::size_t>(det_track[d])].id;
    } else {
      id = state.next_id++;
    }
    next.push_back({id, detections_um[d], 0});
    out.push_back({id, detections_um[d]});
  }
  for (std::size_t t = 0; t < state.tracks.size(); ++t) {
    if (track_used[t]) continue;
    Track old = state.tracks[t];
    if (++old.missed <= cfg.max_missed) next.push_back(old);
  }
  std::sort(next.begin(), next.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  state.tracks = std::move(next);
  return out;
}

}  // namespace hot
