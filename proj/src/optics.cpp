#include "hot/optics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "hot/error.hpp"

namespace hot {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

double snap_unit(double v) {
  if (std::abs(v) < 1e-12) return 0.0;
  if (std::abs(v - 1.0) < 1e-12) return 1.0;
  if (std::abs(v + 1.0) < 1e-12) return -1.0;
  return v;
}

bool in_aperture(double du, double dv, double radius) { return du * du + dv * dv <= radius * radius; }

}  // namespace

double IntensityMap::total() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

std::vector<double> IntensityMap::radial_profile() const {
  const int c = center();
  const int nbins = size_ / 2;
  std::vector<double> sum(nbins, 0.0);
  std::vector<int> count(nbins, 0);
  for (int r = 0; r < size_; ++r)
    for (int col = 0; col < size_; ++col) {
      const int bin = static_cast<int>(std::lround(std::hypot(r - c, col - c)));
      if (bin >= nbins) continue;
      sum[bin] += at(r, col);
      ++count[bin];
    }
  for (int i = 0; i < nbins; ++i)
    if (count[i]) sum[i] /= count[i];
  return sum;
}

PhaseMask vortex_phase(int l, const OpticsConfig& cfg) {
  return vortex_phase(l, {cfg.mask_center(), cfg.mask_center()}, cfg);
}

PhaseMask vortex_phase(int l, Vec2 center_px, const OpticsConfig& cfg) {
  if (l < 0) throw UsageError("vortex_phase: topological charge must be >= 0");
  PhaseMask mask(cfg.mask_size);
  if (l == 0) return mask;
  for (int row = 0; row < cfg.mask_size; ++row)
    for (int col = 0; col < cfg.mask_size; ++col)
      mask.set(row, col, l * std::atan2(row - center_px.y, col - center_px.x));
  return mask;
}

std::vector<std::complex<double>> line_profile_transform(double length_um, double chirp,
                                                         std::span<const double> u,
                                                         const OpticsConfig& cfg) {
  const double bins = length_um / cfg.um_per_bin;
  const int n = static_cast<int>(std::floor(bins)) + 1;
  std::vector<std::complex<double>> target(n);
  std::vector<double> xi(n);
  for (int i = 0; i < n; ++i) {
    xi[i] = i - 0.5 * (n - 1);
    target[i] = std::polar(1.0, kPi * chirp * xi[i] * xi[i] / bins);
  }
  const double m = cfg.mask_size;
  std::vector<std::complex<double>> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < n; ++i) acc += target[i] * std::polar(1.0, kTwoPi * u[k] * xi[i] / m);
    out[k] = acc;
  }
  return out;
}

PhaseMask line_phase(double length_um, double angle, const OpticsConfig& cfg) {
  if (!(length_um > 0.0)) throw UsageError("line_phase: length must be > 0");
  if (length_um > cfg.addressable_half_field_um())
    throw RangeError("line_phase: length " + std::to_string(length_um) + " um exceeds the addressable field (" +
                     std::to_string(cfg.addressable_half_field_um()) + " um)");

  const int m = cfg.mask_size;
  const double c = cfg.mask_center();
  const double radius = 0.5 * m;

  // Transform sampled on a fine lattice with integer nodes so axis-aligned masks use exact values.
  constexpr int kOversample = 16;
  const int reach = static_cast<int>(std::ceil(radius * std::sqrt(2.0))) + 1;
  std::vector<double> lattice;
  lattice.reserve(2 * reach * kOversample + 1);
  for (int i = -reach * kOversample; i <= reach * kOversample; ++i) lattice.push_back(static_cast<double>(i) / kOversample);
  const auto h = line_profile_transform(length_um, cfg.line_chirp, lattice, cfg);

  // Aperture-weighted RMS of |H| over integer columns.
  double num = 0.0, den = 0.0;
  for (int u = -static_cast<int>(radius); u <= static_cast<int>(radius); ++u) {
    const double chord = std::sqrt(std::max(0.0, radius * radius - double(u) * u));
    const auto& hv = h[static_cast<std::size_t>((u + reach) * kOversample)];
    num += std::norm(hv) * chord;
    den += chord;
  }
  const double reference = cfg.line_rms_reference * std::sqrt(num / den);

  auto sample = [&](double up) {
    const double pos = (up + reach) * kOversample;
    const auto i0 = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - i0;
    if (f == 0.0 || i0 + 1 >= h.size()) return h[std::min(i0, h.size() - 1)];
    return h[i0] * (1.0 - f) + h[i0 + 1] * f;
  };

  const double ca = snap_unit(std::cos(angle));
  const double sa = snap_unit(std::sin(angle));
  PhaseMask mask(m);
  for (int row = 0; row < m; ++row) {
    const double v = row - c;
    for (int col = 0; col < m; ++col) {
      const double u = col - c;
      const double along = u * ca + v * sa;
      const double across = -u * sa + v * ca;
      const std::complex<double> hv = sample(along);
      const double fraction = std::min(1.0, std::abs(hv) / reference);
      const double half_chord = std::sqrt(std::max(0.0, radius * radius - along * along));
      if (std::abs(across) <= fraction * half_chord)
        mask.set(row, col, std::arg(hv));
      else
        mask.set(row, col, kTwoPi * cfg.divert_cycles_per_px * across);
    }
  }
  return mask;
}

PhaseMask point_phase(Vec2 offset_um, double z_um, const OpticsConfig& cfg) {
  const double half = cfg.addressable_half_field_um();
  if (std::abs(offset_um.x) > half || std::abs(offset_um.y) > half)
    throw RangeError("point_phase: offset outside the addressable field");
  const int m = cfg.mask_size;
  const double c = cfg.mask_center();
  const double fx = offset_um.x / cfg.um_per_bin / m;  // cycles per pixel
  const double fy = offset_um.y / cfg.um_per_bin / m;
  const double r2 = 0.25 * m * m;
  PhaseMask mask(m);
  if (offset_um.x == 0.0 && offset_um.y == 0.0 && z_um == 0.0) return mask;
  for (int row = 0; row < m; ++row)
    for (int col = 0; col < m; ++col) {
      const double u = col - c;
      const double v = row - c;
      mask.set(row, col, kTwoPi * (fx * u + fy * v) + cfg.lens_edge_phase_per_um * z_um * (u * u + v * v) / r2);
    }
  return mask;
}

PhaseMask compose_masks(std::span<const WeightedMask> masks) {
  if (masks.empty()) throw UsageError("compose_masks: empty mask list");
  const int m = masks.front().mask->size();
  for (const auto& wm : masks) {
    if (!wm.mask || wm.mask->size() != m) throw UsageError("compose_masks: mask size mismatch");
    if (!(wm.weight > 0.0)) throw UsageError("compose_masks: weights must be > 0");
  }
  if (masks.size() == 1) return *masks.front().mask;
  PhaseMask out(m);
  const std::size_t n = static_cast<std::size_t>(m) * m;
  std::vector<std::complex<double>> terms(masks.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < masks.size(); ++k)
      terms[k] = masks[k].weight * std::polar(1.0, masks[k].mask->values()[i]);
    // Sum in a canonical order so the result does not depend on list order.
    std::sort(terms.begin(), terms.end(), [](auto a, auto b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::complex<double> acc = 0.0;
    for (const auto& t : terms) acc += t;
    const int row = static_cast<int>(i / m);
    const int col = static_cast<int>(i % m);
    out.set(row, col, std::abs(acc) == 0.0 ? 0.0 : std::arg(acc));
  }
  return out;
}

IntensityMap far_field(const PhaseMask& mask, int pad) {
  if (pad < 1) throw UsageError("far_field: pad must be >= 1");
  const int m = mask.size();
  const int n = m * pad;
  const double c = 0.5 * (m - 1);
  const double radius = 0.5 * m;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  std::fill(reinterpret_cast<double*>(buf), reinterpret_cast<double*>(buf) + 2 * n * n, 0.0);
  for (int row = 0; row < m; ++row)
    for (int col = 0; col < m; ++col) {
      if (!in_aperture(col - c, row - c, radius)) continue;
      const double phi = mask.at(row, col);
      auto& z = buf[static_cast<std::size_t>(row) * n + col];
      z[0] = std::cos(phi);
      z[1] = std::sin(phi);
    }
  fftw_execute(plan);
  std::vector<double> intensity(static_cast<std::size_t>(n) * n);
  double peak = 0.0;
  const int half = n / 2;
  for (int row = 0; row < n; ++row)
    for (int col = 0; col < n; ++col) {
      const auto& z = buf[static_cast<std::size_t>(row) * n + col];
      const double v = z[0] * z[0] + z[1] * z[1];
      const int sr = (row + half) % n;
      const int sc = (col + half) % n;
      intensity[static_cast<std::size_t>(sr) * n + sc] = v;
      peak = std::max(peak, v);
    }
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  if (peak > 0.0)
    for (auto& v : intensity) v /= peak;
  return IntensityMap(n, std::move(intensity));
}

// ---------------------------------------------------------------------------

double trap_stiffness(const Trap& trap, const TrapForceConfig& cfg) {
  const double base = trap.kind == TrapKind::point ? cfg.k_point : cfg.k_base;
  return base * trap.power_share;
}

double capture_radius(const TrapForceConfig& cfg, double bead_radius) {
  return cfg.capture_radius_factor * bead_radius;
}

Vec2 trap_anchor(const Trap& trap, Vec2 pos, double bead_radius) {
  switch (trap.kind) {
    case TrapKind::point:
      return trap.center;
    case TrapKind::annular: {
      const Vec2 d = pos - trap.center;
      const double rho = norm(d);
      const Vec2 dir = rho > 0.0 ? d / rho : Vec2{1.0, 0.0};
      return trap.center + dir * trap.ring_radius;
    }
    case TrapKind::line: {
      const double half = std::max(0.0, 0.5 * trap.length - bead_radius);
      const Vec2 axis = unit_from_angle(trap.angle);
      return closest_on_segment(pos, trap.center - axis * half, trap.center + axis * half);
    }
  }
  return trap.center;
}

ForceSample trap_force(const Trap& trap, Vec2 bead_pos, const TrapForceConfig& cfg, double bead_radius) {
  const double k = trap_stiffness(trap, cfg);
  const double rc = capture_radius(cfg, bead_radius);
  const double taper = rc;
  const Vec2 anchor = trap_anchor(trap, bead_pos, bead_radius);
  Vec2 offset = bead_pos - anchor;
  double d = norm(offset);
  if (trap.kind == TrapKind::annular && bead_pos == trap.center) {
    offset = Vec2{-trap.ring_radius, 0.0};
    d = trap.ring_radius;
  }
  if (d == 0.0) return {{0.0, 0.0}, 0.0};
  double magnitude = 0.0;
  double potential = 0.0;
  if (d <= rc) {
    magnitude = k * d;
    potential = 0.5 * k * d * d;
  } else if (d < rc + taper) {
    const double s = d - rc;
    magnitude = k * rc * (1.0 - s / taper);
    potential = 0.5 * k * rc * rc + k * rc * (s - s * s / (2.0 * taper));
  } else {
    potential = 0.5 * k * rc * rc + 0.5 * k * rc * taper;
  }
  return {offset * (-magnitude / d), potential};
}

}  // namespace hot
