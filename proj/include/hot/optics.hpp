#pragma once

#include <complex>
#include <span>
#include <vector>

#include "hot/geometry.hpp"
#include "hot/scene.hpp"

namespace hot {

struct OpticsConfig {
  int mask_size = 512;
  /// Focal-plane distance of one unpadded DFT bin.
  double um_per_bin = 0.125;
  /// Line target chirp strength; 1 maps the line ends onto the aperture edge.
  double line_chirp = 1.0;
  /// Row fraction = min(1, |H| / (reference * aperture-weighted RMS |H|)).
  double line_rms_reference = 0.8;
  /// Blazed ramp for the diverted rows, cycles per pixel across the line.
  double divert_cycles_per_px = 0.35;
  /// Lens phase at the aperture edge per um of z offset (radians).
  double lens_edge_phase_per_um = kPi;

  double addressable_half_field_um() const { return 0.5 * mask_size * um_per_bin; }
  double mask_center() const { return 0.5 * (mask_size - 1); }
};

/// Square phase-only SLM mask, values in [0, 2pi).
class PhaseMask {
 public:
  explicit PhaseMask(int size = 512) : size_(size), values_(static_cast<std::size_t>(size) * size, 0.0) {}

  int size() const { return size_; }
  double at(int row, int col) const { return values_[index(row, col)]; }
  /// Stores the wrapped value.
  void set(int row, int col, double phase) { values_[index(row, col)] = wrap_phase(phase); }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * size_ + col; }
  int size_;
  std::vector<double> values_;
};

/// Far-field intensity, zero frequency at (N/2, N/2), peak-normalized.
class IntensityMap {
 public:
  IntensityMap(int size, std::vector<double> values) : size_(size), values_(std::move(values)) {}
  int size() const { return size_; }
  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * size_ + col]; }
  std::span<const double> values() const { return values_; }
  int center() const { return size_ / 2; }
  double total() const;
  /// Mean intensity in integer-radius rings around the center.
  std::vector<double> radial_profile() const;

 private:
  int size_;
  std::vector<double> values_;
};

/// Phase l * atan2(p - center), wrapped. Default center is the mask's geometric center.
PhaseMask vortex_phase(int l, const OpticsConfig& cfg = {});
PhaseMask vortex_phase(int l, Vec2 center_px, const OpticsConfig& cfg = {});

/// 1D transform H(u) = sum_xi t(xi) exp(2 pi i u xi / M) of a line target of `length_um`,
/// sampled at pupil coordinates `u` (pixels from the mask center). chirp 0 gives a plain rect.
std::vector<std::complex<double>> line_profile_transform(double length_um, double chirp,
                                                         std::span<const double> u,
                                                         const OpticsConfig& cfg = {});

/// Shape-phase line hologram. Throws RangeError when the line exceeds the addressable field.
PhaseMask line_phase(double length_um, double angle, const OpticsConfig& cfg = {});

/// Blazed grating toward (dx, dy) plus a lens term for z.
PhaseMask point_phase(Vec2 offset_um, double z_um, const OpticsConfig& cfg = {});

struct WeightedMask {
  const PhaseMask* mask = nullptr;
  double weight = 1.0;
};

/// arg(sum w_k exp(i phi_k)). Throws UsageError on an empty list or non-positive weight.
PhaseMask compose_masks(std::span<const WeightedMask> masks);

/// |DFT(aperture * exp(i phi))|^2 on an N = pad * M grid, fftshifted and peak-normalized.
IntensityMap far_field(const PhaseMask& mask, int pad = 2);

// ---------------------------------------------------------------------------
// Trap force model

struct TrapForceConfig {
  /// Full-power stiffness of annular and line traps (pN/um).
  double k_base = 1.0;
  /// Full-power stiffness of point traps (pN/um).
  double k_point = 10.0;
  /// Capture radius as a multiple of the bead radius, measured from the trap's anchor set.
  double capture_radius_factor = 1.5;
};

struct ForceSample {
  Vec2 force;        // pN
  double potential;  // pN*um, zero at the anchor set
};

double trap_stiffness(const Trap& trap, const TrapForceConfig& cfg);
double capture_radius(const TrapForceConfig& cfg, double bead_radius);

/// Closest point of the trap's equilibrium set (point, ring circle or line core segment).
Vec2 trap_anchor(const Trap& trap, Vec2 pos, double bead_radius);

/// Harmonic toward the anchor set inside the capture radius, tapering linearly to zero over
/// one more capture radius.
ForceSample trap_force(const Trap& trap, Vec2 bead_pos, const TrapForceConfig& cfg, double bead_radius);

}  // namespace hot
