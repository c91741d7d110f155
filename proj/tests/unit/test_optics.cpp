#include <complex>

#include "doctest.h"
#include "hot/error.hpp"
#include "hot/optics.hpp"

using namespace hot;

namespace {

int winding(const PhaseMask& m, int r0, int c0, int half) {
  std::vector<std::pair<int, int>> loop;
  for (int x = c0 - half; x < c0 + half; ++x) loop.push_back({r0 - half, x});
  for (int y = r0 - half; y < r0 + half; ++y) loop.push_back({y, c0 + half});
  for (int x = c0 + half; x > c0 - half; --x) loop.push_back({r0 + half, x});
  for (int y = r0 + half; y > r0 - half; --y) loop.push_back({y, c0 - half});
  double total = 0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const auto [a, b] = loop[k];
    const auto [c, d] = loop[(k + 1) % loop.size()];
    total += wrap_difference(m.at(c, d) - m.at(a, b));
  }
  const double w = total / kTwoPi;
  REQUIRE(std::abs(w - std::round(w)) < 1e-6);
  return static_cast<int>(std::lround(w));
}

std::pair<int, int> argmax(const IntensityMap& ff) {
  int br = 0, bc = 0;
  double best = -1;
  for (int r = 0; r < ff.size(); ++r)
    for (int c = 0; c < ff.size(); ++c)
      if (ff.at(r, c) > best) best = ff.at(r, c), br = r, bc = c;
  return {br, bc};
}

double max_value(const IntensityMap& ff) {
  double m = 0;
  for (double v : ff.values()) m = std::max(m, v);
  return m;
}

Trap make(TrapKind k) {
  Trap t;
  t.kind = k;
  t.center = {50, 40};
  t.power_share = 0.7;
  if (k == TrapKind::annular) {
    t.topological_charge = 15;
    t.ring_radius = 4.05;
  } else if (k == TrapKind::line) {
    t.length = 15;
    t.angle = 0.6;
  }
  return t;
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("vortex phase follows l * atan2 and stays wrapped") {
  CHECK_THROWS_AS(vortex_phase(-1), UsageError);
  const PhaseMask zero = vortex_phase(0);
  for (double v : zero.values()) CHECK(v == 0.0);
  const PhaseMask m = vortex_phase(15);
  CHECK(m.size() == 512);
  for (double v : m.values()) {
    CHECK(v >= 0.0);
    CHECK(v < kTwoPi);
  }
  const double c = 255.5;
  for (auto [r, col] : {std::pair{0, 0}, {100, 300}, {511, 17}, {256, 256}}) {
    const double expect = wrap_phase(15 * std::atan2(r - c, col - c));
    CHECK(std::abs(wrap_difference(m.at(r, col) - expect)) < 1e-9);
  }
}

TEST_CASE("winding number equals charge on every enclosing loop") {
  for (int l : {1, 5, 15}) {
    const PhaseMask m = vortex_phase(l);
    for (int half : {20, 60, 150, 250}) CHECK(winding(m, 256, 256, half) == l);
    CHECK(winding(m, 300, 280, 100) == l);  // off-center loop still enclosing the singularity
    CHECK(winding(m, 100, 100, 40) == 0);   // loop not enclosing it
  }
  const PhaseMask shifted = vortex_phase(3, Vec2{100.5, 400.5});
  CHECK(winding(shifted, 400, 100, 30) == 3);
  CHECK(winding(shifted, 256, 256, 60) == 0);
}

TEST_CASE("far field matches a brute-force DFT of the aperture field") {
  OpticsConfig cfg;
  cfg.mask_size = 32;
  PhaseMask m(32);
  Rng rng(8);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) m.set(r, c, phase(rng));
  const int pad = 2, n = 64;
  const IntensityMap ff = far_field(m, pad);
  REQUIRE(ff.size() == n);
  std::vector<double> ref(n * n);
  double peak = 0;
  for (int kr = 0; kr < n; ++kr)
    for (int kc = 0; kc < n; ++kc) {
      std::complex<double> acc = 0;
      for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) {
          const double du = c - 15.5, dv = r - 15.5;
          if (du * du + dv * dv > 16.0 * 16.0) continue;
          acc += std::polar(1.0, m.at(r, c) - kTwoPi * (double(kr) * r + double(kc) * c) / n);
        }
      const int sr = (kr + n / 2) % n, sc = (kc + n / 2) % n;
      ref[sr * n + sc] = std::norm(acc);
      peak = std::max(peak, std::norm(acc));
    }
  double worst = 0;
  for (int i = 0; i < n * n; ++i) worst = std::max(worst, std::abs(ff.values()[i] - ref[i] / peak));
  CHECK(worst < 1e-10);
  CHECK(max_value(ff) == doctest::Approx(1.0));
}

TEST_CASE("uniform mask gives a single central peak") {
  const IntensityMap ff = far_field(PhaseMask(512));
  CHECK(argmax(ff) == std::pair{ff.center(), ff.center()});
  CHECK(ff.at(ff.center(), ff.center()) == doctest::Approx(1.0));
  for (double v : ff.values()) CHECK(v >= 0.0);
  // Airy core: first dark ring near 1.22 unpadded bins, i.e. 2.44 padded bins.
  const auto prof = ff.radial_profile();
  CHECK(prof[1] > prof[2]);
  CHECK(prof[2] < 0.2);
}

TEST_CASE("vortex centers are dark for every positive charge") {
  for (int l = 1; l <= 20; ++l) {
    const IntensityMap ff = far_field(vortex_phase(l), 1);
    CHECK(ff.at(ff.center(), ff.center()) <= 1e-6 * max_value(ff));
  }
  const IntensityMap z = far_field(vortex_phase(0));
  CHECK(argmax(z) == std::pair{z.center(), z.center()});
}

TEST_CASE("ring radius grows with charge") {
  auto ring = [](int l) {
    const auto p = far_field(vortex_phase(l)).radial_profile();
    return std::max_element(p.begin(), p.end()) - p.begin();
  };
  const auto r5 = ring(5), r15 = ring(15);
  CHECK(r15 > r5);
  CHECK(ring(1) < r5);
}

TEST_CASE("line phase errors") {
  CHECK_THROWS_AS(line_phase(0.0, 0.0), UsageError);
  CHECK_THROWS_AS(line_phase(-3.0, 0.0), UsageError);
  CHECK_THROWS_AS(line_phase(33.0, 0.0), RangeError);
  CHECK_NOTHROW(line_phase(32.0, 0.0));
}

TEST_CASE("line masks at 0 and pi/2 are related by a quarter turn") {
  const PhaseMask a = line_phase(10.0, 0.0), b = line_phase(10.0, kPi / 2);
  double worst = 0;
  for (int r = 0; r < 512; ++r)
    for (int c = 0; c < 512; ++c) worst = std::max(worst, std::abs(wrap_difference(b.at(r, c) - a.at(511 - c, r))));
  CHECK(worst < 1e-9);
}

TEST_CASE("doubling the line length halves the central lobe of the column transform") {
  auto first_zero = [](double L) {
    std::vector<double> u;
    for (double x = 0.0; x < 40.0; x += 0.005) u.push_back(x);
    const auto h = line_profile_transform(L, 0.0, u);
    for (std::size_t k = 1; k + 1 < h.size(); ++k)
      if (std::abs(h[k]) < std::abs(h[k - 1]) && std::abs(h[k]) <= std::abs(h[k + 1])) return u[k];
    return -1.0;
  };
  for (double L : {2.5, 5.0, 10.0}) {
    const double ratio = first_zero(L) / first_zero(2 * L);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("line far field concentrates inside its envelope") {
  const OpticsConfig cfg;
  const double w = 2.44 * cfg.um_per_bin, bin = cfg.um_per_bin / 2;
  const IntensityMap ff = far_field(line_phase(10.0, 0.0), 2);
  double in = 0, tot = 0;
  for (int r = 0; r < ff.size(); ++r)
    for (int c = 0; c < ff.size(); ++c) {
      const double x = (c - ff.center()) * bin, y = (r - ff.center()) * bin;
      tot += ff.at(r, c);
      if (std::abs(x) <= 5.0 + w && std::abs(y) <= w) in += ff.at(r, c);
    }
  CHECK(in / tot >= 0.90);
}

TEST_CASE("point phase steers the spot linearly") {
  const PhaseMask id = point_phase({0, 0}, 0);
  for (double v : id.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(point_phase({40, 0}, 0), RangeError);

  const double bins_per_um = 2.0 / OpticsConfig{}.um_per_bin;
  std::vector<double> off = {-12, -5, 2, 7.5, 15}, got;
  for (double dx : off) {
    const IntensityMap ff = far_field(point_phase({dx, 0.5 * dx}, 0));
    const auto [r, c] = argmax(ff);
    CHECK(std::abs(c - ff.center() - dx * bins_per_um) <= 1.0);
    CHECK(std::abs(r - ff.center() - 0.5 * dx * bins_per_um) <= 1.0);
    got.push_back(c - ff.center());
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < off.size(); ++i) mx += off[i], my += got[i];
  mx /= off.size();
  my /= off.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < off.size(); ++i) sxy += (off[i] - mx) * (got[i] - my), sxx += (off[i] - mx) * (off[i] - mx);
  CHECK(sxy / sxx == doctest::Approx(bins_per_um).epsilon(0.01));
}

TEST_CASE("opposite offsets give mirror-image far fields") {
  const IntensityMap a = far_field(point_phase({6, -3}, 0)), b = far_field(point_phase({-6, 3}, 0));
  const int n = a.size();
  double worst = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) worst = std::max(worst, std::abs(b.at(r, c) - a.at((n - r) % n, (n - c) % n)));
  CHECK(worst < 1e-9);
}

TEST_CASE("lens term defocuses the spot") {
  // Both maps are peak-normalized, so a flatter map has a larger total.
  const IntensityMap focus = far_field(point_phase({5, 0}, 0)), defocus = far_field(point_phase({5, 0}, 2));
  CHECK(defocus.total() > 2.0 * focus.total());
}

TEST_CASE("compose masks") {
  CHECK_THROWS_AS(compose_masks({}), UsageError);
  const PhaseMask a = point_phase({8, 0}, 0), b = point_phase({-8, 5}, 0), v = vortex_phase(5);
  {
    WeightedMask bad[] = {{&a, 1.0}, {&b, 0.0}};
    CHECK_THROWS_AS(compose_masks(bad), UsageError);
  }
  {
    WeightedMask one[] = {{&v, 1.0}};
    const PhaseMask out = compose_masks(one);
    CHECK(std::equal(out.values().begin(), out.values().end(), v.values().begin()));
  }
  SUBCASE("order invariant") {
    WeightedMask x[] = {{&a, 1.0}, {&b, 2.0}, {&v, 0.5}};
    WeightedMask y[] = {{&v, 0.5}, {&a, 1.0}, {&b, 2.0}};
    const PhaseMask p = compose_masks(x), q = compose_masks(y);
    double worst = 0;
    for (std::size_t i = 0; i < p.values().size(); ++i)
      worst = std::max(worst, std::abs(wrap_difference(p.values()[i] - q.values()[i])));
    CHECK(worst <= 1e-12);
  }
  SUBCASE("two spots, equal weights give equal peaks and more weight gives a brighter spot") {
    const double bpu = 2.0 / OpticsConfig{}.um_per_bin;
    const int ca = static_cast<int>(8 * bpu), cb = static_cast<int>(-8 * bpu), rb = static_cast<int>(5 * bpu);
    double prev = 0;
    for (double w : {1.0, 1.2, 1.5}) {
      WeightedMask ms[] = {{&a, w}, {&b, 1.0}};
      const IntensityMap ff = far_field(compose_masks(ms));
      const int c = ff.center();
      const double ratio = ff.at(c, c + ca) / ff.at(c + rb, c + cb);
      if (w == 1.0) CHECK(ratio == doctest::Approx(1.0).epsilon(0.2));
      CHECK(ratio > prev);
      prev = ratio;
    }
  }
  SUBCASE("vortex plus offset spot") {
    const PhaseMask p = point_phase({10, 0}, 0);
    WeightedMask ms[] = {{&v, 1.0}, {&p, 1.0}};
    const IntensityMap ff = far_field(compose_masks(ms));
    const int c = ff.center();
    const int spot = static_cast<int>(10 * 2.0 / OpticsConfig{}.um_per_bin);
    CHECK(ff.at(c, c) < 1e-3);
    double ring = 0;
    for (int r = c - 12; r <= c + 12; ++r)
      for (int col = c - 12; col <= c + 12; ++col) ring = std::max(ring, ff.at(r, col));
    CHECK(ring > 0.05);
    double spot_peak = 0;
    for (int col = c + spot - 2; col <= c + spot + 2; ++col) spot_peak = std::max(spot_peak, ff.at(c, col));
    CHECK(spot_peak > 0.2);
  }
}

TEST_CASE("force model examples") {
  TrapForceConfig cfg;
  const double r = 2.5;
  const Trap p = make(TrapKind::point), a = make(TrapKind::annular), l = make(TrapKind::line);
  CHECK(trap_force(p, p.center, cfg, r).force == Vec2{0, 0});
  const Vec2 on_ring = a.center + unit_from_angle(1.1) * a.ring_radius;
  CHECK(norm(trap_force(a, on_ring, cfg, r).force) < 1e-12);
  // The center is a removable singularity: it takes the limit from +x.
  const Vec2 at_center = trap_force(a, a.center, cfg, r).force;
  const Vec2 near_center = trap_force(a, a.center + Vec2{1e-9, 0}, cfg, r).force;
  CHECK(at_center.x > 0);
  CHECK(norm(at_center - near_center) < 1e-8);
  // Along the line core the longitudinal force is zero; at the caps it springs back.
  const Vec2 axis = unit_from_angle(l.angle);
  CHECK(norm(trap_force(l, l.center + axis * 4.0, cfg, r).force) < 1e-12);
  const Vec2 cap = trap_force(l, l.center + axis * 6.0, cfg, r).force;
  CHECK(dot(cap, axis) < 0);
  // Outside capture + taper the force vanishes.
  CHECK(norm(trap_force(p, p.center + Vec2{2 * capture_radius(cfg, r) + 0.1, 0}, cfg, r).force) == 0.0);
}

TEST_CASE("stiffness scales linearly with power share") {
  TrapForceConfig cfg;
  Trap t = make(TrapKind::point);
  t.power_share = 0.2;
  const Vec2 f1 = trap_force(t, t.center + Vec2{1, 0}, cfg, 2.5).force;
  t.power_share = 0.4;
  const Vec2 f2 = trap_force(t, t.center + Vec2{1, 0}, cfg, 2.5).force;
  CHECK(f2.x == doctest::Approx(2 * f1.x));
  CHECK(trap_stiffness(t, cfg) == doctest::Approx(0.4 * cfg.k_point));
}

TEST_CASE("force is minus the potential gradient") {
  TrapForceConfig cfg;
  const double r = 2.5, rc = capture_radius(cfg, r), h = 1e-5;
  Rng rng(17);
  std::uniform_real_distribution<double> off(-9, 9);
  for (TrapKind kind : {TrapKind::point, TrapKind::annular, TrapKind::line}) {
    const Trap t = make(kind);
    int checked = 0;
    while (checked < 100) {
      const Vec2 p = t.center + Vec2{off(rng), off(rng)};
      const double d = distance(p, trap_anchor(t, p, r));
      if (std::abs(d - rc) < 1e-3 || std::abs(d - 2 * rc) < 1e-3 || d < 1e-3) continue;
      if (kind == TrapKind::annular && distance(p, t.center) < 0.5 * t.ring_radius) continue;
      auto U = [&](Vec2 q) { return trap_force(t, q, cfg, r).potential; };
      const Vec2 grad{(U(p + Vec2{h, 0}) - U(p - Vec2{h, 0})) / (2 * h), (U(p + Vec2{0, h}) - U(p - Vec2{0, h})) / (2 * h)};
      const Vec2 f = trap_force(t, p, cfg, r).force;
      const double scale = std::max(norm(f), 1e-3);
      CHECK(norm(f + grad) <= 1e-4 * scale);
      ++checked;
    }
  }
}

TEST_CASE("force is Lipschitz along probe lines") {
  TrapForceConfig cfg;
  const double r = 2.5, step = 0.01;
  Rng rng(23);
  std::uniform_real_distribution<double> off(-10, 10), ang(0, kTwoPi);
  for (TrapKind kind : {TrapKind::point, TrapKind::annular, TrapKind::line}) {
    const Trap t = make(kind);
    const double k = trap_stiffness(t, cfg);
    double worst = 0;
    for (int line = 0; line < 50; ++line) {
      Vec2 p = t.center + Vec2{off(rng), off(rng)};
      const Vec2 dir = unit_from_angle(ang(rng));
      Vec2 prev = trap_force(t, p, cfg, r).force;
      for (int s = 0; s < 2000; ++s) {
        const Vec2 q = p + dir * step;
        const Vec2 f = trap_force(t, q, cfg, r).force;
        const bool core = kind == TrapKind::annular &&
                          (distance(p, t.center) < 0.5 * t.ring_radius || distance(q, t.center) < 0.5 * t.ring_radius);
        if (!core) worst = std::max(worst, norm(f - prev) / (k * step));
        prev = f;
        p = q;
      }
    }
    CHECK(worst <= 1.0 + 1e-6);
  }
}

}
