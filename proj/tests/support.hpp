#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctbridge/geometry.hpp"
#include "ctbridge/rng.hpp"

namespace test {

inline std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  ctbridge::RandomStream(seed, ctbridge::StreamTag::test).fill_normal(v);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// 16 x 16 image on a 64-view, 24-pixel detector: small enough to build
// dense matrices column by column.
inline ctbridge::FanBeamGeometry toy_geometry() {
  ctbridge::FanBeamGeometry g = ctbridge::FanBeamGeometry::desk_simulation();
  g.image_size = 16;
  g.image_pixel_size = 16.0;
  g.n_views = 64;
  g.n_detector_pixels = 24;
  g.detector_pixel_size = 0.83 * 4.0 * 200.0 / 24.0;
  return g;
}

}  // namespace test
