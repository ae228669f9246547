#include "ctbridge/phantom.hpp"

#include <cmath>
#include <numbers>

#include "ctbridge/errors.hpp"
#include "ctbridge/rng.hpp"

namespace ctbridge {

PhantomKind phantom_kind_from_string(const std::string& name) {
  if (name == "shepp_logan") return PhantomKind::shepp_logan;
  if (name == "disks") return PhantomKind::disks;
  if (name == "random_ellipses") return PhantomKind::random_ellipses;
  throw DomainError("unknown phantom kind '" + name + "'");
}

std::string to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::shepp_logan: return "shepp_logan";
    case PhantomKind::disks: return "disks";
    case PhantomKind::random_ellipses: return "random_ellipses";
  }
  return "shepp_logan";
}

const std::vector<Ellipse>& shepp_logan_ellipses() {
  static const std::vector<Ellipse> table = {
      {2.00, 0.6900, 0.920, 0.00, 0.0000, 0.0},
      {-0.98, 0.6624, 0.874, 0.00, -0.0184, 0.0},
      {-0.02, 0.1100, 0.310, 0.22, 0.0000, -18.0},
      {-0.02, 0.1600, 0.410, -0.22, 0.0000, 18.0},
      {0.01, 0.2100, 0.250, 0.00, 0.3500, 0.0},
      {0.01, 0.0460, 0.046, 0.00, 0.1000, 0.0},
      {0.01, 0.0460, 0.046, 0.00, -0.1000, 0.0},
      {0.01, 0.0460, 0.023, -0.08, -0.6050, 0.0},
      {0.01, 0.0230, 0.023, 0.00, -0.6060, 0.0},
      {0.01, 0.0230, 0.046, 0.06, -0.6050, 0.0},
  };
  return table;
}

double ellipse_sum(const std::vector<Ellipse>& ellipses, double x, double y) {
  double v = 0.0;
  for (const Ellipse& e : ellipses) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double c = std::cos(phi), s = std::sin(phi);
    const double dx = x - e.x0, dy = y - e.y0;
    const double u = c * dx + s * dy;
    const double w = -s * dx + c * dy;
    if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.value;
  }
  return v;
}

std::vector<Ellipse> phantom_ellipses(const PhantomSpec& spec) {
  switch (spec.kind) {
    case PhantomKind::shepp_logan:
      return shepp_logan_ellipses();
    case PhantomKind::disks:
    case PhantomKind::random_ellipses:
      break;
  }
  std::vector<Ellipse> out;
  if (spec.count == 0) return out;
  // Body: a water disk; inserts drawn inside radius 0.6.
  out.push_back({1.0, 0.85, 0.85, 0.0, 0.0, 0.0});
  std::vector<double> u(5 * spec.count);
  RandomStream(spec.seed, StreamTag::phantom).fill_uniform(u);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double* r = &u[5 * i];
    const double radius = 0.6 * std::sqrt(r[0]);
    const double angle = 2.0 * std::numbers::pi * r[1];
    const double value = (r[2] < 0.5 ? -1.0 : 1.0) * (0.1 + 0.4 * r[3]);
    const double size = 0.05 + 0.15 * r[4];
    if (spec.kind == PhantomKind::disks) {
      out.push_back({value, size, size, radius * std::cos(angle),
                     radius * std::sin(angle), 0.0});
    } else {
      out.push_back({value, size, size * (0.4 + 0.6 * r[3]), radius * std::cos(angle),
                     radius * std::sin(angle), 360.0 * r[2]});
    }
  }
  return out;
}

ImageGrid make_phantom(const PhantomSpec& spec) {
  if (spec.size < 16) throw DomainError("make_phantom: size must be >= 16");
  if (spec.oversample == 0) throw DomainError("make_phantom: oversample must be >= 1");
  if (!(spec.pixel_size > 0.0)) throw DomainError("make_phantom: pixel size must be > 0");
  const std::vector<Ellipse> ellipses = phantom_ellipses(spec);
  const std::size_t n = spec.size;
  const std::size_t os = spec.oversample;
  ImageGrid img(n, n, spec.pixel_size);
  if (ellipses.empty()) return img;
  const double h = 2.0 / static_cast<double>(n);
  const double inv = 1.0 / static_cast<double>(os * os);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::size_t sr = 0; sr < os; ++sr) {
        for (std::size_t sc = 0; sc < os; ++sc) {
          const double fx = (static_cast<double>(sc) + 0.5) / static_cast<double>(os);
          const double fy = (static_cast<double>(sr) + 0.5) / static_cast<double>(os);
          const double x = -1.0 + (static_cast<double>(c) + fx) * h;
          const double y = 1.0 - (static_cast<double>(r) + fy) * h;
          acc += ellipse_sum(ellipses, x, y);
        }
      }
      img(r, c) = kMuWater * acc * inv;
    }
  }
  return img;
}

}  // namespace ctbridge
