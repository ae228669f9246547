#include "ctbridge/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ctbridge/errors.hpp"

namespace ctbridge {

// ---------------------------------------------------------------------------
// Geometry

FanBeamGeometry FanBeamGeometry::simulation_scanner() {
  FanBeamGeometry g;
  g.source_to_iso = 595.0;
  g.source_to_detector = 1086.5;
  g.n_views = 720;
  g.angular_coverage_deg = 360.0;
  g.n_detector_pixels = 800;
  g.detector_pixel_size = 0.83;
  g.ray_spacing = RaySpacing::equispaced;
  g.image_size = 512;
  g.image_pixel_size = 0.5;
  return g;
}

FanBeamGeometry FanBeamGeometry::benchtop_scanner() {
  FanBeamGeometry g;
  g.source_to_iso = 615.0;
  g.source_to_detector = 1098.0;
  g.n_views = 720;
  g.angular_coverage_deg = 360.0;
  g.n_detector_pixels = 848;
  g.detector_pixel_size = 1.05;
  g.ray_spacing = RaySpacing::equiangular;
  g.image_size = 512;
  g.image_pixel_size = 0.625;
  return g;
}

FanBeamGeometry FanBeamGeometry::desk_simulation() {
  FanBeamGeometry g = simulation_scanner();
  g.n_views = 180;
  g.n_detector_pixels = 200;
  g.detector_pixel_size = 0.83 * 4.0;
  g.image_size = 128;
  g.image_pixel_size = 2.0;
  return g;
}

void FanBeamGeometry::validate() const {
  if (!(source_to_iso > 0.0) || !(source_to_detector > 0.0) ||
      !(detector_pixel_size > 0.0) || !(image_pixel_size > 0.0) ||
      !(angular_coverage_deg > 0.0)) {
    throw DomainError("geometry: lengths and coverage must be positive");
  }
  if (!(source_to_detector > source_to_iso)) {
    throw DomainError("geometry: source_to_detector must exceed source_to_iso");
  }
  if (n_views == 0 || n_detector_pixels == 0 || image_size == 0) {
    throw DomainError("geometry: view, detector and image counts must be >= 1");
  }
  const double half_diag =
      std::sqrt(2.0) * 0.5 * image_pixel_size * static_cast<double>(image_size);
  if (source_to_iso <= half_diag) {
    throw DomainError("geometry: source orbit intersects the image");
  }
}

double FanBeamGeometry::view_angle(std::size_t view) const {
  return static_cast<double>(view) * angular_coverage_deg *
         (std::numbers::pi / 180.0) / static_cast<double>(n_views);
}

double FanBeamGeometry::detector_coordinate(int k) const {
  const double center = 0.5 * (static_cast<double>(n_detector_pixels) - 1.0);
  return (static_cast<double>(k) - center) * detector_pixel_size;
}

double FanBeamGeometry::field_of_view_radius() const {
  const double u_edge = 0.5 * static_cast<double>(n_detector_pixels) *
                        detector_pixel_size;
  double fan_half = 0.0;
  if (ray_spacing == RaySpacing::equispaced) {
    fan_half = std::atan(u_edge / source_to_detector);
  } else {
    fan_half = u_edge / source_to_detector;
  }
  const double detector_radius = source_to_iso * std::sin(fan_half);
  const double image_radius =
      0.5 * image_pixel_size * static_cast<double>(image_size);
  return std::min(detector_radius, image_radius);
}

std::string to_string(Incompleteness kind) {
  switch (kind) {
    case Incompleteness::full: return "full";
    case Incompleteness::sparse_view: return "sparse_view";
    case Incompleteness::limited_angle: return "limited_angle";
    case Incompleteness::truncated: return "truncated";
  }
  return "full";
}

Incompleteness incompleteness_from_string(const std::string& name) {
  if (name == "full") return Incompleteness::full;
  if (name == "sparse_view" || name == "sparse") return Incompleteness::sparse_view;
  if (name == "limited_angle" || name == "limited") {
    return Incompleteness::limited_angle;
  }
  if (name == "truncated") return Incompleteness::truncated;
  throw DomainError("unknown incompleteness kind '" + name + "'");
}

IncompletenessMask IncompletenessMask::full(const FanBeamGeometry& g) {
  IncompletenessMask m;
  m.kind = Incompleteness::full;
  m.kept_views.resize(g.n_views);
  for (std::size_t v = 0; v < g.n_views; ++v) m.kept_views[v] = v;
  m.kept_detectors.resize(g.n_detector_pixels);
  for (std::size_t d = 0; d < g.n_detector_pixels; ++d) {
    m.kept_detectors[d] = static_cast<int>(d);
  }
  return m;
}

bool IncompletenessMask::detectors_physical(const FanBeamGeometry& g) const {
  return std::all_of(kept_detectors.begin(), kept_detectors.end(), [&](int d) {
    return d >= 0 && d < static_cast<int>(g.n_detector_pixels);
  });
}

void IncompletenessMask::validate(const FanBeamGeometry& g,
                                  bool physical_only) const {
  for (std::size_t i = 0; i < kept_views.size(); ++i) {
    if (kept_views[i] >= g.n_views ||
        (i > 0 && kept_views[i] <= kept_views[i - 1])) {
      throw DomainError("mask: view indices must be increasing and < n_views");
    }
  }
  for (std::size_t i = 0; i < kept_detectors.size(); ++i) {
    if (i > 0 && kept_detectors[i] <= kept_detectors[i - 1]) {
      throw DomainError("mask: detector indices must be increasing");
    }
  }
  if (physical_only && !detectors_physical(g)) {
    throw DomainError("mask: detector index outside the physical detector");
  }
  if (kind == Incompleteness::full &&
      (kept_views.size() != g.n_views ||
       kept_detectors.size() != g.n_detector_pixels)) {
    throw DomainError("mask: a full mask must keep every sample");
  }
}

Sinogram::Sinogram(IncompletenessMask m, double fill)
    : mask(std::move(m)), values(mask.n_views() * mask.n_detectors(), fill) {}

Sinogram::Sinogram(IncompletenessMask m, std::vector<double> v)
    : mask(std::move(m)), values(std::move(v)) {
  if (values.size() != mask.n_views() * mask.n_detectors()) {
    throw DomainError("Sinogram: value count does not match mask");
  }
}

bool Sinogram::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Ray tracing

namespace {

struct Ray {
  double sx, sy;  // source position
  double dx, dy;  // unit direction
  double length;  // source to detector distance along the ray
};

Ray make_ray(const FanBeamGeometry& g, std::size_t view, int det) {
  const double beta = g.view_angle(view);
  const double es_x = std::cos(beta), es_y = std::sin(beta);
  const double eu_x = -es_y, eu_y = es_x;
  const double u = g.detector_coordinate(det);
  Ray r{};
  r.sx = g.source_to_iso * es_x;
  r.sy = g.source_to_iso * es_y;
  if (g.ray_spacing == RaySpacing::equispaced) {
    const double back = g.source_to_detector - g.source_to_iso;
    const double px = -back * es_x + u * eu_x;
    const double py = -back * es_y + u * eu_y;
    const double vx = px - r.sx, vy = py - r.sy;
    r.length = std::hypot(vx, vy);
    r.dx = vx / r.length;
    r.dy = vy / r.length;
  } else {
    const double fan = u / g.source_to_detector;
    const double c = std::cos(fan), s = std::sin(fan);
    r.dx = -c * es_x + s * eu_x;
    r.dy = -c * es_y + s * eu_y;
    r.length = g.source_to_detector;
  }
  return r;
}

// Calls visit(pixel_index, weight) for every nonzero Joseph weight of the
// ray, in a fixed order.
template <typename Visit>
void trace_ray(const Ray& r, std::size_t n, double pixel, Visit&& visit) {
  const double c = 0.5 * (static_cast<double>(n) - 1.0);
  const int ni = static_cast<int>(n);
  if (std::abs(r.dx) >= std::abs(r.dy)) {
    const double step = pixel / std::abs(r.dx);
    for (int i = 0; i < ni; ++i) {
      const double x = (static_cast<double>(i) - c) * pixel;
      const double s = (x - r.sx) / r.dx;
      if (s < 0.0 || s > r.length) continue;
      const double y = r.sy + s * r.dy;
      const double row = c - y / pixel;
      const double j0f = std::floor(row);
      if (j0f < -1.0 || j0f > static_cast<double>(ni - 1)) continue;
      const int j0 = static_cast<int>(j0f);
      const double w = row - j0f;
      if (j0 >= 0) visit(static_cast<std::size_t>(j0) * n + i, (1.0 - w) * step);
      if (j0 + 1 < ni && w > 0.0) {
        visit(static_cast<std::size_t>(j0 + 1) * n + i, w * step);
      }
    }
  } else {
    const double step = pixel / std::abs(r.dy);
    for (int j = 0; j < ni; ++j) {
      const double y = (c - static_cast<double>(j)) * pixel;
      const double s = (y - r.sy) / r.dy;
      if (s < 0.0 || s > r.length) continue;
      const double x = r.sx + s * r.dx;
      const double col = x / pixel + c;
      const double i0f = std::floor(col);
      if (i0f < -1.0 || i0f > static_cast<double>(ni - 1)) continue;
      const int i0 = static_cast<int>(i0f);
      const double w = col - i0f;
      const std::size_t base = static_cast<std::size_t>(j) * n;
      if (i0 >= 0) visit(base + i0, (1.0 - w) * step);
      if (i0 + 1 < ni && w > 0.0) visit(base + i0 + 1, w * step);
    }
  }
}

}  // namespace

ProjectionOperator::ProjectionOperator(FanBeamGeometry geometry,
                                       IncompletenessMask mask)
    : geometry_(std::move(geometry)), mask_(std::move(mask)) {
  geometry_.validate();
  mask_.validate(geometry_, true);
}

std::size_t ProjectionOperator::rows() const {
  return mask_.n_views() * mask_.n_detectors();
}

std::size_t ProjectionOperator::cols() const {
  return geometry_.image_size * geometry_.image_size;
}

void ProjectionOperator::apply(std::span<const double> image,
                               std::span<double> sinogram) const {
  if (image.size() != cols() || sinogram.size() != rows()) {
    throw DomainError("forward projection: size mismatch");
  }
  const std::size_t n = geometry_.image_size;
  const double pixel = geometry_.image_pixel_size;
  std::size_t out = 0;
  for (std::size_t view : mask_.kept_views) {
    for (int det : mask_.kept_detectors) {
      const Ray r = make_ray(geometry_, view, det);
      double sum = 0.0;
      trace_ray(r, n, pixel,
                [&](std::size_t p, double w) { sum += w * image[p]; });
      sinogram[out++] = sum;
    }
  }
}

void ProjectionOperator::apply_adjoint(std::span<const double> sinogram,
                                       std::span<double> image) const {
  if (image.size() != cols() || sinogram.size() != rows()) {
    throw DomainError("back projection: size mismatch");
  }
  std::fill(image.begin(), image.end(), 0.0);
  const std::size_t n = geometry_.image_size;
  const double pixel = geometry_.image_pixel_size;
  std::size_t in = 0;
  for (std::size_t view : mask_.kept_views) {
    for (int det : mask_.kept_detectors) {
      const double value = sinogram[in++];
      if (value == 0.0) continue;
      const Ray r = make_ray(geometry_, view, det);
      trace_ray(r, n, pixel,
                [&](std::size_t p, double w) { image[p] += w * value; });
    }
  }
}

void require_geometry_image(const ImageGrid& x, const FanBeamGeometry& g,
                            const char* where) {
  if (x.height() != g.image_size || x.width() != g.image_size) {
    throw DomainError(std::string(where) + ": image is " +
                      std::to_string(x.height()) + "x" +
                      std::to_string(x.width()) + ", geometry expects " +
                      std::to_string(g.image_size) + "^2");
  }
}

Sinogram forward_project(const ImageGrid& x, const FanBeamGeometry& g,
                         const IncompletenessMask& m) {
  require_geometry_image(x, g, "forward_project");
  ProjectionOperator op(g, m);
  Sinogram y(m);
  op.apply(x.values(), y.values);
  return y;
}

ImageGrid back_project(const Sinogram& y, const FanBeamGeometry& g) {
  ProjectionOperator op(g, y.mask);
  if (y.values.size() != op.rows()) {
    throw DomainError("back_project: sinogram does not match its mask");
  }
  ImageGrid x(g.image_size, g.image_size, g.image_pixel_size);
  op.apply_adjoint(y.values, x.values());
  return x;
}

ImageGrid apply_normal(const ImageGrid& x, const FanBeamGeometry& g,
                       const IncompletenessMask& m, double k_x) {
  if (!(k_x >= 0.0)) throw DomainError("apply_normal: k_x must be >= 0");
  const Sinogram ax = forward_project(x, g, m);
  ImageGrid out = back_project(ax, g);
  if (k_x != 0.0) {
    auto o = out.values();
    auto v = x.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += k_x * v[i];
  }
  return out;
}

}  // namespace ctbridge
