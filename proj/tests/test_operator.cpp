#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "ctbridge/errors.hpp"
#include "ctbridge/projector.hpp"
#include "ctbridge/sinoproc.hpp"
#include "support.hpp"

using namespace ctbridge;

namespace {

struct RayLine {
  double sx, sy, dx, dy;
};

// Independent ray construction from the scan geometry.
RayLine ray_line(const FanBeamGeometry& g, std::size_t view, int det) {
  const double beta = g.view_angle(view);
  const double c = std::cos(beta), s = std::sin(beta);
  const double u = (det - 0.5 * (g.n_detector_pixels - 1.0)) * g.detector_pixel_size;
  RayLine r{g.source_to_iso * c, g.source_to_iso * s, 0.0, 0.0};
  if (g.ray_spacing == RaySpacing::equispaced) {
    const double px = -(g.source_to_detector - g.source_to_iso) * c - u * s;
    const double py = -(g.source_to_detector - g.source_to_iso) * s + u * c;
    const double len = std::hypot(px - r.sx, py - r.sy);
    r.dx = (px - r.sx) / len;
    r.dy = (py - r.sy) / len;
  } else {
    const double fan = u / g.source_to_detector;
    r.dx = -std::cos(fan) * c - std::sin(fan) * s;
    r.dy = -std::cos(fan) * s + std::sin(fan) * c;
  }
  return r;
}

// Signed distance of the ray's line from the isocenter.
double distance_from_iso(const RayLine& r) { return r.sx * r.dy - r.sy * r.dx; }

Eigen::MatrixXd dense_matrix(const ProjectionOperator& A) {
  Eigen::MatrixXd M(A.rows(), A.cols());
  std::vector<double> e(A.cols(), 0.0), col(A.rows());
  for (std::size_t j = 0; j < A.cols(); ++j) {
    e[j] = 1.0;
    A.apply(e, col);
    for (std::size_t i = 0; i < A.rows(); ++i) M(i, j) = col[i];
    e[j] = 0.0;
  }
  return M;
}

}  // namespace

TEST_CASE("geometry validation") {
  FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  CHECK_NOTHROW(g.validate());
  g.source_to_detector = 500.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  g = FanBeamGeometry::desk_simulation();
  g.n_views = 0;
  CHECK_THROWS_AS(g.validate(), DomainError);
  g = FanBeamGeometry::desk_simulation();
  g.detector_pixel_size = 0.0;
  CHECK_THROWS_AS(g.validate(), DomainError);
}

TEST_CASE("published geometry presets") {
  const FanBeamGeometry sim = FanBeamGeometry::simulation_scanner();
  CHECK(sim.source_to_iso == 595.0);
  CHECK(sim.source_to_detector == 1086.5);
  CHECK(sim.n_views == 720);
  CHECK(sim.n_detector_pixels == 800);
  CHECK(sim.detector_pixel_size == 0.83);
  CHECK(sim.image_size == 512);
  CHECK(sim.image_pixel_size == 0.5);
  const FanBeamGeometry real = FanBeamGeometry::benchtop_scanner();
  CHECK(real.ray_spacing == RaySpacing::equiangular);
  CHECK(real.n_detector_pixels == 848);
  CHECK(real.image_pixel_size == 0.625);
}

TEST_CASE("zero image projects to zero and zero data back projects to zero") {
  const FanBeamGeometry g = test::toy_geometry();
  const auto m = IncompletenessMask::full(g);
  const Sinogram y = forward_project(ImageGrid(16, 16, 16.0), g, m);
  for (double v : y.values) CHECK(v == 0.0);
  const ImageGrid x = back_project(Sinogram(m), g);
  for (double v : x.values()) CHECK(v == 0.0);
}

TEST_CASE("uniform disk: ray sums match analytic chord lengths within 1%") {
  FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  g.image_size = 256;
  g.image_pixel_size = 1.0;
  g.n_views = 24;
  g.n_detector_pixels = 300;
  g.detector_pixel_size = 1.0;
  const double radius = 80.0, mu = 0.02;
  // Area-weighted disk from 8 x 8 sub-samples per pixel.
  ImageGrid x(256, 256, 1.0);
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) {
      int inside = 0;
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          const double px = c - 127.5 + (b + 0.5) / 8.0 - 0.5;
          const double py = 127.5 - r - (a + 0.5) / 8.0 + 0.5;
          inside += px * px + py * py <= radius * radius;
        }
      x(r, c) = mu * inside / 64.0;
    }
  const auto m = IncompletenessMask::full(g);
  const Sinogram y = forward_project(x, g, m);
  double worst = 0.0;
  int checked = 0;
  for (std::size_t v = 0; v < g.n_views; ++v)
    for (std::size_t d = 0; d < g.n_detector_pixels; ++d) {
      const double s = distance_from_iso(ray_line(g, v, static_cast<int>(d)));
      if (std::abs(s) > 0.9 * radius) continue;
      const double chord = 2.0 * mu * std::sqrt(radius * radius - s * s);
      worst = std::max(worst, std::abs(y.at(v, d) - chord) / chord);
      ++checked;
    }
  CHECK(checked > 1000);
  CHECK(worst < 0.01);
}

TEST_CASE("unit pixel at the isocenter: peak equals the footprint path length") {
  FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  g.image_size = 33;
  g.image_pixel_size = 4.0;
  g.n_views = 90;
  g.n_detector_pixels = 401;
  g.detector_pixel_size = 0.05;
  ImageGrid x(33, 33, 4.0);
  x(16, 16) = 1.0;
  const Sinogram y = forward_project(x, g, IncompletenessMask::full(g));
  double lo = 1e9, hi = 0.0;
  for (std::size_t v = 0; v < g.n_views; ++v) {
    double peak = 0.0;
    std::size_t best = 0;
    for (std::size_t d = 0; d < g.n_detector_pixels; ++d) {
      if (y.at(v, d) > peak) {
        peak = y.at(v, d);
        best = d;
      }
    }
    const RayLine r = ray_line(g, v, static_cast<int>(best));
    const double path = 4.0 / std::max(std::abs(r.dx), std::abs(r.dy));
    lo = std::min(lo, peak / path);
    hi = std::max(hi, peak / path);
  }
  CHECK(lo > 0.95);
  CHECK(hi < 1.05);
}

TEST_CASE("rays that miss the image return exactly zero") {
  FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  g.image_size = 16;
  g.image_pixel_size = 2.0;  // 32 mm wide image, detector sees +-180 mm
  ImageGrid x(16, 16, 2.0, 1.0);
  const Sinogram y = forward_project(x, g, IncompletenessMask::full(g));
  int missed = 0;
  for (std::size_t v = 0; v < g.n_views; ++v)
    for (std::size_t d = 0; d < g.n_detector_pixels; ++d) {
      const double s = distance_from_iso(ray_line(g, v, static_cast<int>(d)));
      if (std::abs(s) > 16.0 * std::sqrt(2.0) + 2.0) {
        CHECK(y.at(v, d) == 0.0);
        ++missed;
      }
    }
  CHECK(missed > 0);
}

TEST_CASE("adjoint identity for every mask and detector type") {
  FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  g.image_size = 48;
  g.image_pixel_size = 5.0;
  g.n_views = 60;
  g.n_detector_pixels = 80;
  g.detector_pixel_size = 8.3;
  std::uint64_t seed = 10;
  for (RaySpacing spacing : {RaySpacing::equispaced, RaySpacing::equiangular}) {
    g.ray_spacing = spacing;
    for (Incompleteness k : {Incompleteness::full, Incompleteness::sparse_view,
                             Incompleteness::limited_angle, Incompleteness::truncated}) {
      const ProjectionOperator A(g, make_mask(g, k));
      for (int pair = 0; pair < 20; ++pair) {
        const auto x = test::normals(A.cols(), seed++);
        const auto y = test::normals(A.rows(), seed++);
        std::vector<double> ax(A.rows()), aty(A.cols());
        A.apply(x, ax);
        A.apply_adjoint(y, aty);
        CHECK(std::abs(dot(ax, y) - dot(x, aty)) / (norm2(ax) * norm2(y)) < 1e-10);
      }
    }
  }
}

TEST_CASE("linearity") {
  const FanBeamGeometry g = test::toy_geometry();
  const ProjectionOperator A(g, IncompletenessMask::full(g));
  const auto x1 = test::normals(A.cols(), 1), x2 = test::normals(A.cols(), 2);
  const double a = 1.7, b = -0.4;
  std::vector<double> combo(A.cols()), y1(A.rows()), y2(A.rows()), yc(A.rows());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * x1[i] + b * x2[i];
  A.apply(x1, y1);
  A.apply(x2, y2);
  A.apply(combo, yc);
  std::vector<double> want(A.rows());
  for (std::size_t i = 0; i < want.size(); ++i) want[i] = a * y1[i] + b * y2[i];
  CHECK(test::rel_l2(yc, want) < 1e-12);
}

TEST_CASE("masked projection equals the full projection restricted to kept rows") {
  const FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  const auto x = test::normals(g.image_size * g.image_size, 5);
  const ImageGrid img(g.image_size, g.image_size, g.image_pixel_size, x);
  const Sinogram full = forward_project(img, g, IncompletenessMask::full(g));
  for (Incompleteness k : {Incompleteness::sparse_view, Incompleteness::limited_angle,
                           Incompleteness::truncated}) {
    const IncompletenessMask m = make_mask(g, k);
    const Sinogram part = forward_project(img, g, m);
    for (std::size_t r = 0; r < m.n_views(); ++r)
      for (std::size_t c = 0; c < m.n_detectors(); ++c)
        CHECK(part.at(r, c) ==
              full.at(m.kept_views[r], static_cast<std::size_t>(m.kept_detectors[c])));
  }
}

TEST_CASE("single sinogram bin back projects onto its ray footprint only") {
  const FanBeamGeometry g = test::toy_geometry();
  IncompletenessMask m = IncompletenessMask::full(g);
  Sinogram y(m);
  const std::size_t view = 7, det = 9;
  y.at(view, det) = 1.0;
  const ImageGrid x = back_project(y, g);
  const RayLine r = ray_line(g, view, static_cast<int>(det));
  int support = 0;
  for (std::size_t row = 0; row < 16; ++row)
    for (std::size_t col = 0; col < 16; ++col) {
      if (x(row, col) == 0.0) continue;
      ++support;
      const double px = (col - 7.5) * 16.0, py = (7.5 - row) * 16.0;
      const double dist = std::abs((px - r.sx) * r.dy - (py - r.sy) * r.dx);
      CHECK(dist < 16.0 * std::sqrt(2.0));
    }
  CHECK(support > 0);
}

TEST_CASE("apply_normal matches the dense matrix product") {
  const FanBeamGeometry g = test::toy_geometry();
  for (Incompleteness k : {Incompleteness::full, Incompleteness::truncated}) {
    const IncompletenessMask m = make_mask(g, k);
    const ProjectionOperator A(g, m);
    const Eigen::MatrixXd M = dense_matrix(A);
    const auto xv = test::normals(256, 77);
    const ImageGrid x(16, 16, 16.0, xv);
    for (double kx : {0.0, 0.3}) {
      const ImageGrid got = apply_normal(x, g, m, kx);
      const Eigen::VectorXd want =
          M.transpose() * (M * Eigen::Map<const Eigen::VectorXd>(xv.data(), 256)) +
          kx * Eigen::Map<const Eigen::VectorXd>(xv.data(), 256);
      CHECK(test::rel_l2(got.data(), std::vector<double>(want.data(), want.data() + 256)) < 1e-8);
    }
    CHECK(apply_normal(ImageGrid(16, 16, 16.0), g, m, 0.5).data() ==
          std::vector<double>(256, 0.0));
  }
}

TEST_CASE("shape and argument errors") {
  const FanBeamGeometry g = test::toy_geometry();
  const auto m = IncompletenessMask::full(g);
  CHECK_THROWS_AS(forward_project(ImageGrid(15, 16, 16.0), g, m), DomainError);
  Sinogram wrong(m);
  wrong.values.pop_back();
  CHECK_THROWS_AS(back_project(wrong, g), DomainError);
  CHECK_THROWS_AS(apply_normal(ImageGrid(16, 16, 16.0), g, m, -1.0), DomainError);
  IncompletenessMask bad = m;
  bad.kept_views.push_back(g.n_views);
  CHECK_THROWS_AS(ProjectionOperator(g, bad), DomainError);
}
