#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ctbridge {

enum class RaySpacing { equispaced, equiangular };

/// 2-D fan-beam scan. The source rotates about the isocenter; view v sits at
/// angle v * coverage / n_views. The image is square and centered on the
/// isocenter.
struct FanBeamGeometry {
  double source_to_iso = 595.0;         // mm
  double source_to_detector = 1086.5;   // mm
  std::size_t n_views = 180;
  double angular_coverage_deg = 360.0;
  std::size_t n_detector_pixels = 200;
  double detector_pixel_size = 3.32;    // mm, at the detector
  RaySpacing ray_spacing = RaySpacing::equispaced;
  std::size_t image_size = 128;         // pixels per side
  double image_pixel_size = 2.0;        // mm

  // 512^2 / 720 views / 800 pixels simulation scanner.
  static FanBeamGeometry simulation_scanner();
  // 512^2 / 720 views / 848 equiangular pixels bench-top scanner.
  static FanBeamGeometry benchtop_scanner();
  // Same field of view and magnification as simulation_scanner() at 128^2 with
  // 180 views.
  static FanBeamGeometry desk_simulation();

  // Throws DomainError on nonpositive lengths, a detector in front of the
  // isocenter, zero views, or a source inside the image.
  void validate() const;

  double view_angle(std::size_t view) const;  // radians
  // Lateral detector coordinate of pixel k in mm (may be outside the
  // physical detector for laterally extrapolated data).
  double detector_coordinate(int k) const;
  double magnification() const { return source_to_detector / source_to_iso; }
  // Radius of the disk seen by every view.
  double field_of_view_radius() const;
};

enum class Incompleteness { full, sparse_view, limited_angle, truncated };

std::string to_string(Incompleteness kind);
Incompleteness incompleteness_from_string(const std::string& name);

/// Which (view, detector) samples of the full scan are present.
/// Detector indices may lie outside [0, n_detector_pixels) only for
/// laterally extrapolated sinograms consumed by FBP.
struct IncompletenessMask {
  Incompleteness kind = Incompleteness::full;
  std::vector<std::size_t> kept_views;
  std::vector<int> kept_detectors;

  static IncompletenessMask full(const FanBeamGeometry& g);

  std::size_t n_views() const { return kept_views.size(); }
  std::size_t n_detectors() const { return kept_detectors.size(); }
  bool detectors_physical(const FanBeamGeometry& g) const;

  // Throws DomainError unless indices are strictly increasing and inside
  // the geometry (detectors only when physical_only).
  void validate(const FanBeamGeometry& g, bool physical_only = true) const;

  friend bool operator==(const IncompletenessMask&,
                         const IncompletenessMask&) = default;
};

/// Post-log projection data indexed (kept view, kept detector), row-major.
struct Sinogram {
  IncompletenessMask mask;
  std::vector<double> values;

  Sinogram() = default;
  explicit Sinogram(IncompletenessMask m, double fill = 0.0);
  Sinogram(IncompletenessMask m, std::vector<double> v);

  std::size_t n_views() const { return mask.n_views(); }
  std::size_t n_detectors() const { return mask.n_detectors(); }
  double& at(std::size_t view_row, std::size_t det_col) {
    return values[view_row * mask.n_detectors() + det_col];
  }
  double at(std::size_t view_row, std::size_t det_col) const {
    return values[view_row * mask.n_detectors() + det_col];
  }
  bool all_finite() const;

  friend bool operator==(const Sinogram&, const Sinogram&) = default;
};

}  // namespace ctbridge
