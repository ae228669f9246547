#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "ctbridge/geometry.hpp"
#include "ctbridge/image.hpp"

namespace ctbridge {

/// How much of a complete scan each incompleteness kind keeps. The defaults
/// reproduce the 720-view / 800-pixel simulation protocol at any geometry:
/// every 6th view, a contiguous 120 degree arc, and the central half of the
/// detector.
struct ExtractionSpec {
  std::size_t sparse_stride = 6;
  double limited_arc_deg = 120.0;
  double truncated_fraction = 0.5;
  // Overrides truncated_fraction when set.
  std::optional<std::size_t> truncated_pixels;
};

// y_full must carry a full mask for g.
Sinogram extract_incomplete(const Sinogram& y_full, const FanBeamGeometry& g,
                            Incompleteness kind,
                            const ExtractionSpec& spec = {});
IncompletenessMask make_mask(const FanBeamGeometry& g, Incompleteness kind,
                             const ExtractionSpec& spec = {});

/// First-order quantum noise on post-log data:
/// p~ = p + exp(p/2) z / sqrt(N_air), z ~ N(0, 1) i.i.d.
struct NoiseModel {
  double n_air = 2.5e5;
  std::uint64_t seed = 0;
};

Sinogram add_noise(const Sinogram& p, const NoiseModel& nm);

struct PreprocessSpec {
  Incompleteness kind = Incompleteness::full;
  // Limited angle: w = 1 + strength * taper(d), with d the angular distance
  // by which a ray's conjugate falls outside the acquired arc. strength in
  // [0, 1] keeps w in [1, 2]; 0 disables compensation.
  double limited_angle_strength = 1.0;
  double limited_angle_taper_deg = 10.0;
  // Truncated: samples added on each side; default 10% of the full detector.
  std::optional<std::size_t> truncation_margin;
};

// Returns a new sinogram; y itself is never modified. Truncated output
// carries detector indices beyond the measured range and is meant for FBP
// only.
Sinogram preprocess(const Sinogram& y, const FanBeamGeometry& g,
                    const PreprocessSpec& spec);

// Per-sample compensation weights for a limited-angle mask, row-major like
// the sinogram.
std::vector<double> limited_angle_weights(const FanBeamGeometry& g,
                                          const IncompletenessMask& m,
                                          double strength, double taper_deg);

struct FbpOptions {
  // Filtered projections are evaluated on a grid this many times finer than
  // the detector before linear interpolation in the backprojection.
  std::size_t upsample = 8;
};

// Fan-beam FBP with a band-limited ramp filter over the mask's kept views.
// Detector indices must be contiguous. Sparse-view data use the angular
// increment of the kept views; all other kinds use the native increment.
ImageGrid fbp(const Sinogram& y, const FanBeamGeometry& g,
              const FbpOptions& options = {});

}  // namespace ctbridge
