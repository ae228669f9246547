#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ctbridge/image.hpp"

namespace ctbridge {

/// Linear attenuation of water in 1/mm.
inline constexpr double kMuWater = 0.0192;

enum class PhantomKind { shepp_logan, disks, random_ellipses };

PhantomKind phantom_kind_from_string(const std::string& name);
std::string to_string(PhantomKind kind);

/// Ellipse in normalized coordinates: the image spans [-1, 1]^2 with y up.
struct Ellipse {
  double value;   // added inside, in units of the water attenuation
  double a, b;    // semi-axes
  double x0, y0;  // center
  double phi_deg; // rotation counterclockwise
};

// The ten-ellipse Shepp-Logan table with its original intensities.
const std::vector<Ellipse>& shepp_logan_ellipses();

// Sum of ellipse values at a normalized point (points on the boundary count
// as inside).
double ellipse_sum(const std::vector<Ellipse>& ellipses, double x, double y);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::shepp_logan;
  std::size_t size = 128;
  double pixel_size = 2.0;          // mm
  std::uint64_t seed = 0;
  std::size_t count = 6;            // disks / random_ellipses
  std::size_t oversample = 1;       // sub-samples per pixel side
};

// Values are ellipse sums times kMuWater, averaged over oversample^2
// sub-pixel points. Throws DomainError when size < 16 or oversample == 0.
ImageGrid make_phantom(const PhantomSpec& spec);

// Ellipse list used by make_phantom for the given spec.
std::vector<Ellipse> phantom_ellipses(const PhantomSpec& spec);

}  // namespace ctbridge
