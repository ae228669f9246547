#pragma once

#include <span>

#include "ctbridge/geometry.hpp"
#include "ctbridge/image.hpp"
#include "ctbridge/linear_operator.hpp"

namespace ctbridge {

/// Joseph-method fan-beam projector restricted to the samples of a mask.
///
/// Each ray walks the image along its dominant axis and linearly
/// interpolates between the two nearest pixels of the other axis; the
/// back projection scatters with the very same weights, so apply_adjoint is
/// the transpose of apply up to floating-point rounding.
class ProjectionOperator final : public LinearOperator {
 public:
  ProjectionOperator(FanBeamGeometry geometry, IncompletenessMask mask);

  std::size_t rows() const override;
  std::size_t cols() const override;
  void apply(std::span<const double> image,
             std::span<double> sinogram) const override;
  void apply_adjoint(std::span<const double> sinogram,
                     std::span<double> image) const override;

  const FanBeamGeometry& geometry() const { return geometry_; }
  const IncompletenessMask& mask() const { return mask_; }

 private:
  FanBeamGeometry geometry_;
  IncompletenessMask mask_;
};

Sinogram forward_project(const ImageGrid& x, const FanBeamGeometry& g,
                         const IncompletenessMask& m);
// Adjoint of forward_project for the sinogram's own mask.
ImageGrid back_project(const Sinogram& y, const FanBeamGeometry& g);
// A^T A x + k_x x.
ImageGrid apply_normal(const ImageGrid& x, const FanBeamGeometry& g,
                       const IncompletenessMask& m, double k_x);

// Throws DomainError unless x is a g.image_size square image with the
// geometry's pixel size.
void require_geometry_image(const ImageGrid& x, const FanBeamGeometry& g,
                            const char* where);

}  // namespace ctbridge
