#include "ctbridge/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctbridge/errors.hpp"
#include "ctbridge/linear_operator.hpp"

namespace ctbridge {

ImageGrid::ImageGrid(std::size_t height, std::size_t width,
                     double pixel_size_mm, double fill)
    : height_(height),
      width_(width),
      pixel_size_(pixel_size_mm),
      values_(height * width, fill) {}

ImageGrid::ImageGrid(std::size_t height, std::size_t width,
                     double pixel_size_mm, std::vector<double> values)
    : height_(height),
      width_(width),
      pixel_size_(pixel_size_mm),
      values_(std::move(values)) {
  if (values_.size() != height_ * width_) {
    throw DomainError("ImageGrid: value count does not match shape");
  }
}

bool ImageGrid::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b,
                        const char* where) {
  if (!a.same_shape(b)) {
    throw DomainError(std::string(where) + ": image shapes differ (" +
                      std::to_string(a.height()) + "x" +
                      std::to_string(a.width()) + " vs " +
                      std::to_string(b.height()) + "x" +
                      std::to_string(b.width()) + ")");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void IdentityOperator::apply(std::span<const double> x,
                             std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) {
    throw DomainError("IdentityOperator: size mismatch");
  }
  std::copy(x.begin(), x.end(), y.begin());
}

void IdentityOperator::apply_adjoint(std::span<const double> y,
                                     std::span<double> x) const {
  apply(y, x);
}

}  // namespace ctbridge
