#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ctbridge {

/// Reconstruction-domain image on a regular pixel grid, row-major.
/// Values are attenuation coefficients in 1/mm unless a caller has
/// normalized them.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(std::size_t height, std::size_t width, double pixel_size_mm = 1.0,
            double fill = 0.0);
  ImageGrid(std::size_t height, std::size_t width, double pixel_size_mm,
            std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  double pixel_size() const noexcept { return pixel_size_; }

  double& operator()(std::size_t row, std::size_t col) {
    return values_[row * width_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const {
    return values_[row * width_ + col];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool same_shape(const ImageGrid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  double pixel_size_ = 1.0;
  std::vector<double> values_;
};

// Throws DomainError unless a and b share a shape; `where` names the caller.
void require_same_shape(const ImageGrid& a, const ImageGrid& b,
                        const char* where);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace ctbridge
