#pragma once

#include <cstddef>
#include <span>

namespace ctbridge {

/// Matrix-free linear map from image space (cols) to measurement space (rows).
/// Implementations must make apply_adjoint the exact transpose of apply.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;

  // y = A x; y is overwritten.
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  // x = A^T y; x is overwritten.
  virtual void apply_adjoint(std::span<const double> y,
                             std::span<double> x) const = 0;
};

/// A = I on R^n.
class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(std::size_t n) : n_(n) {}
  std::size_t rows() const override { return n_; }
  std::size_t cols() const override { return n_; }
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;

 private:
  std::size_t n_;
};

}  // namespace ctbridge
