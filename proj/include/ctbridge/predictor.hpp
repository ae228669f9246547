#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ctbridge/image.hpp"
#include "ctbridge/schedule.hpp"

namespace ctbridge {

/// Image-domain expected mean X0hat = E[X_0 | X_t, X_FBP]. Outputs match the
/// input shape and are deterministic for fixed inputs.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual ImageGrid predict(const ImageGrid& xt, double t,
                            const ImageGrid& xfbp) const = 0;
  // False when calls must be serialized by the caller.
  virtual bool concurrent_safe() const { return true; }
};

using PredictorHandle = std::shared_ptr<const Predictor>;

/// Returns X_t unchanged.
class IdentityPredictor final : public Predictor {
 public:
  ImageGrid predict(const ImageGrid& xt, double t,
                    const ImageGrid& xfbp) const override;
};

/// Posterior mean under X_0 ~ N(Z(X_FBP), sigma_x2 I):
///   X0hat = C (X_t / sigma_t^2 - X_FBP / sigma_T^2 + Z / sigma_x2),
///   C = sigma_x2 sigma_t^2 sigma_T^2 / (sigma_t^2 sigma_T^2 + sigma_bar_t^2 sigma_x2).
/// Written as xt * X_t + xfbp * X_FBP + z * Z so that t = 0 (X0hat = X_t) and
/// t = T (X0hat = Z) need no special cases.
struct GaussianMeanCoefficients {
  double xt;
  double xfbp;
  double z;
  double variance;  // C
};

GaussianMeanCoefficients gaussian_mean_coefficients(const Schedule& s, double t,
                                                    double sigma_x2);

class GaussianPredictor final : public Predictor {
 public:
  // z_map(xfbp, z) writes Z(X_FBP).
  using ZMap = std::function<void(std::span<const double>, std::span<double>)>;

  GaussianPredictor(Schedule schedule, double sigma_x2, ZMap z_map);

  ImageGrid predict(const ImageGrid& xt, double t,
                    const ImageGrid& xfbp) const override;
  const Schedule& schedule() const { return schedule_; }
  double sigma_x2() const { return sigma_x2_; }

 private:
  Schedule schedule_;
  double sigma_x2_;
  ZMap z_map_;
};

// Z(X_FBP) = X_FBP blurred by a separable Gaussian of the given width in
// pixels with replicated borders. Width 0 is the identity.
GaussianPredictor::ZMap blur_z_map(std::size_t height, std::size_t width,
                                   double sigma_pixels);
ImageGrid gaussian_blur(const ImageGrid& x, double sigma_pixels);

/// X0hat = alpha(t) X_t + beta(t) X_FBP + offset, with alpha and beta
/// linearly interpolated from a table sorted by t.
class AffinePredictor final : public Predictor {
 public:
  struct Row {
    double t;
    double alpha;
    double beta;
  };

  explicit AffinePredictor(std::vector<Row> table, ImageGrid offset = {});

  // Text table, one "t alpha beta" triple per line; '#' starts a comment.
  static AffinePredictor from_file(const std::filesystem::path& table,
                                   const std::filesystem::path& offset = {});

  ImageGrid predict(const ImageGrid& xt, double t,
                    const ImageGrid& xfbp) const override;
  const std::vector<Row>& table() const { return table_; }

 private:
  std::vector<Row> table_;
  ImageGrid offset_;
};

}  // namespace ctbridge
