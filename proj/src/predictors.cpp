#include "ctbridge/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "ctbridge/errors.hpp"
#include "ctbridge/io.hpp"

namespace ctbridge {

ImageGrid IdentityPredictor::predict(const ImageGrid& xt, double,
                                     const ImageGrid& xfbp) const {
  require_same_shape(xt, xfbp, "IdentityPredictor");
  return xt;
}

GaussianMeanCoefficients gaussian_mean_coefficients(const Schedule& s, double t,
                                                    double sigma_x2) {
  if (!(sigma_x2 > 0.0)) throw DomainError("sigma_x2 must be > 0");
  const Schedule::Point p = s.eval(t);
  const double st2 = s.sigma_T2();
  const double denom = p.sigma2 * st2 + p.sigma_bar2 * sigma_x2;
  // C / sigma_t^2, finite at t = 0 where it equals 1.
  const double cx = sigma_x2 * st2 / denom;
  const double c = cx * p.sigma2;
  return {cx, -c / st2, c / sigma_x2, c};
}

GaussianPredictor::GaussianPredictor(Schedule schedule, double sigma_x2,
                                     ZMap z_map)
    : schedule_(std::move(schedule)), sigma_x2_(sigma_x2), z_map_(std::move(z_map)) {
  if (!(sigma_x2_ > 0.0)) throw DomainError("GaussianPredictor: sigma_x2 must be > 0");
  if (!z_map_) throw DomainError("GaussianPredictor: empty Z map");
}

ImageGrid GaussianPredictor::predict(const ImageGrid& xt, double t,
                                     const ImageGrid& xfbp) const {
  require_same_shape(xt, xfbp, "GaussianPredictor");
  const GaussianMeanCoefficients k = gaussian_mean_coefficients(schedule_, t, sigma_x2_);
  ImageGrid out(xt.height(), xt.width(), xt.pixel_size());
  std::vector<double> z(xt.size());
  z_map_(xfbp.values(), z);
  auto o = out.values();
  auto a = xt.values();
  auto f = xfbp.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = k.xt * a[i] + k.xfbp * f[i] + k.z * z[i];
  }
  return out;
}

namespace {

std::vector<double> gaussian_taps(double sigma) {
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += taps[i];
  }
  for (double& v : taps) v /= sum;
  return taps;
}

void blur_values(std::span<const double> in, std::span<double> out,
                 std::size_t h, std::size_t w, double sigma) {
  if (sigma == 0.0) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const auto taps = gaussian_taps(sigma);
  const long radius = static_cast<long>(taps.size() / 2);
  const long lh = static_cast<long>(h), lw = static_cast<long>(w);
  std::vector<double> tmp(h * w, 0.0);
  for (long r = 0; r < lh; ++r) {
    for (long c = 0; c < lw; ++c) {
      double acc = 0.0;
      for (long k = -radius; k <= radius; ++k) {
        const long cc = std::clamp(c + k, 0L, lw - 1);
        acc += taps[static_cast<std::size_t>(k + radius)] * in[r * lw + cc];
      }
      tmp[r * lw + c] = acc;
    }
  }
  for (long r = 0; r < lh; ++r) {
    for (long c = 0; c < lw; ++c) {
      double acc = 0.0;
      for (long k = -radius; k <= radius; ++k) {
        const long rr = std::clamp(r + k, 0L, lh - 1);
        acc += taps[static_cast<std::size_t>(k + radius)] * tmp[rr * lw + c];
      }
      out[r * lw + c] = acc;
    }
  }
}

}  // namespace

GaussianPredictor::ZMap blur_z_map(std::size_t height, std::size_t width,
                                   double sigma_pixels) {
  if (!(sigma_pixels >= 0.0)) throw DomainError("blur width must be >= 0");
  return [=](std::span<const double> in, std::span<double> out) {
    if (in.size() != height * width || out.size() != in.size()) {
      throw DomainError("blur_z_map: image size mismatch");
    }
    blur_values(in, out, height, width, sigma_pixels);
  };
}

ImageGrid gaussian_blur(const ImageGrid& x, double sigma_pixels) {
  if (!(sigma_pixels >= 0.0)) throw DomainError("blur width must be >= 0");
  ImageGrid out(x.height(), x.width(), x.pixel_size());
  blur_values(x.values(), out.values(), x.height(), x.width(), sigma_pixels);
  return out;
}

AffinePredictor::AffinePredictor(std::vector<Row> table, ImageGrid offset)
    : table_(std::move(table)), offset_(std::move(offset)) {
  if (table_.empty()) throw DomainError("AffinePredictor: empty table");
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const Row& r = table_[i];
    if (!std::isfinite(r.t) || !std::isfinite(r.alpha) || !std::isfinite(r.beta)) {
      throw DomainError("AffinePredictor: non-finite table entry");
    }
    if (i > 0 && !(r.t > table_[i - 1].t)) {
      throw DomainError("AffinePredictor: table times must increase");
    }
  }
}

AffinePredictor AffinePredictor::from_file(const std::filesystem::path& table,
                                           const std::filesystem::path& offset) {
  std::ifstream in(table);
  if (!in) throw IoError("cannot open affine table " + table.string());
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Row r{};
    if (!(ls >> r.t)) continue;
    if (!(ls >> r.alpha >> r.beta)) {
      throw ConfigError(table.string() + ":" + std::to_string(lineno) +
                        ": expected 't alpha beta'");
    }
    rows.push_back(r);
  }
  ImageGrid off;
  if (!offset.empty()) off = read_image(offset);
  return AffinePredictor(std::move(rows), std::move(off));
}

ImageGrid AffinePredictor::predict(const ImageGrid& xt, double t,
                                   const ImageGrid& xfbp) const {
  require_same_shape(xt, xfbp, "AffinePredictor");
  if (offset_.size() != 0) require_same_shape(xt, offset_, "AffinePredictor offset");
  double alpha = table_.front().alpha, beta = table_.front().beta;
  if (t >= table_.back().t) {
    alpha = table_.back().alpha;
    beta = table_.back().beta;
  } else if (t > table_.front().t) {
    const auto hi = std::upper_bound(table_.begin(), table_.end(), t,
                                     [](double v, const Row& r) { return v < r.t; });
    const auto lo = hi - 1;
    const double w = (t - lo->t) / (hi->t - lo->t);
    alpha = lo->alpha + w * (hi->alpha - lo->alpha);
    beta = lo->beta + w * (hi->beta - lo->beta);
  }
  ImageGrid out(xt.height(), xt.width(), xt.pixel_size());
  auto o = out.values();
  auto a = xt.values();
  auto f = xfbp.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * a[i] + beta * f[i];
  if (offset_.size() != 0) {
    auto b = offset_.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += b[i];
  }
  return out;
}

}  // namespace ctbridge
