#include "ctbridge/metrics.hpp"

#include <array>
#include <cmath>

#include "ctbridge/errors.hpp"

namespace ctbridge {

double to_hu(double mu, double mu_water) { return 1000.0 * (mu - mu_water) / mu_water; }

double rmse_hu(const ImageGrid& x, const ImageGrid& ref, double mu_water) {
  require_same_shape(x, ref, "rmse_hu");
  if (!(mu_water > 0.0)) throw DomainError("rmse_hu: mu_water must be > 0");
  if (x.size() == 0) throw DomainError("rmse_hu: empty image");
  const auto a = x.values();
  const auto b = ref.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = 1000.0 * (a[i] - b[i]) / mu_water;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double relative_rmse_in_circle(const ImageGrid& x, const ImageGrid& ref,
                               double radius_mm) {
  require_same_shape(x, ref, "relative_rmse_in_circle");
  const double cy = 0.5 * (static_cast<double>(x.height()) - 1.0);
  const double cx = 0.5 * (static_cast<double>(x.width()) - 1.0);
  const double px = x.pixel_size();
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < x.height(); ++r) {
    for (std::size_t c = 0; c < x.width(); ++c) {
      const double dx = (static_cast<double>(c) - cx) * px;
      const double dy = (static_cast<double>(r) - cy) * px;
      if (dx * dx + dy * dy > radius_mm * radius_mm) continue;
      const double e = x(r, c) - ref(r, c);
      num += e * e;
      den += ref(r, c) * ref(r, c);
    }
  }
  if (!(den > 0.0)) throw DomainError("relative_rmse_in_circle: reference is zero");
  return std::sqrt(num / den);
}

namespace {

constexpr int kWin = 11;

std::array<double, kWin> window_1d() {
  std::array<double, kWin> w{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-mode separable filtering: out is (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t h,
                                 std::size_t w, const std::array<double, kWin>& k) {
  const std::size_t oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> tmp(h * ow);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int j = 0; j < kWin; ++j) acc += k[j] * in[r * w + c + j];
      tmp[r * ow + c] = acc;
    }
  std::vector<double> out(oh * ow);
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int j = 0; j < kWin; ++j) acc += k[j] * tmp[(r + j) * ow + c];
      out[r * ow + c] = acc;
    }
  return out;
}

}  // namespace

double ssim(const ImageGrid& x, const ImageGrid& ref, double data_range) {
  require_same_shape(x, ref, "ssim");
  if (!(data_range > 0.0)) throw DomainError("ssim: data_range must be > 0");
  const std::size_t h = x.height(), w = x.width();
  if (h < kWin || w < kWin) throw DomainError("ssim: image smaller than the window");
  const auto k = window_1d();
  const std::vector<double>& a = x.data();
  const std::vector<double>& b = ref.data();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, k);
  const auto mu_b = filter_valid(b, h, w, k);
  const auto e_aa = filter_valid(aa, h, w, k);
  const auto e_bb = filter_valid(bb, h, w, k);
  const auto e_ab = filter_valid(ab, h, w, k);
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
           ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

}  // namespace ctbridge
