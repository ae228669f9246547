#include "ctbridge/sinoproc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include "ctbridge/errors.hpp"
#include "ctbridge/projector.hpp"
#include "ctbridge/rng.hpp"

namespace ctbridge {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_full_mask(const IncompletenessMask& m, const FanBeamGeometry& g) {
  return m == IncompletenessMask::full(g);
}

}  // namespace

// ---------------------------------------------------------------------------
// Incomplete-data extraction

IncompletenessMask make_mask(const FanBeamGeometry& g, Incompleteness kind,
                             const ExtractionSpec& spec) {
  g.validate();
  IncompletenessMask m = IncompletenessMask::full(g);
  m.kind = kind;
  switch (kind) {
    case Incompleteness::full:
      break;
    case Incompleteness::sparse_view: {
      if (spec.sparse_stride == 0) throw DomainError("sparse_stride must be >= 1");
      m.kept_views.clear();
      for (std::size_t v = 0; v < g.n_views; v += spec.sparse_stride) {
        m.kept_views.push_back(v);
      }
      break;
    }
    case Incompleteness::limited_angle: {
      if (!(spec.limited_arc_deg > 0.0) ||
          spec.limited_arc_deg > g.angular_coverage_deg) {
        throw DomainError("limited_arc_deg must lie in (0, coverage]");
      }
      const auto count = static_cast<std::size_t>(std::llround(
          static_cast<double>(g.n_views) * spec.limited_arc_deg /
          g.angular_coverage_deg));
      m.kept_views.resize(std::max<std::size_t>(count, 1));
      break;
    }
    case Incompleteness::truncated: {
      std::size_t keep = 0;
      if (spec.truncated_pixels) {
        keep = *spec.truncated_pixels;
      } else {
        if (!(spec.truncated_fraction > 0.0 && spec.truncated_fraction <= 1.0)) {
          throw DomainError("truncated_fraction must lie in (0, 1]");
        }
        keep = static_cast<std::size_t>(std::llround(
            spec.truncated_fraction * static_cast<double>(g.n_detector_pixels)));
      }
      if (keep == 0 || keep > g.n_detector_pixels) {
        throw DomainError("truncated detector count out of range");
      }
      const std::size_t first = (g.n_detector_pixels - keep) / 2;
      m.kept_detectors.resize(keep);
      for (std::size_t i = 0; i < keep; ++i) {
        m.kept_detectors[i] = static_cast<int>(first + i);
      }
      break;
    }
  }
  return m;
}

Sinogram extract_incomplete(const Sinogram& y_full, const FanBeamGeometry& g,
                            Incompleteness kind, const ExtractionSpec& spec) {
  if (!is_full_mask(y_full.mask, g) ||
      y_full.values.size() != g.n_views * g.n_detector_pixels) {
    throw DomainError("extract_incomplete: input is not a complete sinogram");
  }
  IncompletenessMask m = make_mask(g, kind, spec);
  Sinogram out(m);
  for (std::size_t r = 0; r < m.n_views(); ++r) {
    for (std::size_t c = 0; c < m.n_detectors(); ++c) {
      out.at(r, c) = y_full.at(m.kept_views[r],
                               static_cast<std::size_t>(m.kept_detectors[c]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise

Sinogram add_noise(const Sinogram& p, const NoiseModel& nm) {
  if (!(nm.n_air > 0.0)) throw DomainError("add_noise: N_air must be positive");
  if (!p.all_finite()) throw DomainError("add_noise: non-finite projection data");
  Sinogram out = p;
  std::vector<double> z(p.values.size());
  RandomStream(nm.seed, StreamTag::measurement_noise).fill_normal(z);
  const double inv_sqrt_n = 1.0 / std::sqrt(nm.n_air);
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.values[i] += std::exp(0.5 * p.values[i]) * z[i] * inv_sqrt_n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace {

double wrap_angle(double a) {  // to (-pi, pi]
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

// Source angle of the conjugate ray: the second intersection of the ray's
// line with the source circle.
double conjugate_source_angle(const FanBeamGeometry& g, std::size_t view,
                              int det) {
  const double beta = g.view_angle(view);
  const double es_x = std::cos(beta), es_y = std::sin(beta);
  const double eu_x = -es_y, eu_y = es_x;
  const double sx = g.source_to_iso * es_x, sy = g.source_to_iso * es_y;
  const double u = g.detector_coordinate(det);
  double dx = 0.0, dy = 0.0;
  if (g.ray_spacing == RaySpacing::equispaced) {
    const double back = g.source_to_detector - g.source_to_iso;
    dx = -back * es_x + u * eu_x - sx;
    dy = -back * es_y + u * eu_y - sy;
  } else {
    const double fan = u / g.source_to_detector;
    dx = -std::cos(fan) * es_x + std::sin(fan) * eu_x;
    dy = -std::cos(fan) * es_y + std::sin(fan) * eu_y;
  }
  const double len2 = dx * dx + dy * dy;
  const double s = -2.0 * (sx * dx + sy * dy) / len2;
  return std::atan2(sy + s * dy, sx + s * dx);
}

double taper(double distance, double width) {
  if (distance <= 0.0) return 0.0;
  if (width <= 0.0 || distance >= width) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * distance / width));
}

}  // namespace

std::vector<double> limited_angle_weights(const FanBeamGeometry& g,
                                          const IncompletenessMask& m,
                                          double strength, double taper_deg) {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw DomainError("limited_angle_strength must lie in [0, 1]");
  }
  if (!(taper_deg >= 0.0)) throw DomainError("taper width must be >= 0");
  std::vector<double> w(m.n_views() * m.n_detectors(), 1.0);
  if (m.kept_views.empty() || strength == 0.0) return w;

  const double step = g.view_angle(1) - g.view_angle(0);
  const double arc_start = g.view_angle(m.kept_views.front()) - 0.5 * step;
  const double arc = g.view_angle(m.kept_views.back()) + 0.5 * step - arc_start;
  if (arc >= 2.0 * kPi - 1e-12) return w;
  const double width = taper_deg * kPi / 180.0;
  const double mid = arc_start + 0.5 * arc;

  for (std::size_t r = 0; r < m.n_views(); ++r) {
    for (std::size_t c = 0; c < m.n_detectors(); ++c) {
      const double conj =
          conjugate_source_angle(g, m.kept_views[r], m.kept_detectors[c]);
      const double off = std::abs(wrap_angle(conj - mid)) - 0.5 * arc;
      w[r * m.n_detectors() + c] = 1.0 + strength * taper(off, width);
    }
  }
  return w;
}

Sinogram preprocess(const Sinogram& y, const FanBeamGeometry& g,
                    const PreprocessSpec& spec) {
  if (spec.kind != y.mask.kind) {
    throw DomainError("preprocess: spec kind " + to_string(spec.kind) +
                      " does not match data kind " + to_string(y.mask.kind));
  }
  switch (spec.kind) {
    case Incompleteness::full:
    case Incompleteness::sparse_view:
      return y;
    case Incompleteness::limited_angle: {
      const auto w = limited_angle_weights(g, y.mask, spec.limited_angle_strength,
                                           spec.limited_angle_taper_deg);
      Sinogram out = y;
      for (std::size_t i = 0; i < w.size(); ++i) out.values[i] *= w[i];
      return out;
    }
    case Incompleteness::truncated:
      break;
  }

  const std::size_t margin =
      spec.truncation_margin
          ? *spec.truncation_margin
          : static_cast<std::size_t>(
                std::llround(0.1 * static_cast<double>(g.n_detector_pixels)));
  if (margin > g.n_detector_pixels) {
    throw DomainError("preprocess: truncation margin " + std::to_string(margin) +
                      " exceeds detector width " +
                      std::to_string(g.n_detector_pixels));
  }
  const std::size_t nd = y.n_detectors();
  if (nd == 0 || margin == 0) return y;
  IncompletenessMask m = y.mask;
  const int first = m.kept_detectors.front();
  const int last = m.kept_detectors.back();
  m.kept_detectors.clear();
  for (int k = first - static_cast<int>(margin); k < first; ++k) {
    m.kept_detectors.push_back(k);
  }
  for (std::size_t c = 0; c < nd; ++c) m.kept_detectors.push_back(y.mask.kept_detectors[c]);
  for (int k = last + 1; k <= last + static_cast<int>(margin); ++k) {
    m.kept_detectors.push_back(k);
  }
  Sinogram out(m);
  const double inv = 1.0 / static_cast<double>(margin);
  for (std::size_t r = 0; r < y.n_views(); ++r) {
    const double left = y.at(r, 0);
    const double right = y.at(r, nd - 1);
    for (std::size_t j = 1; j <= margin; ++j) {
      const double f = 1.0 - static_cast<double>(j) * inv;
      out.at(r, margin - j) = left * f;
      out.at(r, margin + nd - 1 + j) = right * f;
    }
    for (std::size_t c = 0; c < nd; ++c) out.at(r, margin + c) = y.at(r, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FBP

namespace {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Linear convolution of each length-n row of `rows` with kernel[lag + n - 1],
// lag in [-(n - 1), n - 1]: out[k] = sum_i kernel[k - i + n - 1] in[i].
std::vector<double> convolve_rows(const std::vector<double>& rows,
                                  std::size_t n_rows, std::size_t n,
                                  const std::vector<double>& kernel) {
  const std::size_t pad = 2 * next_pow2(n);
  const std::size_t nc = pad / 2 + 1;
  double* buf = fftw_alloc_real(pad);
  fftw_complex* spec = fftw_alloc_complex(nc);
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(fftw_plan_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(pad), buf, spec, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(pad), spec, buf, FFTW_ESTIMATE);
  }

  std::fill(buf, buf + pad, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) buf[lag] = kernel[lag + n - 1];
  for (std::size_t lag = 1; lag < n; ++lag) buf[pad - lag] = kernel[n - 1 - lag];
  fftw_execute(fwd);
  std::vector<std::complex<double>> kspec(nc);
  for (std::size_t i = 0; i < nc; ++i) kspec[i] = {spec[i][0], spec[i][1]};

  std::vector<double> out(n_rows * n);
  const double scale = 1.0 / static_cast<double>(pad);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* row = rows.data() + r * n;
    std::fill(buf, buf + pad, 0.0);
    std::copy(row, row + n, buf);
    fftw_execute(fwd);
    for (std::size_t i = 0; i < nc; ++i) {
      const std::complex<double> v =
          std::complex<double>(spec[i][0], spec[i][1]) * kspec[i];
      spec[i][0] = v.real();
      spec[i][1] = v.imag();
    }
    fftw_execute(inv);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = buf[j] * scale;
  }

  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(spec);
  fftw_free(buf);
  return out;
}

// Band-limited ramp for sample spacing tau (cutoff 1 / (2 tau)) at offset
// s. At s = n tau this is 1/(4 tau^2), 0 for even n != 0 and
// -1/(n pi tau)^2 for odd n.
double ramp(double s, double tau) {
  const double w = 0.5 / tau;
  if (std::abs(s) < 1e-9 * tau) return w * w;
  const double x = 2.0 * kPi * w * s;
  return w * std::sin(x) / (kPi * s) + (std::cos(x) - 1.0) / (2.0 * kPi * kPi * s * s);
}

double ramp_at_sample(long n, double tau) {
  if (n == 0) return 1.0 / (4.0 * tau * tau);
  if (n % 2 == 0) return 0.0;
  const double dn = static_cast<double>(n);
  return -1.0 / (dn * dn * kPi * kPi * tau * tau);
}

}  // namespace

ImageGrid fbp(const Sinogram& y, const FanBeamGeometry& g,
              const FbpOptions& options) {
  g.validate();
  const IncompletenessMask& m = y.mask;
  m.validate(g, false);
  if (m.kept_views.empty()) throw DomainError("fbp: no views");
  if (m.kept_detectors.empty()) throw DomainError("fbp: no detector samples");
  if (y.values.size() != m.n_views() * m.n_detectors()) {
    throw DomainError("fbp: sinogram does not match its mask");
  }
  const std::size_t nd = m.n_detectors();
  if (m.kept_detectors.back() - m.kept_detectors.front() !=
      static_cast<int>(nd) - 1) {
    throw DomainError("fbp: detector samples must be contiguous");
  }

  const double dso = g.source_to_iso;
  const double dsd = g.source_to_detector;
  const bool flat = g.ray_spacing == RaySpacing::equispaced;
  // Filtering coordinate: iso-plane position (flat) or fan angle (arc).
  const double tau = flat ? g.detector_pixel_size * dso / dsd
                          : g.detector_pixel_size / dsd;
  const double coord0 = flat ? g.detector_coordinate(m.kept_detectors.front()) * dso / dsd
                             : g.detector_coordinate(m.kept_detectors.front()) / dsd;

  std::vector<double> weighted = y.values;
  for (std::size_t r = 0; r < m.n_views(); ++r) {
    for (std::size_t c = 0; c < nd; ++c) {
      const double s = coord0 + static_cast<double>(c) * tau;
      const double w = flat ? dso / std::sqrt(dso * dso + s * s) : dso * std::cos(s);
      weighted[r * nd + c] *= w;
    }
  }

  // Filtered rows sampled at spacing tau / U: phase p evaluates the
  // band-limited filter output at offset p tau / U from each sample.
  const std::size_t up = std::max<std::size_t>(options.upsample, 1);
  const std::size_t nq = nd * up;
  const double qstep = tau / static_cast<double>(up);
  std::vector<double> q(m.n_views() * nq);
  for (std::size_t phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    std::vector<double> kernel(2 * nd - 1);
    for (std::size_t i = 0; i < kernel.size(); ++i) {
      const long lag = static_cast<long>(i) - static_cast<long>(nd - 1);
      const double s = (static_cast<double>(lag) + frac) * tau;
      double h = phase == 0 ? ramp_at_sample(lag, tau) : ramp(s, tau);
      if (!flat && s != 0.0) {
        const double ratio = s / std::sin(s);
        h *= ratio * ratio;
      }
      kernel[i] = 0.5 * h * tau;
    }
    const std::vector<double> part = convolve_rows(weighted, m.n_views(), nd, kernel);
    for (std::size_t r = 0; r < m.n_views(); ++r) {
      for (std::size_t c = 0; c < nd; ++c) {
        q[r * nq + c * up + phase] = part[r * nd + c];
      }
    }
  }

  const double native = g.angular_coverage_deg * kPi / 180.0 /
                        static_cast<double>(g.n_views);
  const double dbeta =
      m.kind == Incompleteness::sparse_view
          ? g.angular_coverage_deg * kPi / 180.0 / static_cast<double>(m.n_views())
          : native;

  const std::size_t n = g.image_size;
  const double px = g.image_pixel_size;
  const double center = 0.5 * (static_cast<double>(n) - 1.0);
  ImageGrid out(n, n, px);
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = (static_cast<double>(i) - center) * px;
    ys[i] = (center - static_cast<double>(i)) * px;
  }
  for (std::size_t r = 0; r < m.n_views(); ++r) {
    const double beta = g.view_angle(m.kept_views[r]);
    const double es_x = std::cos(beta), es_y = std::sin(beta);
    const double* row = q.data() + r * nq;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double along = dso - (xs[i] * es_x + ys[j] * es_y);
        const double lateral = -xs[i] * es_y + ys[j] * es_x;
        double coord = 0.0, weight = 0.0;
        if (flat) {
          coord = dso * lateral / along;
          weight = dso * dso / (along * along);
        } else {
          coord = std::atan2(lateral, along);
          weight = 1.0 / (along * along + lateral * lateral);
        }
        const double f = (coord - coord0) / qstep;
        const double f0 = std::floor(f);
        if (f0 < 0.0 || f0 > static_cast<double>(nq - 1)) continue;
        const auto k = static_cast<std::size_t>(f0);
        const double w = f - f0;
        double v = row[k] * (1.0 - w);
        if (k + 1 < nq) v += row[k + 1] * w;
        out(j, i) += dbeta * weight * v;
      }
    }
  }
  return out;
}

}  // namespace ctbridge
