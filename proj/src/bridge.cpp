#include "ctbridge/bridge.hpp"

#include <cmath>
#include <string>

#include "ctbridge/errors.hpp"

namespace ctbridge {

namespace {

struct StepGeometry {
  double sig, sig_bar;            // at t
  double sig_prev, sig_bar_prev;  // at t'
  double var, var_bar, var_prev, var_bar_prev;  // squares, kept exact
  double sigma_T2;
};

StepGeometry step_geometry(const Schedule& s, double t, double t_prev) {
  if (!(t_prev >= 0.0 && t_prev < t && t <= s.horizon())) {
    throw DomainError("step requires 0 <= t_prev < t <= T (t = " +
                      std::to_string(t) + ", t_prev = " + std::to_string(t_prev) + ")");
  }
  const Schedule::Point p = s.eval(t);
  const Schedule::Point q = s.eval(t_prev);
  return {std::sqrt(p.sigma2), std::sqrt(p.sigma_bar2), std::sqrt(q.sigma2),
          std::sqrt(q.sigma_bar2), p.sigma2, p.sigma_bar2, q.sigma2, q.sigma_bar2,
          s.sigma_T2()};
}

// Coefficients given R = sqrt(sigma'^2 sigma_bar'^2 - eta^2 sigma_T^2).
StepCoefficients coefficients(const StepGeometry& g, double radical, double eta) {
  const double st2 = g.sigma_T2;
  const double a0 = g.var_bar_prev / st2;
  const double c0 = g.var_prev / st2;
  if (g.sig_bar == 0.0) {
    // X_T = X_FBP: b X_T + c X_FBP collapses to c0 X_FBP.
    return {a0, 0.0, c0, eta};
  }
  const double b = radical / (g.sig * g.sig_bar);
  const double a = a0 - g.var_bar / st2 * b;
  const double c = c0 - g.var / st2 * b;
  return {a, b, c, eta};
}

}  // namespace

double eta_max(const Schedule& s, double t_prev) {
  const Schedule::Point q = s.eval(t_prev);
  return std::sqrt(q.sigma2) * std::sqrt(q.sigma_bar2) / std::sqrt(s.sigma_T2());
}

namespace {

// r^(gamma^2) with 0^0 = 1.
double ratio_power(const StepGeometry& g, double gamma) {
  if (gamma == 0.0) return 1.0;
  if (g.sig_bar == 0.0 || g.sig_prev == 0.0) return 0.0;
  const double r = (g.sig_prev * g.sig_bar) / (g.sig_bar_prev * g.sig);
  return std::pow(r, gamma * gamma);
}

}  // namespace

double eta_from_gamma(const Schedule& s, double t, double t_prev, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  const StepGeometry g = step_geometry(s, t, t_prev);
  const double emax = g.sig_prev * g.sig_bar_prev / std::sqrt(g.sigma_T2);
  const double rp = ratio_power(g, gamma);
  return emax * std::sqrt(std::max(0.0, 1.0 - rp * rp));
}

StepCoefficients step_coeffs(const Schedule& s, double t, double t_prev,
                             Stochasticity noise) {
  const StepGeometry g = step_geometry(s, t, t_prev);
  const double emax = g.sig_prev * g.sig_bar_prev / std::sqrt(g.sigma_T2);
  if (noise.maximal) return coefficients(g, 0.0, emax);
  if (!(noise.gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  const double rp = ratio_power(g, noise.gamma);
  // R = sigma' sigma_bar' r^(gamma^2) avoids cancellation in the radicand.
  const double radical = g.sig_prev * g.sig_bar_prev * rp;
  const double eta = noise.gamma == 0.0 ? 0.0 : emax * std::sqrt(std::max(0.0, 1.0 - rp * rp));
  return coefficients(g, radical, eta);
}

StepCoefficients step_coeffs_eta(const Schedule& s, double t, double t_prev,
                                 double eta) {
  const StepGeometry g = step_geometry(s, t, t_prev);
  if (!(eta >= 0.0)) throw DomainError("eta must be >= 0");
  const double cap = g.sig_prev * g.sig_bar_prev;
  double radicand = cap * cap - eta * eta * g.sigma_T2;
  if (radicand < 0.0) {
    // eta = eta_max recomputed by the caller may overshoot by rounding.
    if (radicand < -1e-14 * cap * cap) {
      throw DomainError("eta exceeds sigma' sigma_bar' / sigma_T for this step");
    }
    radicand = 0.0;
  }
  return coefficients(g, std::sqrt(radicand), eta);
}

ImageGrid forward_sample(const ImageGrid& x0, const ImageGrid& xfbp, double t,
                         const Schedule& s, const RandomStream& rng) {
  require_same_shape(x0, xfbp, "forward_sample");
  const Schedule::Point p = s.eval(t);
  const double st2 = s.sigma_T2();
  const double w0 = p.sigma_bar2 / st2;
  const double w1 = p.sigma2 / st2;
  const double sd = std::sqrt(p.sigma2 * p.sigma_bar2 / st2);
  ImageGrid out(x0.height(), x0.width(), x0.pixel_size());
  auto o = out.values();
  auto a = x0.values();
  auto b = xfbp.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = w0 * a[i] + w1 * b[i];
  if (sd != 0.0) {
    std::vector<double> eps(o.size());
    rng.fill_normal(eps);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += sd * eps[i];
  }
  return out;
}

ImageGrid reverse_step(const ImageGrid& xt, const ImageGrid& x0p,
                       const ImageGrid& xfbp, const StepCoefficients& c,
                       const RandomStream& rng) {
  require_same_shape(xt, x0p, "reverse_step");
  require_same_shape(xt, xfbp, "reverse_step");
  ImageGrid out(xt.height(), xt.width(), xt.pixel_size());
  auto o = out.values();
  auto p = x0p.values();
  auto x = xt.values();
  auto f = xfbp.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = c.a * p[i] + c.b * x[i] + c.c * f[i];
  if (c.eta != 0.0) {
    std::vector<double> eps(o.size());
    rng.fill_normal(eps);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += c.eta * eps[i];
  }
  return out;
}

void SamplerConfig::validate() const {
  if (steps == 0) throw DomainError("sampler: steps must be >= 1");
  if (!noise.maximal && !(noise.gamma >= 0.0 && std::isfinite(noise.gamma))) {
    throw DomainError("sampler: gamma must be finite and >= 0");
  }
  if (std::isnan(k_x) || k_x < 0.0) throw DomainError("sampler: k_x must be >= 0");
  if (time_varying_kx &&
      (!(time_varying_kx->sigma_x2 > 0.0) || !(time_varying_kx->sigma_y2 >= 0.0))) {
    throw DomainError("sampler: time-varying k_x needs sigma_x2 > 0, sigma_y2 >= 0");
  }
}

bool SamplerConfig::consistency_enabled() const {
  if (cg_iterations == 0) return false;
  if (time_varying_kx) return true;
  return !std::isinf(k_x);
}

ImageGrid run_sampler(std::span<const double> y_raw, const LinearOperator& A,
                      const ImageGrid& xfbp, const Predictor& pred,
                      const SamplerConfig& cfg, std::uint32_t trajectory,
                      const StepObserver& observer, SamplerReport* report) {
  cfg.validate();
  const bool dc = cfg.consistency_enabled();
  if (dc && (A.cols() != xfbp.size() || A.rows() != y_raw.size())) {
    throw DomainError("run_sampler: operator does not match image and data sizes");
  }
  const TimeGrid grid = make_time_grid(cfg.schedule, cfg.steps);
  const RandomStream base(cfg.seed, StreamTag::bridge_noise, trajectory);
  SamplerReport local;
  SamplerReport& rep = report ? *report : local;
  rep = SamplerReport{};

  ImageGrid x = xfbp;
  std::vector<double> previous_solution;
  for (std::size_t n = cfg.steps; n >= 1; --n) {
    const double t = grid.time(n);
    const double t_prev = grid.time(n - 1);
    ImageGrid x0 = pred.predict(x, t, xfbp);
    ++rep.predictor_calls;
    if (!x0.same_shape(x)) {
      throw DomainError("run_sampler: predictor changed the image shape");
    }
    const bool last = n == 1;
    if (dc && !(last && cfg.skip_dc_last_step)) {
      DCProblem p;
      p.y = y_raw;
      p.x0hat = x0.values();
      p.k_x = cfg.time_varying_kx
                  ? kx_time_varying(cfg.schedule, t, cfg.time_varying_kx->sigma_x2,
                                    cfg.time_varying_kx->sigma_y2)
                  : cfg.k_x;
      p.m = cfg.cg_iterations;
      if (cfg.cg_start == CgStart::previous_solution && !previous_solution.empty()) {
        p.start = previous_solution;
      }
      CgReport cg;
      std::vector<double> sol = solve_dc(p, A, &cg);
      if (cg.breakdown) ++rep.cg_breakdowns;
      std::copy(sol.begin(), sol.end(), x0.values().begin());
      if (cfg.cg_start == CgStart::previous_solution) previous_solution = std::move(sol);
    }
    const StepCoefficients c = step_coeffs(cfg.schedule, t, t_prev, cfg.noise);
    x = reverse_step(x, x0, xfbp, c, base.with_step(static_cast<std::uint32_t>(n)));
    if (!x.all_finite()) {
      throw NumericError("run_sampler: non-finite image after step " +
                             std::to_string(n) + " (t = " + std::to_string(t) + ")",
                         static_cast<int>(n));
    }
    if (observer) observer(n, t_prev, x);
  }
  return x;
}

}  // namespace ctbridge
