#include "ctbridge/schedule.hpp"

#include <cmath>
#include <utility>

#include "ctbridge/errors.hpp"

namespace ctbridge {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b,
                    double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol) {
  if (a == b) return 0.0;
  // A coarse pass sets the absolute scale for the relative tolerance.
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double scale = std::max(std::abs(whole), 1e-300);
  return simpson_step(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

Schedule Schedule::i2sb(double beta0, double beta1) {
  if (!(beta0 > 0.0) || !(beta1 > 0.0)) {
    throw DomainError("i2sb schedule: beta0 and beta1 must be positive");
  }
  Schedule s;
  s.kind_ = Kind::i2sb;
  s.horizon_ = 1.0;
  s.beta0_ = beta0;
  s.beta1_ = beta1;
  s.sigma_T2_ = 2.0 * s.i2sb_partial(0.5);
  return s;
}

Schedule Schedule::ddbm_ve(double horizon) {
  if (!(horizon > 0.0)) throw DomainError("ddbm_ve schedule: T must be > 0");
  Schedule s;
  s.kind_ = Kind::ddbm_ve;
  s.horizon_ = horizon;
  s.sigma_T2_ = horizon * horizon;
  return s;
}

Schedule Schedule::custom(std::function<double(double)> g2, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("custom schedule: T must be > 0");
  if (!g2) throw DomainError("custom schedule: empty g^2");
  Schedule s;
  s.kind_ = Kind::custom;
  s.horizon_ = horizon;
  s.custom_g2_ = std::move(g2);
  s.sigma_T2_ = integrate_adaptive(s.custom_g2_, 0.0, horizon);
  if (!(s.sigma_T2_ > 0.0)) throw DomainError("custom schedule: zero variance");
  return s;
}

Schedule Schedule::by_name(const std::string& name) {
  if (name == "i2sb") return i2sb();
  if (name == "ddbm_ve" || name == "ddbm") return ddbm_ve();
  throw DomainError("unknown schedule '" + name + "'");
}

std::string Schedule::name() const {
  switch (kind_) {
    case Kind::i2sb: return "i2sb";
    case Kind::ddbm_ve: return "ddbm_ve";
    case Kind::custom: return "custom";
  }
  return "custom";
}

void Schedule::check_time(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) {
    throw DomainError("schedule: time " + std::to_string(t) +
                      " outside [0, " + std::to_string(horizon_) + "]");
  }
}

// g is linear on [0, 1/2]: g(u) = a + (b - a) u with a = sqrt(beta0),
// b = sqrt(beta1), so the integral of g^2 is a cubic.
double Schedule::i2sb_partial(double u) const {
  const double a = std::sqrt(beta0_);
  const double b = std::sqrt(beta1_);
  const double gu = a + (b - a) * u;
  // (gu^3 - a^3) / (3 slope), factored to avoid cancellation at small u.
  return u * (gu * gu + gu * a + a * a) / 3.0;
}

double Schedule::g2(double t) const {
  check_time(t);
  switch (kind_) {
    case Kind::i2sb: {
      const double a = std::sqrt(beta0_);
      const double b = std::sqrt(beta1_);
      const double g = 0.5 * (b + a) - 0.5 * (b - a) * std::abs(2.0 * t - 1.0);
      return g * g;
    }
    case Kind::ddbm_ve: return 2.0 * t;
    case Kind::custom: return custom_g2_(t);
  }
  return 0.0;
}

Schedule::Point Schedule::eval(double t) const {
  check_time(t);
  Point p{};
  p.g2 = g2(t);
  switch (kind_) {
    case Kind::i2sb:
      // The profile is symmetric about t = 1/2; integrate from the nearer end.
      if (t <= 0.5) {
        p.sigma2 = i2sb_partial(t);
        p.sigma_bar2 = sigma_T2_ - p.sigma2;
      } else {
        p.sigma_bar2 = i2sb_partial(1.0 - t);
        p.sigma2 = sigma_T2_ - p.sigma_bar2;
      }
      break;
    case Kind::ddbm_ve:
      p.sigma2 = t * t;
      p.sigma_bar2 = (horizon_ - t) * (horizon_ + t);
      break;
    case Kind::custom:
      if (t <= 0.5 * horizon_) {
        p.sigma2 = integrate_adaptive(custom_g2_, 0.0, t);
        p.sigma_bar2 = sigma_T2_ - p.sigma2;
      } else {
        p.sigma_bar2 = integrate_adaptive(custom_g2_, t, horizon_);
        p.sigma2 = sigma_T2_ - p.sigma_bar2;
      }
      break;
  }
  return p;
}

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps) {
  if (steps == 0) throw DomainError("time grid: step count must be >= 1");
  if (!(horizon > 0.0)) throw DomainError("time grid: horizon must be > 0");
}

double TimeGrid::time(std::size_t i) const {
  if (i > steps_) throw DomainError("time grid: index out of range");
  if (i == steps_) return horizon_;
  return static_cast<double>(i) * horizon_ / static_cast<double>(steps_);
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(steps_ + 1);
  for (std::size_t i = 0; i <= steps_; ++i) out[i] = time(i);
  return out;
}

TimeGrid make_time_grid(const Schedule& s, std::size_t steps) {
  return TimeGrid(s.horizon(), steps);
}

}  // namespace ctbridge
