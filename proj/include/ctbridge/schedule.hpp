#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ctbridge {

/// Variance-exploding bridge noise schedule.
///
/// sigma2(t) = int_0^t g^2, sigma_bar2(t) = int_t^T g^2, and
/// sigma2(t) + sigma_bar2(t) = sigma_T2 for every t in [0, T].
/// Immutable after construction.
class Schedule {
 public:
  enum class Kind { i2sb, ddbm_ve, custom };

  struct Point {
    double sigma2;      // variance accumulated on [0, t]
    double sigma_bar2;  // variance remaining on [t, T]
    double g2;          // squared diffusion coefficient at t
  };

  // g(t) = (sqrt(b1)+sqrt(b0))/2 - (sqrt(b1)-sqrt(b0))/2 |2t - 1| on [0, 1].
  static Schedule i2sb(double beta0 = 0.1, double beta1 = 0.3);
  // g^2(t) = 2t, sigma2(t) = t^2 on [0, T].
  static Schedule ddbm_ve(double horizon = 2.5);
  // Arbitrary g^2 on [0, T]; integrals by adaptive quadrature.
  static Schedule custom(std::function<double(double)> g2, double horizon);
  // "i2sb" or "ddbm_ve" with their default parameters.
  static Schedule by_name(const std::string& name);

  Kind kind() const noexcept { return kind_; }
  std::string name() const;
  double horizon() const noexcept { return horizon_; }
  double sigma_T2() const noexcept { return sigma_T2_; }
  double beta0() const noexcept { return beta0_; }
  double beta1() const noexcept { return beta1_; }

  // Throws DomainError for t outside [0, T].
  Point eval(double t) const;
  double g2(double t) const;
  double sigma2(double t) const { return eval(t).sigma2; }
  double sigma_bar2(double t) const { return eval(t).sigma_bar2; }

 private:
  Schedule() = default;
  double i2sb_partial(double u) const;  // int_0^u g^2 for u in [0, 1/2]
  void check_time(double t) const;

  Kind kind_ = Kind::ddbm_ve;
  double horizon_ = 1.0;
  double sigma_T2_ = 1.0;
  double beta0_ = 0.0;
  double beta1_ = 0.0;
  std::function<double(double)> custom_g2_;
};

/// Uniform descending grid t_N = T > ... > t_0 = 0, stored ascending by
/// index: time(i) = i T / N.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  std::size_t steps() const noexcept { return steps_; }
  double horizon() const noexcept { return horizon_; }
  double time(std::size_t i) const;
  double spacing() const noexcept { return horizon_ / static_cast<double>(steps_); }
  std::vector<double> times() const;

 private:
  double horizon_;
  std::size_t steps_;
};

// Throws DomainError when steps == 0.
TimeGrid make_time_grid(const Schedule& s, std::size_t steps);

// Adaptive Simpson integral of f on [a, b] to the given relative tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-12);

}  // namespace ctbridge
