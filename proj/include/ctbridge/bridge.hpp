#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>

#include "ctbridge/consistency.hpp"
#include "ctbridge/image.hpp"
#include "ctbridge/linear_operator.hpp"
#include "ctbridge/predictor.hpp"
#include "ctbridge/rng.hpp"
#include "ctbridge/schedule.hpp"

namespace ctbridge {

/// Langevin strength of the reverse SDE: a finite gamma >= 0, or the
/// maximal per-step noise eta_max = sigma' sigma_bar' / sigma_T (gamma -> inf).
struct Stochasticity {
  double gamma = 0.0;
  bool maximal = true;

  static Stochasticity from_gamma(double g) { return {g, false}; }
  static Stochasticity eta_max() { return {0.0, true}; }
};

/// X' = a X0p + b X_t + c X_FBP + eta eps for one step t -> t'.
struct StepCoefficients {
  double a;
  double b;
  double c;
  double eta;
};

// eta = (sigma' sigma_bar' / sigma_T) sqrt(1 - r^(2 gamma^2)),
// r = sigma' sigma_bar_t / (sigma_bar' sigma_t).
double eta_from_gamma(const Schedule& s, double t, double t_prev, double gamma);
double eta_max(const Schedule& s, double t_prev);

// Requires 0 <= t_prev < t <= T. At t = T (X_T = X_FBP) the b and c
// contributions are merged into c, so b = 0 for every noise level.
StepCoefficients step_coeffs(const Schedule& s, double t, double t_prev,
                             Stochasticity noise);
// Explicit eta; throws DomainError when eta^2 sigma_T^2 > sigma'^2 sigma_bar'^2.
StepCoefficients step_coeffs_eta(const Schedule& s, double t, double t_prev,
                                 double eta);

// X_t = (sigma_bar^2 x0 + sigma^2 xfbp) / sigma_T^2 + sqrt(sigma^2 sigma_bar^2 / sigma_T^2) eps.
ImageGrid forward_sample(const ImageGrid& x0, const ImageGrid& xfbp, double t,
                         const Schedule& s, const RandomStream& rng);

// Noise is drawn only when eta != 0.
ImageGrid reverse_step(const ImageGrid& xt, const ImageGrid& x0p,
                       const ImageGrid& xfbp, const StepCoefficients& c,
                       const RandomStream& rng);

struct TimeVaryingKx {
  double sigma_x2;
  double sigma_y2;
};

enum class CgStart { predicted_mean, previous_solution };

struct SamplerConfig {
  Schedule schedule = Schedule::i2sb();
  std::size_t steps = 10;
  Stochasticity noise = Stochasticity::eta_max();
  // +infinity disables data consistency.
  double k_x = 0.0;
  std::optional<TimeVaryingKx> time_varying_kx;
  std::size_t cg_iterations = 20;
  bool skip_dc_last_step = false;
  CgStart cg_start = CgStart::predicted_mean;
  std::uint64_t seed = 0;

  static constexpr double kNoConsistency = std::numeric_limits<double>::infinity();

  // Throws DomainError on steps = 0, negative gamma, negative or NaN k_x,
  // or non-positive time-varying variances.
  void validate() const;
  bool consistency_enabled() const;
};

struct SamplerReport {
  std::size_t cg_breakdowns = 0;
  std::size_t predictor_calls = 0;
};

// Called after every step with the step index n (the step maps t_n to
// t_{n-1}), t_{n-1} and X_{t_{n-1}}.
using StepObserver =
    std::function<void(std::size_t n, double t_prev, const ImageGrid& x)>;

/// Reverse process from X_T = X_FBP to X_0. Each step predicts X0hat, embeds
/// the raw data through an m-step CG solve, and applies the exact-integration
/// update. Noise for step n of trajectory k comes from the stream
/// (seed, bridge_noise, k, n), so trajectories are reproducible in any order.
ImageGrid run_sampler(std::span<const double> y_raw, const LinearOperator& A,
                      const ImageGrid& xfbp, const Predictor& pred,
                      const SamplerConfig& cfg, std::uint32_t trajectory = 0,
                      const StepObserver& observer = {},
                      SamplerReport* report = nullptr);

}  // namespace ctbridge
