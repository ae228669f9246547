#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ctbridge/geometry.hpp"
#include "ctbridge/image.hpp"
#include "ctbridge/linear_operator.hpp"
#include "ctbridge/schedule.hpp"

namespace ctbridge {

/// argmin_x ||A x - y||^2 + k_x ||x - x0hat||^2, solved by m plain CG steps on
/// (A^T A + k_x I) x = A^T y + k_x x0hat.
struct DCProblem {
  std::span<const double> y;       // raw measurements
  std::span<const double> x0hat;   // image-domain expected mean
  double k_x = 0.0;
  std::size_t m = 0;
  std::span<const double> start;   // initial iterate; empty means x0hat
};

struct CgReport {
  std::size_t iterations = 0;
  bool converged_exactly = false;  // residual hit exactly zero
  bool breakdown = false;          // nonpositive or non-finite curvature
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<double> objective;   // per iterate, only when requested
};

std::vector<double> solve_dc(const DCProblem& p, const LinearOperator& A,
                             CgReport* report = nullptr,
                             bool track_objective = false);

ImageGrid solve_dc(const Sinogram& y, const ImageGrid& x0hat, double k_x,
                   std::size_t m, const LinearOperator& A,
                   CgReport* report = nullptr);

// ||A x - y||^2 + k_x ||x - x0hat||^2.
double dc_objective(const LinearOperator& A, std::span<const double> x,
                    std::span<const double> y, std::span<const double> x0hat,
                    double k_x);

// ||A^T(A x - y) + k_x (x - x0hat)|| / (k_x ||x0hat|| + ||A^T y||).
double dc_optimality_residual(const LinearOperator& A, std::span<const double> x,
                              std::span<const double> y,
                              std::span<const double> x0hat, double k_x);

// k_x(t) = (1 + sigma_bar2 sigma_x2 / (sigma2 sigma_T2)) sigma_y2 / sigma_x2,
// the weight under which the solve returns E[X_0 | X_t, X_FBP, y].
double kx_time_varying(const Schedule& s, double t, double sigma_x2,
                       double sigma_y2);

}  // namespace ctbridge
