#include "ctbridge/consistency.hpp"

#include <cmath>

#include "ctbridge/errors.hpp"

namespace ctbridge {

namespace {

void check_problem(const DCProblem& p, const LinearOperator& A) {
  if (p.y.size() != A.rows() || p.x0hat.size() != A.cols()) {
    throw DomainError("solve_dc: operator and data sizes disagree");
  }
  if (!p.start.empty() && p.start.size() != A.cols()) {
    throw DomainError("solve_dc: start iterate has the wrong size");
  }
  if (!(p.k_x >= 0.0) || std::isinf(p.k_x)) {
    throw DomainError("solve_dc: k_x must be finite and >= 0");
  }
}

// out = (A^T A + k I) x; scratch has A.rows() entries.
void normal_apply(const LinearOperator& A, double k, std::span<const double> x,
                  std::span<double> out, std::vector<double>& scratch) {
  A.apply(x, scratch);
  A.apply_adjoint(scratch, out);
  if (k != 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += k * x[i];
  }
}

}  // namespace

double dc_objective(const LinearOperator& A, std::span<const double> x,
                    std::span<const double> y, std::span<const double> x0hat,
                    double k_x) {
  std::vector<double> ax(A.rows());
  A.apply(x, ax);
  double data = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double r = ax[i] - y[i];
    data += r * r;
  }
  double reg = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x0hat[i];
    reg += d * d;
  }
  return data + k_x * reg;
}

double dc_optimality_residual(const LinearOperator& A, std::span<const double> x,
                              std::span<const double> y,
                              std::span<const double> x0hat, double k_x) {
  std::vector<double> r(A.rows());
  A.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  std::vector<double> g(A.cols());
  A.apply_adjoint(r, g);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += k_x * (x[i] - x0hat[i]);
  std::vector<double> aty(A.cols());
  A.apply_adjoint(y, aty);
  const double denom = k_x * norm2(x0hat) + norm2(aty);
  const double num = norm2(g);
  return denom > 0.0 ? num / denom : num;
}

std::vector<double> solve_dc(const DCProblem& p, const LinearOperator& A,
                             CgReport* report, bool track_objective) {
  check_problem(p, A);
  const std::size_t n = A.cols();
  std::vector<double> x(p.start.empty() ? p.x0hat.begin() : p.start.begin(),
                        p.start.empty() ? p.x0hat.end() : p.start.end());
  CgReport local;
  CgReport& rep = report ? *report : local;
  rep = CgReport{};
  if (track_objective) rep.objective.push_back(dc_objective(A, x, p.y, p.x0hat, p.k_x));
  if (p.m == 0) return x;

  std::vector<double> scratch(A.rows());
  std::vector<double> r(n), q(n), dir(n);
  // r = A^T y + k x0hat - (A^T A + k I) x
  A.apply_adjoint(p.y, r);
  normal_apply(A, p.k_x, x, q, scratch);
  for (std::size_t i = 0; i < n; ++i) r[i] += p.k_x * p.x0hat[i] - q[i];
  dir = r;
  double rr = dot(r, r);
  rep.initial_residual = std::sqrt(rr);
  rep.final_residual = rep.initial_residual;

  for (std::size_t it = 0; it < p.m; ++it) {
    if (rr == 0.0) {
      rep.converged_exactly = true;
      break;
    }
    normal_apply(A, p.k_x, dir, q, scratch);
    const double curvature = dot(dir, q);
    if (!(curvature > 0.0) || !std::isfinite(curvature)) {
      rep.breakdown = true;
      break;
    }
    const double alpha = rr / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * dir[i];
      r[i] -= alpha * q[i];
    }
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < n; ++i) dir[i] = r[i] + beta * dir[i];
    rr = rr_next;
    rep.iterations = it + 1;
    rep.final_residual = std::sqrt(rr);
    if (track_objective) {
      rep.objective.push_back(dc_objective(A, x, p.y, p.x0hat, p.k_x));
    }
  }
  return x;
}

ImageGrid solve_dc(const Sinogram& y, const ImageGrid& x0hat, double k_x,
                   std::size_t m, const LinearOperator& A, CgReport* report) {
  DCProblem p;
  p.y = y.values;
  p.x0hat = x0hat.values();
  p.k_x = k_x;
  p.m = m;
  return ImageGrid(x0hat.height(), x0hat.width(), x0hat.pixel_size(),
                   solve_dc(p, A, report));
}

double kx_time_varying(const Schedule& s, double t, double sigma_x2,
                       double sigma_y2) {
  if (!(sigma_x2 > 0.0)) throw DomainError("kx_time_varying: sigma_x2 must be > 0");
  if (!(sigma_y2 >= 0.0)) throw DomainError("kx_time_varying: sigma_y2 must be >= 0");
  const Schedule::Point pt = s.eval(t);
  if (!(pt.sigma2 > 0.0)) {
    throw DomainError("kx_time_varying: singular at sigma_t = 0");
  }
  return (1.0 + pt.sigma_bar2 * sigma_x2 / (pt.sigma2 * s.sigma_T2())) *
         sigma_y2 / sigma_x2;
}

}  // namespace ctbridge
