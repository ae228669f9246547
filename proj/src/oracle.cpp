#include "ctbridge/oracle.hpp"

#include <cmath>
#include <vector>

#include "ctbridge/consistency.hpp"
#include "ctbridge/errors.hpp"
#include "ctbridge/rng.hpp"

namespace ctbridge {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void DenseOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols() || y.size() != rows()) {
    throw DomainError("DenseOperator::apply: size mismatch");
  }
  Eigen::Map<const VectorXd> xv(x.data(), a_.cols());
  Eigen::Map<VectorXd> yv(y.data(), a_.rows());
  yv.noalias() = a_ * xv;
}

void DenseOperator::apply_adjoint(std::span<const double> y,
                                  std::span<double> x) const {
  if (x.size() != cols() || y.size() != rows()) {
    throw DomainError("DenseOperator::apply_adjoint: size mismatch");
  }
  Eigen::Map<const VectorXd> yv(y.data(), a_.rows());
  Eigen::Map<VectorXd> xv(x.data(), a_.cols());
  xv.noalias() = a_.transpose() * yv;
}

void GaussianWorld::validate() const {
  if (d() < 1 || n() < 0 || d() > 64 || n() > 64) {
    throw DomainError("GaussianWorld: dimensions must satisfy 1 <= d <= 64, n <= 64");
  }
  if (z_matrix.rows() != d() || z_matrix.cols() != d() || z_offset.size() != d() ||
      x_fbp.size() != d()) {
    throw DomainError("GaussianWorld: inconsistent dimensions");
  }
  if (!(sigma_x2 > 0.0) || !(sigma_y2 > 0.0)) {
    throw DomainError("GaussianWorld: variances must be positive");
  }
}

GaussianWorld GaussianWorld::random(Index d, Index n, std::uint64_t seed,
                                    double sigma_x2, double sigma_y2,
                                    double a_scale) {
  const auto count = static_cast<std::size_t>(n * d + d * d + 2 * d);
  std::vector<double> z(count);
  RandomStream(seed, StreamTag::test).fill_normal(z);
  std::size_t k = 0;
  GaussianWorld w;
  w.A.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) w.A(i, j) = a_scale * z[k++];
  w.z_matrix.resize(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) w.z_matrix(i, j) = z[k++] / std::sqrt(double(d));
  w.z_offset.resize(d);
  for (Index i = 0; i < d; ++i) w.z_offset(i) = z[k++];
  w.x_fbp.resize(d);
  for (Index i = 0; i < d; ++i) w.x_fbp(i) = z[k++];
  w.sigma_x2 = sigma_x2;
  w.sigma_y2 = sigma_y2;
  w.validate();
  return w;
}

GaussianPredictor GaussianWorld::predictor(const Schedule& s) const {
  const MatrixXd zm = z_matrix;
  const VectorXd zo = z_offset;
  auto map = [zm, zo](std::span<const double> in, std::span<double> out) {
    if (in.size() != static_cast<std::size_t>(zo.size()) || out.size() != in.size()) {
      throw DomainError("GaussianWorld predictor: size mismatch");
    }
    Eigen::Map<const VectorXd> x(in.data(), zo.size());
    Eigen::Map<VectorXd> z(out.data(), zo.size());
    z.noalias() = zm * x + zo;
  };
  return GaussianPredictor(s, sigma_x2, map);
}

namespace {

void require_interior(const Schedule& s, double t) {
  if (!(t > 0.0 && t < s.horizon())) {
    throw DomainError("oracle: requires 0 < t < T");
  }
}

}  // namespace

ScalarCovMoments cond_moments_x0_given_xt(const GaussianWorld& w,
                                          const Schedule& s, const VectorXd& xt,
                                          double t) {
  w.validate();
  require_interior(s, t);
  if (xt.size() != w.d()) throw DomainError("cond_moments: x_t has the wrong size");
  const GaussianMeanCoefficients k = gaussian_mean_coefficients(s, t, w.sigma_x2);
  return {k.xt * xt + k.xfbp * w.x_fbp + k.z * w.z(), k.variance};
}

VectorXd exact_x0p(const GaussianWorld& w, const Schedule& s, const VectorXd& xt,
                   const VectorXd& y, double t) {
  const ScalarCovMoments c = cond_moments_x0_given_xt(w, s, xt, t);
  if (y.size() != w.n()) throw DomainError("exact_x0p: y has the wrong size");
  const double k = kx_time_varying(s, t, w.sigma_x2, w.sigma_y2);
  MatrixXd lhs = w.A.transpose() * w.A;
  lhs.diagonal().array() += k;
  const VectorXd rhs = w.A.transpose() * y + k * c.mean;
  Eigen::LDLT<MatrixXd> ldlt(lhs);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericError("exact_x0p: singular normal equations");
  }
  return ldlt.solve(rhs);
}

GaussianMoments exact_posterior(const GaussianWorld& w, const VectorXd& y) {
  w.validate();
  if (y.size() != w.n()) throw DomainError("exact_posterior: y has the wrong size");
  MatrixXd precision = w.A.transpose() * w.A / w.sigma_y2;
  precision.diagonal().array() += 1.0 / w.sigma_x2;
  const MatrixXd cov = precision.llt().solve(MatrixXd::Identity(w.d(), w.d()));
  const VectorXd mean = cov * (w.z() / w.sigma_x2 + w.A.transpose() * y / w.sigma_y2);
  return {mean, 0.5 * (cov + cov.transpose())};
}

namespace {

GaussianMoments push_forward(const Schedule& s, double t, const VectorXd& xfbp,
                             const GaussianMoments& x0) {
  const Schedule::Point p = s.eval(t);
  const double st2 = s.sigma_T2();
  const double w0 = p.sigma_bar2 / st2;
  GaussianMoments out;
  out.mean = w0 * x0.mean + (p.sigma2 / st2) * xfbp;
  out.cov = w0 * w0 * x0.cov;
  out.cov.diagonal().array() += p.sigma2 * p.sigma_bar2 / st2;
  return out;
}

}  // namespace

GaussianMoments forward_marginal_moments(const GaussianWorld& w, const Schedule& s,
                                         const VectorXd& y, double t) {
  return push_forward(s, t, w.x_fbp, exact_posterior(w, y));
}

GaussianMoments forward_prior_marginal_moments(const GaussianWorld& w,
                                               const Schedule& s, double t) {
  w.validate();
  GaussianMoments prior{w.z(), w.sigma_x2 * MatrixXd::Identity(w.d(), w.d())};
  return push_forward(s, t, w.x_fbp, prior);
}

VectorXd score_from_mean(const Schedule& s, double t, const VectorXd& xt,
                         const VectorXd& xfbp, const VectorXd& mean) {
  require_interior(s, t);
  const Schedule::Point p = s.eval(t);
  return xfbp / p.sigma_bar2 - s.sigma_T2() * xt / (p.sigma2 * p.sigma_bar2) +
         mean / p.sigma2;
}

namespace {

VectorXd gaussian_log_density_gradient(const GaussianMoments& m,
                                       const VectorXd& x) {
  return -m.cov.llt().solve(x - m.mean);
}

}  // namespace

ScoreCheck exact_posterior_score(const GaussianWorld& w, const Schedule& s,
                                 const VectorXd& xt, const VectorXd& y, double t) {
  const VectorXd x0p = exact_x0p(w, s, xt, y, t);
  return {score_from_mean(s, t, xt, w.x_fbp, x0p),
          gaussian_log_density_gradient(forward_marginal_moments(w, s, y, t), xt)};
}

ScoreCheck image_domain_score(const GaussianWorld& w, const Schedule& s,
                              const VectorXd& xt, double t) {
  const ScalarCovMoments c = cond_moments_x0_given_xt(w, s, xt, t);
  return {score_from_mean(s, t, xt, w.x_fbp, c.mean),
          gaussian_log_density_gradient(forward_prior_marginal_moments(w, s, t), xt)};
}

VectorXd joint_conditioning_x0p(const GaussianWorld& w, const Schedule& s,
                                const VectorXd& xt, const VectorXd& y, double t) {
  w.validate();
  require_interior(s, t);
  const Index d = w.d(), n = w.n();
  const Schedule::Point p = s.eval(t);
  const double st2 = s.sigma_T2();
  const double w0 = p.sigma_bar2 / st2;
  const double noise_t = p.sigma2 * p.sigma_bar2 / st2;
  const double sx2 = w.sigma_x2;
  const MatrixXd I = MatrixXd::Identity(d, d);

  // Joint of (X_0, X_t, y): X_t = w0 X_0 + .. + noise, y = A X_0 + noise.
  const Index N = 2 * d + n;
  MatrixXd cov = MatrixXd::Zero(N, N);
  VectorXd mean(N);
  mean.segment(0, d) = w.z();
  mean.segment(d, d) = w0 * w.z() + (p.sigma2 / st2) * w.x_fbp;
  mean.segment(2 * d, n) = w.A * w.z();
  cov.block(0, 0, d, d) = sx2 * I;
  cov.block(0, d, d, d) = w0 * sx2 * I;
  cov.block(0, 2 * d, d, n) = sx2 * w.A.transpose();
  cov.block(d, d, d, d) = (w0 * w0 * sx2 + noise_t) * I;
  cov.block(d, 2 * d, d, n) = w0 * sx2 * w.A.transpose();
  cov.block(2 * d, 2 * d, n, n) =
      sx2 * w.A * w.A.transpose() + w.sigma_y2 * MatrixXd::Identity(n, n);
  cov.block(d, 0, d, d) = cov.block(0, d, d, d).transpose();
  cov.block(2 * d, 0, n, d) = cov.block(0, 2 * d, d, n).transpose();
  cov.block(2 * d, d, n, d) = cov.block(d, 2 * d, d, n).transpose();

  VectorXd obs(d + n);
  obs << xt, y;
  const MatrixXd s12 = cov.block(0, d, d, d + n);
  const MatrixXd s22 = cov.block(d, d, d + n, d + n);
  return mean.segment(0, d) + s12 * s22.ldlt().solve(obs - mean.segment(d, d + n));
}

GaussianMoments bayes_conditional(const LinearGaussianPair& p, const VectorXd& z2) {
  const MatrixXd precision = p.Lambda + p.M.transpose() * p.L * p.M;
  const auto llt = precision.llt();
  if (llt.info() != Eigen::Success) {
    throw NumericError("bayes_conditional: posterior precision is not SPD");
  }
  const MatrixXd cov = llt.solve(MatrixXd::Identity(precision.rows(), precision.cols()));
  const VectorXd mean =
      llt.solve(p.M.transpose() * p.L * (z2 - p.mu2) + p.Lambda * p.mu1);
  return {mean, cov};
}

GaussianMoments schur_conditional(const LinearGaussianPair& p, const VectorXd& z2) {
  const Index d1 = p.mu1.size();
  const MatrixXd s11 = p.Lambda.llt().solve(MatrixXd::Identity(d1, d1));
  const MatrixXd noise = p.L.llt().solve(MatrixXd::Identity(p.L.rows(), p.L.cols()));
  const MatrixXd s12 = s11 * p.M.transpose();
  const MatrixXd s22 = p.M * s11 * p.M.transpose() + noise;
  const VectorXd m2 = p.M * p.mu1 + p.mu2;
  const auto ldlt = s22.ldlt();
  return {p.mu1 + s12 * ldlt.solve(z2 - m2), s11 - s12 * ldlt.solve(s12.transpose())};
}

}  // namespace ctbridge
