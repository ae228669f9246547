#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ctbridge/linear_operator.hpp"
#include "ctbridge/predictor.hpp"
#include "ctbridge/schedule.hpp"

namespace ctbridge {

/// Dense matrix as a LinearOperator.
class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd a) : a_(std::move(a)) {}
  std::size_t rows() const override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t cols() const override { return static_cast<std::size_t>(a_.cols()); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y,
                     std::span<double> x) const override;
  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
};

/// Linear-Gaussian world with a closed form for every sampler quantity:
///   X_0 | X_FBP ~ N(Z, sigma_x2 I),  Z = z_matrix x_fbp + z_offset,
///   y | X_0 ~ N(A X_0, sigma_y2 I).
struct GaussianWorld {
  Eigen::MatrixXd A;         // n x d
  Eigen::MatrixXd z_matrix;  // d x d
  Eigen::VectorXd z_offset;  // d
  double sigma_x2 = 1.0;
  double sigma_y2 = 1.0;
  Eigen::VectorXd x_fbp;     // d

  Eigen::Index d() const { return A.cols(); }
  Eigen::Index n() const { return A.rows(); }
  Eigen::VectorXd z() const { return z_matrix * x_fbp + z_offset; }
  // Throws DomainError on inconsistent sizes, d or n above 64, or
  // non-positive variances.
  void validate() const;

  // Entries of A, Z and x_fbp standard normal (A scaled by a_scale), fixed
  // by seed.
  static GaussianWorld random(Eigen::Index d, Eigen::Index n, std::uint64_t seed,
                              double sigma_x2, double sigma_y2, double a_scale = 1.0);
  // Predictor whose mean is cond_moments_x0_given_xt's mean.
  GaussianPredictor predictor(const Schedule& s) const;
};

struct ScalarCovMoments {
  Eigen::VectorXd mean;
  double variance;  // covariance = variance * I
};

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// q(X_0 | X_t, X_FBP); requires 0 < t < T.
ScalarCovMoments cond_moments_x0_given_xt(const GaussianWorld& w,
                                          const Schedule& s,
                                          const Eigen::VectorXd& xt, double t);

// Dense solve of (A^T A + k I) x = A^T y + k x0hat with the exact k(t).
// Throws NumericError when the system is singular.
Eigen::VectorXd exact_x0p(const GaussianWorld& w, const Schedule& s,
                          const Eigen::VectorXd& xt, const Eigen::VectorXd& y,
                          double t);

// q(X_0 | X_FBP, y).
GaussianMoments exact_posterior(const GaussianWorld& w, const Eigen::VectorXd& y);

// q(X_t | X_FBP, y): the exact posterior pushed through the forward map.
GaussianMoments forward_marginal_moments(const GaussianWorld& w,
                                         const Schedule& s,
                                         const Eigen::VectorXd& y, double t);

// q(X_t | X_FBP): the prior pushed through the forward map.
GaussianMoments forward_prior_marginal_moments(const GaussianWorld& w,
                                               const Schedule& s, double t);

struct ScoreCheck {
  Eigen::VectorXd assembled;  // from the expected mean
  Eigen::VectorXd direct;     // -cov^{-1} (x_t - mean) of the marginal
};

// score = X_FBP / sigma_bar^2 - sigma_T^2 X_t / (sigma^2 sigma_bar^2) + m / sigma^2
// for an expected mean m.
Eigen::VectorXd score_from_mean(const Schedule& s, double t,
                                const Eigen::VectorXd& xt,
                                const Eigen::VectorXd& xfbp,
                                const Eigen::VectorXd& mean);

// Posterior score from exact_x0p against the gradient of log q(X_t | X_FBP, y).
ScoreCheck exact_posterior_score(const GaussianWorld& w, const Schedule& s,
                                 const Eigen::VectorXd& xt,
                                 const Eigen::VectorXd& y, double t);
// Image-domain score from the conditional mean against log q(X_t | X_FBP).
ScoreCheck image_domain_score(const GaussianWorld& w, const Schedule& s,
                              const Eigen::VectorXd& xt, double t);

// E[X_0 | X_t, y] by Schur-complement conditioning of the assembled joint
// Gaussian of (X_0, X_t, y) given X_FBP.
Eigen::VectorXd joint_conditioning_x0p(const GaussianWorld& w, const Schedule& s,
                                       const Eigen::VectorXd& xt,
                                       const Eigen::VectorXd& y, double t);

/// z1 ~ N(mu1, Lambda^{-1}), z2 | z1 ~ N(M z1 + mu2, L^{-1}).
struct LinearGaussianPair {
  Eigen::VectorXd mu1;
  Eigen::MatrixXd Lambda;
  Eigen::MatrixXd M;
  Eigen::VectorXd mu2;
  Eigen::MatrixXd L;
};

// mean (Lambda + M^T L M)^{-1} (M^T L (z2 - mu2) + Lambda mu1),
// cov (Lambda + M^T L M)^{-1}.
GaussianMoments bayes_conditional(const LinearGaussianPair& p,
                                  const Eigen::VectorXd& z2);
// The same conditional from the joint covariance of (z1, z2).
GaussianMoments schur_conditional(const LinearGaussianPair& p,
                                  const Eigen::VectorXd& z2);

}  // namespace ctbridge
