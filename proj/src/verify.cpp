#include "ctbridge/verify.hpp"

#include <algorithm>
#include <cmath>

#include "ctbridge/bridge.hpp"
#include "ctbridge/consistency.hpp"
#include "ctbridge/oracle.hpp"
#include "ctbridge/projector.hpp"
#include "ctbridge/rng.hpp"
#include "ctbridge/sinoproc.hpp"

namespace ctbridge {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  RandomStream(seed, StreamTag::test).fill_normal(v);
  return v;
}

double rel_diff(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

CheckResult adjoint_check() {
  FanBeamGeometry g = FanBeamGeometry::desk_simulation();
  g.image_size = 32;
  g.image_pixel_size = 8.0;
  g.n_views = 36;
  g.n_detector_pixels = 50;
  g.detector_pixel_size = 13.28;
  double worst = 0.0;
  std::uint64_t seed = 1;
  for (RaySpacing spacing : {RaySpacing::equispaced, RaySpacing::equiangular}) {
    g.ray_spacing = spacing;
    for (Incompleteness k : {Incompleteness::full, Incompleteness::sparse_view,
                             Incompleteness::limited_angle, Incompleteness::truncated}) {
      const ProjectionOperator A(g, make_mask(g, k));
      for (int pair = 0; pair < 3; ++pair) {
        const auto x = normals(A.cols(), seed++);
        const auto y = normals(A.rows(), seed++);
        std::vector<double> ax(A.rows()), aty(A.cols());
        A.apply(x, ax);
        A.apply_adjoint(y, aty);
        worst = std::max(worst, std::abs(dot(ax, y) - dot(x, aty)) / (norm2(ax) * norm2(y)));
      }
    }
  }
  return {"adjoint identity", worst < 1e-10, worst, 1e-10};
}

CheckResult cg_check() {
  const GaussianWorld w = GaussianWorld::random(16, 16, 11, 1.0, 1.0);
  const DenseOperator A(w.A);
  const VectorXd y = Eigen::Map<const VectorXd>(normals(16, 12).data(), 16);
  const VectorXd x0 = Eigen::Map<const VectorXd>(normals(16, 13).data(), 16);
  DCProblem p{std::span<const double>(y.data(), 16), std::span<const double>(x0.data(), 16),
              0.3, 200, {}};
  const auto x = solve_dc(p, A);
  MatrixXd lhs = w.A.transpose() * w.A;
  lhs.diagonal().array() += 0.3;
  const VectorXd direct = lhs.ldlt().solve(w.A.transpose() * y + 0.3 * x0);
  const double err = rel_diff(Eigen::Map<const VectorXd>(x.data(), 16), direct);
  return {"cg matches dense solve", err < 1e-8, err, 1e-8};
}

std::vector<CheckResult> coefficient_checks() {
  double sum_err = 0.0, eta_zero = 0.0, b_max = 0.0, gamma_gap = 0.0;
  for (const Schedule& s : {Schedule::i2sb(), Schedule::ddbm_ve()}) {
    for (std::size_t steps : {10u, 50u}) {
      const TimeGrid grid = make_time_grid(s, steps);
      for (std::size_t n = steps; n >= 1; --n) {
        const double t = grid.time(n), tp = grid.time(n - 1);
        for (double gamma : {0.0, 0.5, 2.0, 8.0}) {
          const StepCoefficients c = step_coeffs(s, t, tp, Stochasticity::from_gamma(gamma));
          sum_err = std::max(sum_err, std::abs(c.a + c.b + c.c - 1.0));
          if (gamma == 0.0) eta_zero = std::max(eta_zero, std::abs(c.eta));
        }
        const StepCoefficients m = step_coeffs(s, t, tp, Stochasticity::eta_max());
        b_max = std::max(b_max, std::abs(m.b));
        if (m.eta > 0.0) {
          const double e8 = eta_from_gamma(s, t, tp, 8.0);
          gamma_gap = std::max(gamma_gap, (m.eta - e8) / m.eta);
        }
      }
    }
  }
  return {{"a + b + c = 1", sum_err < 1e-10, sum_err, 1e-10},
          {"gamma = 0 gives eta = 0", eta_zero == 0.0, eta_zero, 0.0},
          {"eta_max gives b = 0", b_max == 0.0, b_max, 0.0},
          {"gamma = 8 within 0.1% of eta_max", gamma_gap < 1e-3, gamma_gap, 1e-3}};
}

std::vector<CheckResult> gaussian_checks() {
  const Schedule s = Schedule::ddbm_ve();
  double post = 0.0, image = 0.0, joint = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto [d, n] : {std::pair{1, 1}, std::pair{8, 5}, std::pair{4, 2}}) {
      const GaussianWorld w = GaussianWorld::random(d, n, 100 + seed, 0.7, 0.2);
      const VectorXd xt = Eigen::Map<const VectorXd>(normals(d, 200 + seed).data(), d);
      const VectorXd y = Eigen::Map<const VectorXd>(normals(n, 300 + seed).data(), n);
      for (double t : {0.3, 1.25, 2.2}) {
        const ScoreCheck ps = exact_posterior_score(w, s, xt, y, t);
        post = std::max(post, rel_diff(ps.assembled, ps.direct));
        const ScoreCheck is = image_domain_score(w, s, xt, t);
        image = std::max(image, rel_diff(is.assembled, is.direct));
        joint = std::max(joint, rel_diff(exact_x0p(w, s, xt, y, t),
                                         joint_conditioning_x0p(w, s, xt, y, t)));
      }
    }
  }
  LinearGaussianPair p;
  const auto z = normals(64, 400);
  MatrixXd B = Eigen::Map<const MatrixXd>(z.data(), 4, 4);
  p.mu1 = VectorXd::LinSpaced(4, -1.0, 1.0);
  p.Lambda = B * B.transpose() + MatrixXd::Identity(4, 4);
  p.M = Eigen::Map<const MatrixXd>(z.data() + 16, 3, 4);
  p.mu2 = VectorXd::LinSpaced(3, 0.5, 1.5);
  MatrixXd C = Eigen::Map<const MatrixXd>(z.data() + 28, 3, 3);
  p.L = C * C.transpose() + MatrixXd::Identity(3, 3);
  const VectorXd z2 = Eigen::Map<const VectorXd>(z.data() + 40, 3);
  const GaussianMoments a = bayes_conditional(p, z2);
  const GaussianMoments b = schur_conditional(p, z2);
  const double bayes = std::max(rel_diff(a.mean, b.mean),
                                (a.cov - b.cov).norm() / b.cov.norm());
  return {{"posterior score matches density gradient", post < 1e-8, post, 1e-8},
          {"image-domain score matches density gradient", image < 1e-8, image, 1e-8},
          {"projection-embedded mean matches joint conditioning", joint < 1e-8, joint, 1e-8},
          {"Gaussian Bayes identity matches Schur complement", bayes < 1e-10, bayes, 1e-10}};
}

}  // namespace

std::vector<CheckResult> run_oracle_suite() {
  std::vector<CheckResult> out;
  out.push_back(adjoint_check());
  out.push_back(cg_check());
  for (auto& c : coefficient_checks()) out.push_back(c);
  for (auto& c : gaussian_checks()) out.push_back(c);
  return out;
}

}  // namespace ctbridge
