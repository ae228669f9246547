#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ctbridge/consistency.hpp"
#include "ctbridge/errors.hpp"
#include "ctbridge/oracle.hpp"
#include "ctbridge/projector.hpp"
#include "support.hpp"

using namespace ctbridge;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  const auto v = test::normals(static_cast<std::size_t>(rows * cols), seed);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

// Direct minimizer of ||A x - y||^2 + k ||x - x0||^2.
Eigen::VectorXd direct_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& x0, double k) {
  const Eigen::MatrixXd N =
      A.transpose() * A + k * Eigen::MatrixXd::Identity(A.cols(), A.cols());
  return N.colPivHouseholderQr().solve(A.transpose() * y + k * x0);
}

}  // namespace

TEST_CASE("zero CG iterations return the predicted mean") {
  const DenseOperator A(random_matrix(10, 16, 1));
  const auto y = test::normals(10, 2);
  const auto x0 = test::normals(16, 3);
  CgReport rep;
  const auto x = solve_dc({y, x0, 0.5, 0, {}}, A, &rep);
  CHECK(x == x0);
  CHECK(rep.iterations == 0);
}

TEST_CASE("identity operator with k = 1 converges in one iteration") {
  const IdentityOperator A(16);
  const auto y = test::normals(16, 4);
  const auto x0 = test::normals(16, 5);
  CgReport rep;
  const auto x = solve_dc({y, x0, 1.0, 1, {}}, A, &rep);
  std::vector<double> expect(16);
  for (std::size_t i = 0; i < 16; ++i) expect[i] = 0.5 * (y[i] + x0[i]);
  CHECK(test::max_abs_diff(x, expect) < 1e-12);
  CHECK(rep.iterations == 1);
}

TEST_CASE("dense 16 x 16 world: CG matches the direct solve") {
  const Eigen::MatrixXd M = random_matrix(16, 16, 6);
  const DenseOperator A(M);
  const auto y = test::normals(16, 7);
  const auto x0 = test::normals(16, 8);
  const double k = 0.3;
  const auto x = solve_dc({y, x0, k, 200, {}}, A);
  const Eigen::VectorXd ref = direct_solve(M, to_eigen(y), to_eigen(x0), k);
  CHECK((to_eigen(x) - ref).norm() / ref.norm() < 1e-8);
  CHECK(dc_optimality_residual(A, x, y, x0, k) < 1e-8);
}

TEST_CASE("optimality residual of the exact minimizer vanishes and of x0hat does not") {
  const Eigen::MatrixXd M = random_matrix(12, 16, 9);
  const DenseOperator A(M);
  const auto y = test::normals(12, 10);
  const auto x0 = test::normals(16, 11);
  const auto exact = to_std(direct_solve(M, to_eigen(y), to_eigen(x0), 0.7));
  CHECK(dc_optimality_residual(A, exact, y, x0, 0.7) < 1e-12);
  CHECK(dc_optimality_residual(A, x0, y, x0, 0.7) > 1e-2);
}

TEST_CASE("null-space component is inherited from the predicted mean") {
  const Eigen::MatrixXd M = random_matrix(6, 16, 12);
  const DenseOperator A(M);
  const Eigen::VectorXd x_true = to_eigen(test::normals(16, 13));
  const Eigen::VectorXd y = M * x_true;
  const auto x0 = test::normals(16, 14);
  // Projector onto null(A) = I - A^+ A.
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(16, 16) -
                            M.completeOrthogonalDecomposition().pseudoInverse() * M;
  // With k = 0 the normal matrix is singular; run exactly rank(A) steps,
  // past which rounding feeds null-space directions with vanishing curvature.
  for (double k : {0.0, 0.05, 2.0}) {
    const std::size_t m = k == 0.0 ? 6 : 200;
    const auto x = solve_dc({to_std(y), x0, k, m, {}}, A);
    CAPTURE(k);
    CHECK((P * to_eigen(x) - P * to_eigen(x0)).norm() < 1e-8);
  }
}

TEST_CASE("CG objective is nonincreasing") {
  const FanBeamGeometry g = test::toy_geometry();
  const IncompletenessMask m = IncompletenessMask::full(g);
  const ProjectionOperator A(g, m);
  const auto y = test::normals(A.rows(), 15);
  const auto x0 = test::normals(A.cols(), 16);
  for (double k : {0.0, 0.1, 10.0}) {
    CgReport rep;
    solve_dc({y, x0, k, 30, {}}, A, &rep, true);
    REQUIRE(rep.objective.size() == rep.iterations + 1);
    for (std::size_t i = 1; i < rep.objective.size(); ++i) {
      CHECK(rep.objective[i] <= rep.objective[i - 1] * (1.0 + 1e-14));
    }
    CHECK(rep.objective.back() < rep.objective.front());
  }
}

TEST_CASE("very large k_x keeps the solution at the predicted mean") {
  const DenseOperator A(random_matrix(16, 16, 17));
  const auto y = test::normals(16, 18);
  const auto x0 = test::normals(16, 19);
  const auto x = solve_dc({y, x0, 1e12, 50, {}}, A);
  CHECK(test::rel_l2(x, x0) < 1e-6);
}

TEST_CASE("explicit start iterate") {
  const Eigen::MatrixXd M = random_matrix(16, 16, 20);
  const DenseOperator A(M);
  const auto y = test::normals(16, 21);
  const auto x0 = test::normals(16, 22);
  const auto start = test::normals(16, 23);
  const auto x = solve_dc({y, x0, 0.3, 0, start}, A);
  CHECK(x == start);
  const auto conv = solve_dc({y, x0, 0.3, 200, start}, A);
  const Eigen::VectorXd ref = direct_solve(M, to_eigen(y), to_eigen(x0), 0.3);
  CHECK((to_eigen(conv) - ref).norm() / ref.norm() < 1e-8);
}

TEST_CASE("exact convergence and breakdown are reported") {
  SUBCASE("consistent start") {
    const IdentityOperator A(4);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CgReport rep;
    solve_dc({v, v, 0.0, 5, {}}, A, &rep);
    CHECK(rep.converged_exactly);
    CHECK(!rep.breakdown);
    CHECK(rep.iterations == 0);
  }
  SUBCASE("overflowing curvature") {
    const DenseOperator A(Eigen::MatrixXd::Constant(2, 2, 1e200));
    const std::vector<double> y{1.0, 1.0}, x0{0.0, 0.0};
    CgReport rep;
    const auto x = solve_dc({y, x0, 0.0, 3, {}}, A, &rep);
    CHECK(rep.breakdown);
    CHECK(x == x0);
  }
}

TEST_CASE("solve_dc argument errors") {
  const IdentityOperator A(4);
  const std::vector<double> v(4, 1.0), short_v(3, 1.0);
  CHECK_THROWS_AS(solve_dc({short_v, v, 1.0, 1, {}}, A), DomainError);
  CHECK_THROWS_AS(solve_dc({v, v, -1.0, 1, {}}, A), DomainError);
  CHECK_THROWS_AS(solve_dc({v, v, INFINITY, 1, {}}, A), DomainError);
  CHECK_THROWS_AS(solve_dc({v, v, 1.0, 1, short_v}, A), DomainError);
}

TEST_CASE("time-varying k_x") {
  const Schedule ddbm = Schedule::ddbm_ve();
  const Schedule i2sb = Schedule::i2sb();
  SUBCASE("t = T reduces to sigma_y2 / sigma_x2") {
    CHECK(kx_time_varying(ddbm, 2.5, 2.0, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(kx_time_varying(i2sb, 1.0, 4.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("noiseless data gives zero weight") {
    CHECK(kx_time_varying(ddbm, 1.0, 1.0, 0.0) == 0.0);
  }
  SUBCASE("DDBM at T/2 by independent arithmetic") {
    // sigma2 = T^2/4 = 1.5625, sigma_bar2 = 6.25 - 1.5625 = 4.6875.
    // k = (1 + 4.6875 / (1.5625 * 6.25)) * 0.01 = 1.48 * 0.01.
    CHECK(kx_time_varying(ddbm, 1.25, 1.0, 0.01) == doctest::Approx(0.0148).epsilon(1e-14));
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(kx_time_varying(ddbm, 0.0, 1.0, 0.01), DomainError);
    CHECK_THROWS_AS(kx_time_varying(ddbm, 3.0, 1.0, 0.01), DomainError);
    CHECK_THROWS_AS(kx_time_varying(ddbm, 1.0, 0.0, 0.01), DomainError);
  }
}
