#include <doctest.h>

#include <cmath>
#include <limits>

#include "ctbridge/bridge.hpp"
#include "ctbridge/errors.hpp"
#include "ctbridge/oracle.hpp"
#include "ctbridge/projector.hpp"
#include "mc_support.hpp"
#include "support.hpp"

using namespace ctbridge;

namespace {

struct SampleMoments {
  double mean, var;
};

SampleMoments moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / (n - 1.0)};
}

// True when sample moments of n draws agree with (mean, var) within k SE.
bool within_se(SampleMoments m, double mean, double var, double n, double k) {
  return std::abs(m.mean - mean) < k * std::sqrt(var / n) &&
         std::abs(m.var - var) < k * var * std::sqrt(2.0 / (n - 1.0));
}

ImageGrid constant_image(std::size_t n, double v) { return ImageGrid(1, n, 1.0, v); }

std::vector<Schedule> both_schedules() { return {Schedule::i2sb(), Schedule::ddbm_ve()}; }

class NanAfter final : public Predictor {
 public:
  explicit NanAfter(double t_limit) : t_limit_(t_limit) {}
  ImageGrid predict(const ImageGrid& xt, double t, const ImageGrid&) const override {
    ImageGrid out = xt;
    if (t < t_limit_) out(0, 0) = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

 private:
  double t_limit_;
};

}  // namespace

TEST_CASE("forward sampling endpoints are exact") {
  for (const Schedule& s : both_schedules()) {
    const ImageGrid x0(4, 4, 1.0, test::normals(16, 1));
    const ImageGrid xf(4, 4, 1.0, test::normals(16, 2));
    const RandomStream rng(3, StreamTag::forward_sample);
    CHECK(forward_sample(x0, xf, 0.0, s, rng) == x0);
    CHECK(forward_sample(x0, xf, s.horizon(), s, rng) == xf);
    CHECK_THROWS_AS(forward_sample(x0, xf, -0.1, s, rng), DomainError);
    CHECK_THROWS_AS(forward_sample(x0, xf, 1.01 * s.horizon(), s, rng), DomainError);
  }
}

TEST_CASE("forward sampling moments at T/2") {
  for (const Schedule& s : both_schedules()) {
    const std::size_t n = 100000;
    const double t = 0.5 * s.horizon();
    const ImageGrid x = forward_sample(constant_image(n, 1.5), constant_image(n, -0.5), t, s,
                                       RandomStream(4, StreamTag::forward_sample));
    const double st2 = s.sigma_T2(), v = s.sigma2(t), vb = s.sigma_bar2(t);
    CHECK(within_se(moments(x.values()), (vb * 1.5 - v * 0.5) / st2, v * vb / st2,
                    static_cast<double>(n), 4.0));
  }
}

TEST_CASE("step coefficient identities on uniform grids") {
  for (const Schedule& s : both_schedules()) {
    for (std::size_t steps : {1, 10, 50, 200}) {
      const TimeGrid grid = make_time_grid(s, steps);
      for (std::size_t n = steps; n >= 1; --n) {
        const double t = grid.time(n), tp = grid.time(n - 1);
        const double st2 = s.sigma_T2();
        for (double g : {0.0, 0.5, 1.0, 4.0, 8.0}) {
          const StepCoefficients c = step_coeffs(s, t, tp, Stochasticity::from_gamma(g));
          CHECK(std::abs(c.a + c.b + c.c - 1.0) < 1e-10);
          CHECK(c.eta >= 0.0);
          CHECK(c.eta <= eta_max(s, tp) * (1.0 + 1e-15));
          if (g == 0.0) CHECK(c.eta == 0.0);
        }
        const StepCoefficients m = step_coeffs(s, t, tp, Stochasticity::eta_max());
        CHECK(m.b == 0.0);
        CHECK(m.a == doctest::Approx(s.sigma_bar2(tp) / st2).epsilon(1e-14));
        CHECK(m.c == doctest::Approx(s.sigma2(tp) / st2).epsilon(1e-14));
        CHECK(m.eta == doctest::Approx(eta_max(s, tp)).epsilon(1e-15));
        CHECK(std::abs(m.a + m.b + m.c - 1.0) < 1e-10);
      }
      // The last step lands on X_0 with weight one on the prediction.
      const StepCoefficients last = step_coeffs(s, grid.time(1), 0.0, Stochasticity::from_gamma(1.0));
      CHECK(last.a == 1.0);
      CHECK(last.b == 0.0);
      CHECK(last.c == 0.0);
      CHECK(last.eta == 0.0);
    }
  }
}

TEST_CASE("eta from gamma: monotone, maximal limit, and the gamma = 8 claim") {
  for (const Schedule& s : both_schedules()) {
    for (std::size_t steps : {10, 50}) {
      const TimeGrid grid = make_time_grid(s, steps);
      double worst = 0.0;
      for (std::size_t n = steps; n >= 2; --n) {
        const double t = grid.time(n), tp = grid.time(n - 1);
        double prev = -1.0;
        for (double g : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
          const double e = eta_from_gamma(s, t, tp, g);
          CHECK(e >= prev);
          prev = e;
        }
        const double emax = eta_max(s, tp);
        CHECK(eta_from_gamma(s, t, tp, 64.0) == doctest::Approx(emax).epsilon(1e-14));
        worst = std::max(worst, (emax - eta_from_gamma(s, t, tp, 8.0)) / emax);
      }
      CAPTURE(s.name());
      CAPTURE(steps);
      CHECK(worst < 1e-3);
    }
  }
}

TEST_CASE("eta from gamma against direct evaluation") {
  // DDBM at t = 2, t' = 1.5: sigma = t, sigma_bar = sqrt(6.25 - t^2).
  const Schedule s = Schedule::ddbm_ve();
  const double sb = std::sqrt(6.25 - 4.0), sbp = std::sqrt(6.25 - 2.25);
  const double r = 1.5 * sb / (sbp * 2.0);
  const double emax = 1.5 * sbp / 2.5;
  CHECK(eta_from_gamma(s, 2.0, 1.5, 1.3) ==
        doctest::Approx(emax * std::sqrt(1.0 - std::pow(r, 2.0 * 1.69))).epsilon(1e-14));
  const StepCoefficients c = step_coeffs(s, 2.0, 1.5, Stochasticity::from_gamma(1.3));
  const StepCoefficients e = step_coeffs_eta(s, 2.0, 1.5, c.eta);
  CHECK(e.a == doctest::Approx(c.a).epsilon(1e-12));
  CHECK(e.b == doctest::Approx(c.b).epsilon(1e-12));
  CHECK(e.c == doctest::Approx(c.c).epsilon(1e-12));
}

TEST_CASE("step coefficient domain errors") {
  const Schedule s = Schedule::i2sb();
  CHECK_THROWS_AS(step_coeffs(s, 0.5, 0.5, Stochasticity::eta_max()), DomainError);
  CHECK_THROWS_AS(step_coeffs(s, 0.4, 0.5, Stochasticity::eta_max()), DomainError);
  CHECK_THROWS_AS(step_coeffs(s, 1.5, 0.5, Stochasticity::eta_max()), DomainError);
  CHECK_THROWS_AS(step_coeffs(s, 0.6, 0.5, Stochasticity::from_gamma(-1.0)), DomainError);
  CHECK_THROWS_AS(step_coeffs_eta(s, 0.6, 0.5, 1.01 * eta_max(s, 0.5)), DomainError);
  CHECK_NOTHROW(step_coeffs_eta(s, 0.6, 0.5, eta_max(s, 0.5)));
}

TEST_CASE("reverse step examples") {
  const Schedule s = Schedule::ddbm_ve();
  SUBCASE("deterministic step preserves a common value") {
    const ImageGrid v(3, 3, 1.0, 0.7);
    const StepCoefficients c = step_coeffs(s, 1.0, 0.8, Stochasticity::from_gamma(0.0));
    const ImageGrid out = reverse_step(v, v, v, c, RandomStream(1, StreamTag::test));
    for (double x : out.values()) CHECK(x == doctest::Approx(0.7).epsilon(1e-14));
  }
  SUBCASE("maximal noise reproduces forward sampling at t'") {
    const std::size_t n = 100000;
    const double t = 1.6, tp = 1.2;
    const StepCoefficients c = step_coeffs(s, t, tp, Stochasticity::eta_max());
    const ImageGrid xt(1, n, 1.0, test::normals(n, 5));
    const ImageGrid out = reverse_step(xt, constant_image(n, 2.0), constant_image(n, -1.0), c,
                                       RandomStream(6, StreamTag::test));
    const double st2 = s.sigma_T2();
    CHECK(within_se(moments(out.values()),
                    (s.sigma_bar2(tp) * 2.0 - s.sigma2(tp)) / st2,
                    s.sigma2(tp) * s.sigma_bar2(tp) / st2, static_cast<double>(n), 4.0));
  }
  SUBCASE("one step with the exact clean image preserves the bridge marginal") {
    // X_t ~ q(X_t | x0, xfbp); one step with x0p = x0 gives q(X_t' | x0, xfbp).
    const std::size_t n = 100000;
    for (double g : {0.5, 2.0}) {
      const double t = 2.0, tp = 0.9;
      const ImageGrid x0 = constant_image(n, 0.3), xf = constant_image(n, 1.1);
      const ImageGrid xt = forward_sample(x0, xf, t, s, RandomStream(7, StreamTag::forward_sample));
      const StepCoefficients c = step_coeffs(s, t, tp, Stochasticity::from_gamma(g));
      const ImageGrid out = reverse_step(xt, x0, xf, c, RandomStream(8, StreamTag::test));
      const double st2 = s.sigma_T2();
      CAPTURE(g);
      CHECK(within_se(moments(out.values()),
                      (s.sigma_bar2(tp) * 0.3 + s.sigma2(tp) * 1.1) / st2,
                      s.sigma2(tp) * s.sigma_bar2(tp) / st2, static_cast<double>(n), 4.0));
    }
  }
  SUBCASE("scalar world, one step T to 0 with the exact x0p gives the posterior mean") {
    const GaussianWorld w = mc::scalar_world(1.3, 0.5, 0.4, 2.0, 0.5, 1.0);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.2);
    const auto run = mc::run_world(w, y, s, 1, Stochasticity::from_gamma(1.0), 1, 1000, 9);
    const auto post = exact_posterior(w, y);
    CHECK(run.final.mean(0) == doctest::Approx(post.mean(0)).epsilon(1e-12));
    CHECK(run.final.var(0) == doctest::Approx(0.0));
  }
  SUBCASE("shape mismatch") {
    const StepCoefficients c{1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(reverse_step(ImageGrid(2, 2), ImageGrid(2, 3), ImageGrid(2, 2), c,
                                 RandomStream(1, StreamTag::test)),
                    DomainError);
  }
}

TEST_CASE("two steps with a constant prediction equal one step") {
  // Mean weights on (x0, X_t, xfbp) and noise variance of the composition.
  for (const Schedule& s : both_schedules()) {
    const double T = s.horizon();
    const double t = 0.9 * T, tm = 0.55 * T, tp = 0.2 * T;
    for (const Stochasticity noise :
         {Stochasticity::from_gamma(0.0), Stochasticity::from_gamma(0.7),
          Stochasticity::from_gamma(3.0), Stochasticity::eta_max()}) {
      const StepCoefficients c1 = step_coeffs(s, t, tm, noise);
      const StepCoefficients c2 = step_coeffs(s, tm, tp, noise);
      const StepCoefficients d = step_coeffs(s, t, tp, noise);
      CHECK(std::abs(c2.a + c2.b * c1.a - d.a) < 1e-10);
      CHECK(std::abs(c2.b * c1.b - d.b) < 1e-10);
      CHECK(std::abs(c2.b * c1.c + c2.c - d.c) < 1e-10);
      CHECK(std::abs(c2.b * c2.b * c1.eta * c1.eta + c2.eta * c2.eta - d.eta * d.eta) < 1e-10);
    }
    // The deterministic composition on images.
    const ImageGrid xt(4, 4, 1.0, test::normals(16, 10));
    const ImageGrid x0(4, 4, 1.0, test::normals(16, 11));
    const ImageGrid xf(4, 4, 1.0, test::normals(16, 12));
    const RandomStream rng(1, StreamTag::test);
    const Stochasticity ode = Stochasticity::from_gamma(0.0);
    const ImageGrid two = reverse_step(reverse_step(xt, x0, xf, step_coeffs(s, t, tm, ode), rng),
                                       x0, xf, step_coeffs(s, tm, tp, ode), rng);
    const ImageGrid one = reverse_step(xt, x0, xf, step_coeffs(s, t, tp, ode), rng);
    CHECK(test::max_abs_diff(two.data(), one.data()) < 1e-10);
  }
}

TEST_CASE("single step with the FBP as prediction returns the FBP") {
  const ImageGrid xf(8, 8, 1.0, test::normals(64, 13));
  const AffinePredictor pred({{0.0, 0.0, 1.0}});
  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.noise = Stochasticity::from_gamma(0.0);
  cfg.k_x = SamplerConfig::kNoConsistency;
  const IdentityOperator A(64);
  const ImageGrid out = run_sampler(std::vector<double>(64, 0.0), A, xf, pred, cfg);
  CHECK(test::max_abs_diff(out.data(), xf.data()) < 1e-14);
}

TEST_CASE("sampler determinism and seeding") {
  const FanBeamGeometry g = test::toy_geometry();
  const IncompletenessMask m = IncompletenessMask::full(g);
  const ProjectionOperator A(g, m);
  const ImageGrid xf(16, 16, g.image_pixel_size, test::normals(256, 14));
  const auto y = test::normals(A.rows(), 15);
  const GaussianPredictor pred(Schedule::i2sb(), 0.05, blur_z_map(16, 16, 1.0));
  SamplerConfig cfg;
  cfg.cg_iterations = 5;
  cfg.k_x = 0.1;
  cfg.seed = 99;
  SUBCASE("gamma = 0") {
    cfg.noise = Stochasticity::from_gamma(0.0);
    const ImageGrid a = run_sampler(y, A, xf, pred, cfg);
    CHECK(a == run_sampler(y, A, xf, pred, cfg));
    cfg.seed = 100;
    CHECK(a == run_sampler(y, A, xf, pred, cfg));
  }
  SUBCASE("stochastic") {
    const ImageGrid a = run_sampler(y, A, xf, pred, cfg);
    CHECK(a == run_sampler(y, A, xf, pred, cfg));
    CHECK(!(a == run_sampler(y, A, xf, pred, cfg, 1)));
    cfg.seed = 100;
    CHECK(!(a == run_sampler(y, A, xf, pred, cfg)));
  }
}

TEST_CASE("disabled consistency is the image-domain bridge") {
  const FanBeamGeometry g = test::toy_geometry();
  const ProjectionOperator A(g, IncompletenessMask::full(g));
  const ImageGrid xf(16, 16, g.image_pixel_size, test::normals(256, 16));
  const auto y = test::normals(A.rows(), 17);
  const GaussianPredictor pred(Schedule::ddbm_ve(), 0.05, blur_z_map(16, 16, 1.0));
  SamplerConfig base;
  base.schedule = Schedule::ddbm_ve();
  base.seed = 3;
  base.k_x = 0.2;
  base.cg_iterations = 0;
  SamplerConfig inf = base;
  inf.k_x = SamplerConfig::kNoConsistency;
  inf.cg_iterations = 7;
  SamplerReport r0, r1;
  const ImageGrid a = run_sampler(y, A, xf, pred, base, 0, {}, &r0);
  CHECK(a == run_sampler(y, A, xf, pred, inf, 0, {}, &r1));
  CHECK(r0.predictor_calls == base.steps);
  SamplerConfig dc = base;
  dc.cg_iterations = 5;
  CHECK(!(a == run_sampler(y, A, xf, pred, dc)));
}

TEST_CASE("skipping consistency on the last step and warm starts") {
  const FanBeamGeometry g = test::toy_geometry();
  const ProjectionOperator A(g, IncompletenessMask::full(g));
  const ImageGrid xf(16, 16, g.image_pixel_size, test::normals(256, 18));
  const auto y = test::normals(A.rows(), 19);
  const GaussianPredictor pred(Schedule::i2sb(), 0.05, blur_z_map(16, 16, 1.0));
  SamplerConfig cfg;
  cfg.cg_iterations = 3;
  cfg.noise = Stochasticity::from_gamma(0.0);
  const ImageGrid a = run_sampler(y, A, xf, pred, cfg);
  cfg.skip_dc_last_step = true;
  const ImageGrid b = run_sampler(y, A, xf, pred, cfg);
  CHECK(!(a == b));
  cfg.skip_dc_last_step = false;
  cfg.cg_start = CgStart::previous_solution;
  const ImageGrid c = run_sampler(y, A, xf, pred, cfg);
  CHECK(!(a == c));
  CHECK(c.all_finite());
}

TEST_CASE("non-finite state aborts with the step index") {
  const ImageGrid xf(4, 4, 1.0, 1.0);
  SamplerConfig cfg;
  cfg.steps = 10;
  cfg.k_x = SamplerConfig::kNoConsistency;
  const IdentityOperator A(16);
  // Predictions turn NaN below t = 0.55, first reached at step n = 5 (t = 0.5).
  const NanAfter pred(0.55);
  try {
    run_sampler(std::vector<double>(16, 0.0), A, xf, pred, cfg);
    FAIL("expected a NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() == 5);
  }
}

TEST_CASE("sampler configuration validation") {
  const ImageGrid xf(4, 4, 1.0, 1.0);
  const IdentityPredictor pred;
  const IdentityOperator A(16);
  const std::vector<double> y(16, 0.0);
  SamplerConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS_AS(run_sampler(y, A, xf, pred, cfg), DomainError);
  cfg.steps = 4;
  cfg.k_x = -1.0;
  CHECK_THROWS_AS(run_sampler(y, A, xf, pred, cfg), DomainError);
  cfg.k_x = 0.0;
  cfg.noise = Stochasticity::from_gamma(-0.5);
  CHECK_THROWS_AS(run_sampler(y, A, xf, pred, cfg), DomainError);
  cfg.noise = Stochasticity::eta_max();
  const IdentityOperator wrong(9);
  CHECK_THROWS_AS(run_sampler(y, wrong, xf, pred, cfg), DomainError);
}

TEST_CASE("scalar worlds: Monte Carlo against exact discrete-time moments") {
  // No discretization bias enters this comparison, only sampling noise.
  const Schedule s = Schedule::ddbm_ve();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GaussianWorld w = GaussianWorld::random(1, 1, 200 + seed, 1.0 + seed, 0.5 + 0.5 * seed);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.3 * static_cast<double>(seed) - 0.5);
    for (const Stochasticity noise : {Stochasticity::from_gamma(1.0), Stochasticity::eta_max()}) {
      const auto run = mc::run_world(w, y, s, 50, noise, 1, 50000, 300 + seed);
      const auto exact = mc::discrete_output_moments(w, y, s, 50, noise);
      CAPTURE(seed);
      CHECK(mc::max_z(run.final, exact.mean, exact.cov.diagonal(), 50000) < 5.0);
    }
  }
}

TEST_CASE("scalar worlds: marginals track the forward process, error shrinks with N") {
  const Schedule s = Schedule::ddbm_ve();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GaussianWorld w = GaussianWorld::random(1, 1, 400 + seed, 1.0 + seed, 1.0);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.1 * static_cast<double>(seed));
    const Stochasticity noise = Stochasticity::from_gamma(0.5);
    std::vector<double> z, bias;
    for (std::size_t steps : {25, 100, 400}) {
      std::vector<std::size_t> obs;
      for (std::size_t k = 1; k <= 5; ++k) obs.push_back(steps * k / 6);
      const auto run = mc::run_world(w, y, s, steps, noise, 1, 20000, 500 + seed, obs);
      const auto d = mc::discrepancy(run, w, y, s, steps, 20000);
      z.push_back(d.overall());
      // Exact discrete bias of the final variance, relative.
      const auto exact = mc::discrete_output_moments(w, y, s, steps, noise);
      const auto post = exact_posterior(w, y);
      bias.push_back(std::abs(exact.cov(0, 0) - post.cov(0, 0)) / post.cov(0, 0));
      if (steps == 400) {
        CAPTURE(seed);
        CHECK(d.overall() < 5.0);
      }
      CHECK(std::abs(exact.mean(0) - post.mean(0)) < 1e-10);
    }
    CAPTURE(seed);
    CHECK(z[0] > z[2]);
    // First order in 1/N: four times the steps, about a quarter of the bias.
    CHECK(bias[2] < 0.35 * bias[1]);
    CHECK(bias[1] < 0.35 * bias[0]);
  }
}

TEST_CASE("d = 16 world: posterior moments after 200 steps") {
  const Schedule s = Schedule::ddbm_ve();
  const GaussianWorld w = mc::structured_world_16(101);
  const Eigen::VectorXd y = w.A * w.z() + Eigen::VectorXd::Constant(8, 0.3);
  const Stochasticity noise = Stochasticity::from_gamma(0.5);
  const std::size_t n = 20000;
  const auto run = mc::run_world(w, y, s, 200, noise, 4, n, 9, {40, 80, 120, 160, 190});
  const auto d = mc::discrepancy(run, w, y, s, 200, n);
  CHECK(d.final_z < 5.0);
  CHECK(d.marginal_z < 5.0);
  // Four CG steps give the exact x0p: compare against the exact propagation
  // with a dense solve.
  const auto exact = mc::discrete_output_moments(w, y, s, 200, noise);
  CHECK(mc::max_z(run.final, exact.mean, exact.cov.diagonal(), n) < 5.0);
}
