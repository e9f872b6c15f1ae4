#include "ahx/blowup.hpp"

#include "helpers.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace ahx;
using namespace ahx::test;

namespace {

NormalOperatorConfig blowup_config(double eta) {
  NormalOperatorConfig cfg;
  cfg.boundary.eta = eta;
  cfg.grid.n = 2;
  cfg.grid.nx = 8;
  cfg.grid.ny = 8;
  cfg.grid.x_lo = 0.0025;
  cfg.grid.x_hi = 0.1;
  cfg.grid.y_lo = Vec::Constant(2, -0.3);
  cfg.grid.y_hi = Vec::Constant(2, 0.3);
  return cfg;
}

}  // namespace

TEST_CASE("blow-up coordinates") {
  SUBCASE("diagonal") { CHECK(to_blowup(vec({0.1, 0.2, 0.3}), vec({0.1, 0.2, 0.3})).diagonal); }
  SUBCASE("x = x̃ = 0.1, ỹ − y = (0.1, 0)") {
    const BlowupCoords c = to_blowup(vec({0.1, 0.0, 0.0}), vec({0.1, 0.1, 0.0}));
    CHECK_FALSE(c.diagonal);
    CHECK(c.pt.R == doctest::Approx(1.0));
    CHECK(c.pt.theta[0] == doctest::Approx(0.0));
    CHECK(c.pt.theta[1] == doctest::Approx(1.0));
    CHECK(c.pt.theta[2] == doctest::Approx(0.0));
  }
  SUBCASE("right chart is the left chart with the factors swapped") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(0.01, 0.1), uy(-0.1, 0.1);
    for (int i = 0; i < 100; ++i) {
      const Vec z = vec({ux(rng), uy(rng), uy(rng)}), zt = vec({ux(rng), uy(rng), uy(rng)});
      const BlowupCoords r = to_blowup_right(z, zt), l = to_blowup(zt, z);
      CHECK(r.pt.R == doctest::Approx(l.pt.R).epsilon(1e-13));
      CHECK((r.pt.theta - l.pt.theta).norm() < 1e-12);
      const double X = (z[0] - zt[0]) / (zt[0] * zt[0]);
      CHECK(r.pt.R * r.pt.theta[0] == doctest::Approx(X).epsilon(1e-12));
    }
  }
  SUBCASE("round trip on random interior points") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(1e-3, 0.2), uy(-0.5, 0.5), uR(1e-3, 5.0), ut(-1.0, 1.0);
    const double eps = std::numeric_limits<double>::epsilon();
    double worst_point = 0.0, worst_scaled = 0.0;
    int tested = 0;
    for (int i = 0; i < 10000; ++i) {
      Vec th = vec({ut(rng), ut(rng), ut(rng)});
      const BlowupPoint p = make_blowup_point(ux(rng), vec({uy(rng), uy(rng)}), uR(rng), th);
      const Vec zt = p.right();
      if (zt[0] <= 0.0) continue;
      ++tested;
      const BlowupCoords c = to_blowup(p.left(), zt);
      worst_point = std::max(worst_point, (c.pt.right() - zt).norm() / zt.norm());
      // rounding of z̃ perturbs θ by about ε(1 + |ỹ|)/(xR)
      const double cond = eps * (1.0 + zt.norm()) / (p.x * p.R);
      const double err = std::max({std::abs(c.pt.R - p.R) / p.R, (c.pt.theta - p.theta).norm(),
                                   std::abs(c.pt.x - p.x) / p.x});
      worst_scaled = std::max(worst_scaled, err / cond);
    }
    CHECK(tested > 9000);
    CHECK(worst_point <= 1e-12);
    CHECK(worst_scaled <= 8.0);
  }
}

TEST_CASE("defining functions and the density factor") {
  const DefiningFunctions d0 = defining_functions(0.0, 0.0, 0.3);
  CHECK(d0.x01 == doctest::Approx(0.5));
  CHECK(d0.x10 == doctest::Approx(0.5));
  CHECK(d0.x11 == doctest::Approx(4.0));
  const DefiningFunctions d1 = defining_functions(2.0 / 3.0, 3.0, 1.0);
  CHECK(d1.x01 == doctest::Approx(0.75));
  CHECK(d1.x10 == doctest::Approx(0.25));
  CHECK(d1.x11 == doctest::Approx(4.0));
  CHECK(density_factor(2, 0.0, 0.0, 0.7) == doctest::Approx(4.0));
  for (double R : {1e3, 1e5}) CHECK(density_factor(2, 0.0, R, 0.5) * R == doctest::Approx(4.0).epsilon(1e-3));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = 0.2 * u(rng), R = 10.0 * u(rng), X = 2.0 * u(rng) - 1.0;
    const DefiningFunctions d = defining_functions(x, R, X);
    CHECK(d.x01 + d.x10 == doctest::Approx(1.0));
    for (int n : {1, 2, 3}) {
      CHECK(density_factor(n, x, R, X) == doctest::Approx(std::pow(d.x10, -n) * d.x11 * d.x10 * d.x10));
    }
  }
}

TEST_CASE("diagonal limit") {
  const CutoffProfile chi;
  CHECK(diagonal_limit(0.37, vec({0.0, 1.0, 0.0}), chi) == doctest::Approx(0.5));
  CHECK(diagonal_limit(0.1, vec({0.9, 0.3, 0.0}), chi) == 0.0);
  CHECK(diagonal_limit(0.1, vec({1.0, 0.0, 0.0}), chi) == 0.0);
}

TEST_CASE("lifted kernel") {
  const Vec y = vec({0.0, 0.0});
  SUBCASE("hyperbolic: lifted value matches the downstairs kernel") {
    const NormalOperator op(field_of("hyperbolic"), blowup_config(0.02));
    const LiftedKernel lk = lifted_kernel(op, make_blowup_point(0.1, y, 0.5, vec({0.1, 0.9, 0.3})));
    REQUIRE(lk.value != 0.0);
    CHECK(std::abs(lk.value - lk.from_downstairs) <= 1e-8 * std::abs(lk.value));
  }
  SUBCASE("limit at R = 0") {
    const NormalOperator op(field_of("n5_bump"), blowup_config(0.01));
    const Vec th = vec({0.2, 0.9, 0.3});
    const BlowupPoint p = make_blowup_point(0.01, y, 0.0, th);
    CHECK(lifted_kernel(op, p).value == doctest::Approx(diagonal_limit(0.01, p.theta, op.config().chi)));
    const DiagonalFit fit = fit_diagonal_remainder(op, 0.01, y, th);
    CHECK(fit.loglog_slope > 0.8);
    CHECK(std::isfinite(fit.max_ratio));
  }
  SUBCASE("η = 0: both connections give the same lift") {
    const auto split = split_connection(model_of("n5_bump"));
    const NormalOperatorConfig cfg = blowup_config(0.0);
    const NormalOperator hat(extend_past_boundary(split), cfg), bar(std::make_shared<BarField>(split), cfg);
    for (double R : {0.05, 0.3, 1.0}) {
      const BlowupPoint p = make_blowup_point(0.005, y, R, vec({0.2, 0.8, -0.3}));
      CHECK(lifted_kernel(hat, p).value == lifted_kernel(bar, p).value);
    }
    std::vector<BlowupPoint> S;
    for (double R : {0.05, 0.3, 1.0}) S.push_back(make_blowup_point(0.005, y, R, vec({0.2, 0.8, -0.3})));
    const KernelDifferenceReport rep = kernel_difference_diag(hat, bar, S);
    CHECK(rep.sup_abs <= 1e-12);
    CHECK(rep.sup_dx <= 1e-12);
    CHECK(rep.sup_dy <= 1e-12);
  }
  SUBCASE("even model: difference vanishes at positive η") {
    const auto split = split_connection(model_of("even_quadratic"));
    const NormalOperatorConfig cfg = blowup_config(0.01);
    const NormalOperator hat(extend_past_boundary(split), cfg), bar(std::make_shared<BarField>(split), cfg);
    const KernelDifferenceReport rep =
        kernel_difference_diag(hat, bar, {make_blowup_point(0.004, y, 0.3, vec({0.1, 1.0, 0.0}))});
    CHECK(rep.sup_abs == 0.0);
  }
}

TEST_CASE("exponential decay along rays") {
  const auto f = field_of("n5_bump");
  const Vec y = vec({0.0, 0.0});
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.1 + 0.25 * i);
  NormalOperatorConfig c1 = blowup_config(0.01), c2 = c1;
  c2.sigma = 2.0 * c1.sigma;
  const Vec th = vec({0.6, 0.8, 0.0});
  const DecayScan s1 = decay_scan(NormalOperator(f, c1), 0.01, y, th, grid);
  const DecayScan s2 = decay_scan(NormalOperator(f, c2), 0.01, y, th, grid);
  CHECK(s1.slope < 0.0);
  CHECK(s2.slope < s1.slope);
  SUBCASE("rays leaving the cutoff band vanish identically") {
    const DecayScan s = decay_scan(NormalOperator(f, c1), 0.01, y, vec({1.0, 0.0, 0.0}), grid);
    CHECK(s.vanishes_identically);
  }
  SUBCASE("X̂ below one half is rejected") {
    CHECK_THROWS_AS(decay_scan(NormalOperator(f, c1), 0.01, y, vec({0.3, 0.9, 0.0}), grid), Error);
  }
}
