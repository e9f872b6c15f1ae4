#include "ahx/geodesic.hpp"
#include "ahx/normalop.hpp"

#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace ahx;
using namespace ahx::test;

TEST_CASE("geodesic integration") {
  const auto hyp = field_of("hyperbolic");
  SUBCASE("hyperbolic closed form") {
    const Vec z0 = vec({0.05, 0.1, -0.1}), v0 = vec({0.3, 0.4, -0.2});
    const GeodesicPath p = integrate(*hyp, z0, v0, -1.0, 1.0);
    for (double t = -1.0; t <= 1.0; t += 0.125) {
      Vec exact = z0 + t * v0;
      exact[0] -= v0.tail(2).squaredNorm() * t * t;
      CHECK((p.z(t) - exact).norm() < 1e-9);
    }
    CHECK(geodesic_residual(*hyp, p) < 1e-8);
  }
  SUBCASE("flat field: straight lines") {
    const FlatField flat(3);
    const Vec z0 = vec({0.1, 0.2, 0.3}), v0 = vec({-1.0, 0.5, 2.0});
    const GeodesicPath p = integrate(flat, z0, v0, -2.0, 2.0);
    CHECK((p.z(1.5) - (z0 + 1.5 * v0)).norm() < 1e-12);
  }
  SUBCASE("tangent start on the boundary stays outside") {
    const Vec z0 = vec({0.0, 0.0, 0.0}), v0 = vec({0.0, 0.6, 0.8});
    const GeodesicPath p = integrate(*hyp, z0, v0, -1.0, 1.0);
    for (double t : {-0.7, -0.2, 0.3, 0.9}) CHECK(p.z(t)[0] == doctest::Approx(-t * t));
    CHECK(p.excluded);
  }
}

TEST_CASE("exit times") {
  const auto hyp = field_of("hyperbolic");
  SUBCASE("r0 = 0.01, λ = 0, |ω| = 1 gives ±0.1") {
    const GeodesicPath p = integrate(*hyp, vec({0.01, 0.0, 0.0}), vec({0.0, 1.0, 0.0}), -1.0, 1.0);
    const ExitTimes e = exit_times(p);
    CHECK(e.tau_minus == doctest::Approx(-0.1).epsilon(1e-11));
    CHECK(e.tau_plus == doctest::Approx(0.1).epsilon(1e-11));
  }
  SUBCASE("r0 = 0, λ = 1, |ω| = 1 gives 0 and 1") {
    const GeodesicPath p = integrate(*hyp, vec({0.0, 0.0, 0.0}), vec({1.0, 0.0, 1.0}), -2.0, 2.0);
    const ExitTimes e = exit_times(p);
    CHECK(std::abs(e.tau_minus) < 1e-11);
    CHECK(e.tau_plus == doctest::Approx(1.0).epsilon(1e-11));
  }
  SUBCASE("tangent geodesic is excluded") {
    const GeodesicPath p = integrate(*hyp, vec({0.0, 0.0, 0.0}), vec({0.0, 1.0, 0.0}), -1.0, 1.0);
    const ExitTimes e = exit_times(p);
    CHECK(e.excluded);
    CHECK(e.tau_minus == 0.0);
    CHECK(e.tau_plus == 0.0);
  }
}

TEST_CASE("exponential map and its inverse") {
  const auto hyp = field_of("hyperbolic");
  const Vec z = vec({0.03, 0.1, -0.05});
  SUBCASE("flat: exp = z + v, inverse = z̃ - z") {
    const FlatField flat(3);
    const Vec v = vec({0.2, -0.1, 0.3});
    CHECK((exp_map(flat, z, v) - (z + v)).norm() < 1e-12);
    CHECK((inverse_exp(flat, z, z + v).v - v).norm() < 1e-10);
  }
  SUBCASE("hyperbolic closed forms") {
    const Vec v = vec({0.1, 0.2, -0.1});
    Vec expect = z + v;
    expect[0] -= v.tail(2).squaredNorm();
    CHECK((exp_map(*hyp, z, v) - expect).norm() < 1e-10);
    const Vec zt = vec({0.05, 0.2, 0.1});
    const Vec w = zt.tail(2) - z.tail(2);
    const Vec vx = vec({zt[0] - z[0] + w.squaredNorm(), w[0], w[1]});
    const InverseExpResult r = inverse_exp(*hyp, z, zt);
    CHECK((r.v - vx).norm() < 1e-10);
    CHECK(inverse_exp_jacobian_fd(*hyp, z, zt) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("v = 0 and z̃ = z") {
    CHECK((exp_map(*hyp, z, Vec::Zero(3)) - z).norm() == 0.0);
    CHECK(inverse_exp(*hyp, z, z).v.norm() < 1e-12);
  }
  SUBCASE("inverse of exp on the N = 5 model") {
    const auto f = field_of("n5_bump");
    const Vec v = vec({0.05, 0.1, 0.07});
    const Vec zt = exp_map(*f, z, v);
    CHECK((inverse_exp(*f, z, zt).v - v).norm() < 1e-9);
  }
}

TEST_CASE("boundary convexity") {
  const std::vector<Vec> pts{vec({0.0, 0.1, 0.2}), vec({0.0, -0.3, 0.0})};
  const std::vector<Vec> dirs{vec({1.0, 0.0}), vec({0.6, 0.8})};
  for (const char* name : {"hyperbolic", "even_quadratic", "n5_bump", "n3_bump"}) {
    const auto model = model_of(name);
    const auto f = projective_field(model);
    for (const auto& s : convexity_scan(*f, pts, dirs)) {
      const double expect = -2.0 * s.omega.dot(model->k(0.0, s.point.tail(2)) * s.omega);
      CHECK(s.analytic == doctest::Approx(expect).epsilon(1e-12));
      CHECK(s.fd == doctest::Approx(expect).epsilon(1e-6));
      CHECK(s.fd < 0.0);
    }
  }
  SUBCASE("hyperbolic unit ω gives -2, doubled ω gives -8") {
    const auto f = field_of("hyperbolic");
    const auto a = convexity_scan(*f, {vec({0.0, 0.0, 0.0})}, {vec({0.6, 0.8}), vec({1.2, 1.6})});
    CHECK(a[0].analytic == doctest::Approx(-2.0));
    CHECK(a[1].analytic == doctest::Approx(-8.0));
  }
}

TEST_CASE("locality predicate") {
  const auto hyp = field_of("hyperbolic");
  NormalOperatorConfig cfg;
  cfg.boundary.eta = 0.0;
  SUBCASE("tangential start at x = 0.01 stays in x_eta >= 0") {
    const LocalityWitness w = locality_check(*hyp, cfg, vec({0.01, 0.0, 0.0}), vec({0.0, 1.0, 0.0}));
    CHECK(w.precondition_ok);
    CHECK(w.min_x_eta >= 0.0);
  }
  SUBCASE("steep velocity violates the precondition") {
    cfg.loc.C_tilde = 1.0;
    const double x = 0.01;
    const LocalityWitness w = locality_check(*hyp, cfg, vec({x, 0.0, 0.0}), vec({10.0 * std::sqrt(x), 1.0, 0.0}));
    CHECK_FALSE(w.precondition_ok);
    CHECK_FALSE(w.passed);
    CHECK_FALSE(w.reason.empty());
  }
  SUBCASE("purely normal velocity is rejected") {
    CHECK_THROWS_AS(locality_check(*hyp, cfg, vec({0.01, 0.0, 0.0}), vec({1.0, 0.0, 0.0})), Error);
  }
}

TEST_CASE("reparametrization to projective time") {
  // vertical hyperbolic geodesic: ρ(t) = ρ0 e^{-t}, y fixed
  const auto fam = make_family(spec("hyperbolic"));
  const AhMetricField ah(fam);
  const double rho0 = 0.3;
  const GeodesicPath p = integrate(ah, vec({rho0, 0.0, 0.0}), vec({-rho0, 0.0, 0.0}), -0.5, 2.0);
  SUBCASE("τ(t) matches ∫ρ² dt / c") {
    const ProjectivePath pp = reparametrize(p, 1.0);
    for (double t : {-0.4, 0.5, 1.0, 1.9}) {
      const double exact = rho0 * rho0 * (1.0 - std::exp(-2.0 * t)) / 2.0;
      CHECK(pp.tau_of_t(t) == doctest::Approx(exact).epsilon(1e-8));
    }
  }
  SUBCASE("doubling c halves τ") {
    const ProjectivePath p1 = reparametrize(p, 1.0), p2 = reparametrize(p, 2.0);
    for (double t : {-0.3, 0.7, 1.5}) CHECK(p2.tau_of_t(t) == doctest::Approx(0.5 * p1.tau_of_t(t)));
  }
  SUBCASE("constant r gives linear rescaling") {
    // horizontal line at fixed ρ is not a geodesic, so check the local slope dτ/dt = r/c at t = 0
    const ProjectivePath pp = reparametrize(p, 1.0);
    const double h = 1e-4;
    CHECK((pp.tau_of_t(h) - pp.tau_of_t(-h)) / (2 * h) == doctest::Approx(rho0 * rho0).epsilon(1e-6));
  }
}
