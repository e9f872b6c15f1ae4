#include "ahx/xray.hpp"

#include "helpers.hpp"

#include <cmath>

using namespace ahx;
using namespace ahx::test;

TEST_CASE("X-ray transform of the compactified connection") {
  const auto hyp = field_of("hyperbolic");
  SUBCASE("f = 1 gives the exit-time span 0.2") {
    const XrayResult r = xray_connection(*hyp, constant_function(2, 1.0), vec({0.01, 0.0, 0.0}), vec({0.0, 1.0, 0.0}));
    CHECK(r.value == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(r.value == doctest::Approx(r.tau_plus - r.tau_minus).epsilon(1e-12));
  }
  SUBCASE("f = 1 on an N = 5 geodesic gives τ+ − τ−") {
    const auto f5 = field_of("n5_bump");
    const XrayResult r = xray_connection(*f5, constant_function(2, 1.0), vec({0.02, 0.1, 0.0}), vec({0.1, 0.6, 0.8}));
    CHECK(r.value == doctest::Approx(r.tau_plus - r.tau_minus).epsilon(1e-10));
  }
  SUBCASE("support away from the path gives 0") {
    const TestFunction f = in_r_coordinates(bump_function(2, 3, 0.5, vec({2.0, 2.0}), 0.3));
    CHECK(xray_connection(*hyp, f, vec({0.01, 0.0, 0.0}), vec({0.0, 1.0, 0.0})).value == 0.0);
  }
  SUBCASE("linearity") {
    const TestFunction f = in_r_coordinates(bump_function(2, 3, 0.5, vec({0.0, 0.0}), 0.6));
    const TestFunction g = in_r_coordinates(bump_function(2, 2, 0.4, vec({0.1, 0.0}), 0.3));
    const Vec z = vec({0.05, 0.0, 0.0}), v = vec({0.1, 0.6, 0.3});
    const double a = 2.5, b = -0.7;
    const double lhs = xray_connection(*hyp, linear_combination(a, f, b, g), z, v).value;
    const double rhs = a * xray_connection(*hyp, f, z, v).value + b * xray_connection(*hyp, g, z, v).value;
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
  SUBCASE("tangent geodesics are excluded") {
    CHECK_THROWS_AS(xray_connection(*hyp, constant_function(2, 1.0), vec({0.0, 0.0, 0.0}), vec({0.0, 1.0, 0.0})),
                    Error);
  }
}

TEST_CASE("X-ray transform along AH geodesics") {
  const auto fam = make_family(spec("hyperbolic"));
  SUBCASE("f = 0") {
    const AhGeodesic g{vec({0.3, 0.0, 0.0}), unit_ah_velocity(*fam, vec({0.3, 0.0, 0.0}), vec({0.2, 1.0, 0.0}))};
    const XrayAhResult r = xray_ah(fam, constant_function(2, 0.0), g);
    CHECK(r.value == 0.0);
  }
  SUBCASE("rho^2 bump on a vertical geodesic") {
    // ρ(t) = ρ0 e^{-t}; ∫ ρ²(1 − ρ²/ρs²)⁴ dt = ρs²/10
    const double rs = 0.5;
    const TestFunction f = bump_function(2, 2, rs, vec({0.0, 0.0}), 0.5);
    const AhGeodesic g{vec({0.3, 0.0, 0.0}), vec({-0.3, 0.0, 0.0})};
    const XrayAhResult r = xray_ah(fam, f, g);
    CHECK(r.value == doctest::Approx(rs * rs / 10.0).epsilon(1e-8));
    CHECK(r.tail_bound <= 1e-10);
  }
  SUBCASE("oblique geodesic meets the tail tolerance") {
    const TestFunction f = bump_function(2, 2, 0.5, vec({0.0, 0.0}), 0.5);
    const AhGeodesic g{vec({0.3, 0.0, 0.0}), unit_ah_velocity(*fam, vec({0.3, 0.0, 0.0}), vec({-0.2, 1.0, 0.0}))};
    const XrayAhResult r = xray_ah(fam, f, g);
    CHECK(std::isfinite(r.value));
    CHECK(r.tail_bound <= 1e-10);
  }
  SUBCASE("no decay is reported as divergent") {
    const AhGeodesic g{vec({0.3, 0.0, 0.0}), unit_ah_velocity(*fam, vec({0.3, 0.0, 0.0}), vec({0.0, 1.0, 0.0}))};
    const XrayAhResult r = xray_ah(fam, constant_function(2, 1.0), g);
    CHECK(r.diverges);
    CHECK_FALSE(r.warning.empty());
  }
}

TEST_CASE("relation between the two transforms") {
  const auto fam = make_family(spec("hyperbolic"));
  const TestFunction f = bump_function(2, 3, 0.5, vec({0.0, 0.0}), 0.6);
  const auto geos = sample_local_geodesics(fam, 3, 5);
  REQUIRE(geos.size() == 3);
  for (const auto& g : geos) {
    const RelationReport r1 = verify_relation(fam, f, g, 1.0);
    CHECK(r1.residual <= 1e-6 * std::max(1.0, std::abs(r1.I)));
    const RelationReport r2 = verify_relation(fam, f, g, 2.0);
    CHECK(r2.residual <= 1e-6 * std::max(1.0, std::abs(r2.I)));
    CHECK(r2.I == doctest::Approx(r1.I).epsilon(1e-10));
  }
  const RelationReport z = verify_relation(fam, constant_function(2, 0.0), geos[0], 1.0);
  CHECK(z.residual == 0.0);
}

TEST_CASE("local geodesic sampling is deterministic") {
  const auto fam = make_family(spec("n5_bump"));
  const auto a = sample_local_geodesics(fam, 4, 9), b = sample_local_geodesics(fam, 4, 9);
  REQUIRE(a.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i].z0 == b[i].z0);
    CHECK(a[i].v0 == b[i].v0);
    const Mat g = evaluate_ah_metric(*fam, a[i].z0[0], a[i].z0.tail(2));
    CHECK(a[i].v0.dot(g * a[i].v0) == doctest::Approx(1.0));
  }
}
