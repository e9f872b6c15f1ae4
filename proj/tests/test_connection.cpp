#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace ahx;
using namespace ahx::test;

namespace {

// k = (1 + r) I with constant profile
std::shared_ptr<const ProjectiveModel> linear_k() { return model_of("even_quadratic", 2, 1.0, 0.0); }

}  // namespace

TEST_CASE("compactified connection in the even chart") {
  SUBCASE("hyperbolic: Γ⁰_αβ = 2δ, all else 0") {
    const Christoffel G = hat_christoffel(*model_of("hyperbolic"), vec({0.3, 0.1, -0.2}));
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double expect = (k == 0 && i > 0 && i == j) ? 2.0 : 0.0;
          CHECK(G(k, i, j) == doctest::Approx(expect));
        }
  }
  SUBCASE("k = (1 + r) I at r = 0 and r = 1") {
    const auto m = linear_k();
    const Christoffel G0 = hat_christoffel(*m, vec({0.0, 0.0, 0.0}));
    CHECK(G0(0, 1, 1) == doctest::Approx(2.0));
    CHECK(G0(1, 0, 1) == doctest::Approx(0.5));
    CHECK(G0(2, 2, 0) == doctest::Approx(0.5));
    const Christoffel G1 = hat_christoffel(*m, vec({1.0, 0.0, 0.0}));
    CHECK(G1(0, 2, 2) == doctest::Approx(2.0));
    CHECK(G1(1, 0, 1) == doctest::Approx(0.25));
    CHECK(G1(0, 1, 2) == doctest::Approx(0.0));
  }
  SUBCASE("symmetry in the lower indices at random points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ur(0.0, 0.8), uy(-0.5, 0.5);
    for (const char* name : {"hyperbolic", "even_quadratic", "n5_bump", "n3_bump"}) {
      const auto f = field_of(name);
      for (int i = 0; i < 1000; ++i) {
        Christoffel G;
        f->eval(vec({ur(rng), uy(rng), uy(rng)}), G);
        CHECK(G.max_asymmetry() == 0.0);
      }
    }
  }
}

TEST_CASE("projective difference to the Levi-Civita connection") {
  SUBCASE("r = 1: D⁰₀₀ = 1, D^γ_0β = ½δ") {
    const auto pd = projective_difference(*model_of("hyperbolic"), vec({1.0, 0.0, 0.0}));
    CHECK(pd.D(0, 0, 0) == doctest::Approx(1.0));
    CHECK(pd.D(1, 0, 1) == doctest::Approx(0.5));
    CHECK(pd.D(2, 2, 0) == doctest::Approx(0.5));
  }
  SUBCASE("hyperbolic at r = 0.25: Γ̂ matches Levi-Civita + D") {
    const auto pd = projective_difference(*model_of("hyperbolic"), vec({0.25, 0.1, 0.0}));
    CHECK(pd.residual <= 1e-6);
  }
  SUBCASE("D⁰₀₀ = 1/r diverges while Γ̂ stays bounded") {
    const auto m = model_of("even_quadratic");
    for (double r : {1e-2, 1e-4, 1e-6}) {
      const auto pd = projective_difference(*m, vec({r, 0.0, 0.1}));
      CHECK(pd.D(0, 0, 0) * r == doctest::Approx(1.0));
      CHECK(max_abs(hat_christoffel(*m, vec({r, 0.0, 0.1}))) < 10.0);
    }
  }
}

TEST_CASE("connection split") {
  SUBCASE("even model: B vanishes and Γ̄ = Γ̂") {
    const auto split = split_connection(model_of("even_quadratic"));
    const Vec z = vec({0.2, 0.1, 0.3});
    Christoffel bar, b;
    split->parts(z, bar, b);
    CHECK(max_abs(b) == 0.0);
    CHECK(bar.max_abs_diff(hat_christoffel(split->model(), z)) < 1e-14);
  }
  SUBCASE("hyperbolic: Γ̄⁰_αβ = 2δ, B = 0") {
    const auto split = split_connection(model_of("hyperbolic"));
    Christoffel bar, b;
    split->parts(vec({0.4, 0.0, 0.0}), bar, b);
    CHECK(bar(0, 1, 1) == doctest::Approx(2.0));
    CHECK(bar(0, 1, 2) == doctest::Approx(0.0));
    CHECK(max_abs(b) == 0.0);
  }
  SUBCASE("N = 5: perturbation of Γ̂⁰ is -3 r^{5/2} q δ") {
    const auto fam = make_family(spec("n5_bump"));
    const auto split = split_connection(to_even_structure(*fam));
    const Vec y = vec({0.1, 0.0});
    const double q = fam->h(1.0, y)(0, 0) - 1.0;
    for (double r : {1e-2, 1e-3, 1e-4}) {
      const Vec z = vec({r, y[0], y[1]});
      Christoffel bar, b;
      const double w = split->parts(z, bar, b);
      CHECK(w == doctest::Approx(std::pow(r, 1.5)));
      CHECK(w * b(0, 1, 1) == doctest::Approx(-3.0 * std::pow(r, 2.5) * q).epsilon(1e-9));
      CHECK(std::abs(w * b(0, 1, 2)) < 1e-15);
      // Γ̄ + w B reproduces Γ̂
      Christoffel sum = bar;
      sum.add_scaled(b, w);
      CHECK(sum.max_abs_diff(hat_christoffel(split->model(), z)) < 1e-12);
    }
  }
  SUBCASE("N = 3 is rejected") {
    try {
      split_connection(model_of("n3_bump"));
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRejected);
      CHECK(std::string(e.what()).find("N=3") != std::string::npos);
    }
  }
}

TEST_CASE("extension past the boundary") {
  SUBCASE("hyperbolic at r = -0.1") {
    const auto f = extend_past_boundary(split_connection(model_of("hyperbolic")));
    Christoffel G;
    f->eval(vec({-0.1, 0.0, 0.2}), G);
    CHECK(G(0, 1, 1) == doctest::Approx(2.0));
    CHECK(G(0, 2, 2) == doctest::Approx(2.0));
    CHECK(G(1, 0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("N = 5 at r = -0.1 equals Γ̄") {
    const auto split = split_connection(model_of("n5_bump"));
    const auto f = extend_past_boundary(split);
    const Vec z = vec({-0.1, 0.05, 0.0});
    Christoffel G, bar;
    f->eval(z, G);
    split->gamma_bar(z, bar);
    CHECK(G.max_abs_diff(bar) == 0.0);
  }
  SUBCASE("N = 5: one-sided r-derivatives agree at r = 0") {
    const auto f = extend_past_boundary(split_connection(model_of("n5_bump")));
    auto at = [&](double r) {
      Christoffel G;
      f->eval(vec({r, 0.1, -0.05}), G);
      return G;
    };
    // the r^{3/2}-weighted B terms make one-sided quotients converge like √h
    auto jump = [&](double h) {
      const Christoffel g0 = at(0.0), gp = at(h), gm = at(-h);
      double worst = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            const double right = (gp(k, i, j) - g0(k, i, j)) / h;
            const double left = (g0(k, i, j) - gm(k, i, j)) / h;
            worst = std::max(worst, std::abs(right - left));
          }
      return worst;
    };
    const double j6 = jump(1e-6), j8 = jump(1e-8);
    CHECK(j8 < 1e-3);
    CHECK(j8 < j6 / 5.0);
  }
}

TEST_CASE("background metric and unit velocities") {
  CHECK((background_metric(3) - Mat::Identity(3, 3)).norm() == 0.0);
  CHECK(is_unit_velocity(vec({0.6, 0.0, 0.8})));
  CHECK_FALSE(is_unit_velocity(vec({1.0, 1.0, 0.0})));
  CHECK_THROWS_AS(require_nonzero_velocity(vec({0.0, 0.0, 0.0})), Error);
  const Vec v = vec({0.3, 3.0, 4.0});
  CHECK(v.tail(2).norm() == doctest::Approx(5.0));
}

TEST_CASE("AH Levi-Civita field matches finite differences of the metric") {
  const auto fam = make_family(spec("n5_bump"));
  const AhMetricField f(fam);
  const Vec z = vec({0.3, 0.1, -0.2});
  Christoffel G;
  f.eval(z, G);
  const Christoffel fd = levi_civita_fd([&](const Vec& p) { return evaluate_ah_metric(*fam, p[0], p.tail(2)); }, z, 1e-4);
  CHECK(G.max_abs_diff(fd) < 1e-7 * std::max(1.0, max_abs(G)));
}
