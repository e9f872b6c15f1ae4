#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace ahx;
using namespace ahx::test;

TEST_CASE("AH metric in normal form") {
  SUBCASE("identity family at rho = 1/2 is diag(4, 4, 4)") {
    const auto fam = make_family(spec("hyperbolic"));
    const Mat g = evaluate_ah_metric(*fam, 0.5, vec({0.1, -0.2}));
    CHECK((g - 4.0 * Mat::Identity(3, 3)).norm() < 1e-14);
  }
  SUBCASE("entries diverge like rho^-2") {
    const auto fam = make_family(spec("hyperbolic"));
    for (double rho : {1e-2, 1e-4, 1e-6}) {
      CHECK(evaluate_ah_metric(*fam, rho, vec({0.0, 0.0}))(0, 0) * rho * rho == doctest::Approx(1.0));
    }
  }
  SUBCASE("(1 + rho^2) identity at rho = 1 is diag(1, 2, 2)") {
    FamilySpec fs = spec("even_quadratic", 2, 1.0, 0.0);
    fs.collar_depth = 2.0;
    const Mat g = evaluate_ah_metric(*make_family(fs), 1.0, vec({0.3, 0.3}));
    CHECK(g(0, 0) == doctest::Approx(1.0));
    CHECK(g(1, 1) == doctest::Approx(2.0));
    CHECK(g(2, 2) == doctest::Approx(2.0));
    CHECK(std::abs(g(0, 1)) + std::abs(g(1, 2)) == 0.0);
  }
  SUBCASE("rho^2 g equals blockdiag(1, h) and is symmetric") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.9), uy(-0.5, 0.5);
    for (const char* name : {"hyperbolic", "even_quadratic", "n5_bump", "n3_bump"}) {
      const auto fam = make_family(spec(name));
      for (int k = 0; k < 50; ++k) {
        const double rho = u(rng);
        const Vec y = vec({uy(rng), uy(rng)});
        const Mat g = evaluate_ah_metric(*fam, rho, y);
        CHECK((g - g.transpose()).norm() == 0.0);
        Mat expect = Mat::Zero(3, 3);
        expect(0, 0) = 1.0;
        expect.bottomRightCorner(2, 2) = fam->h(rho, y);
        CHECK((rho * rho * g - expect).norm() < 1e-13);
      }
    }
  }
  SUBCASE("rho outside (0, collar) is a domain error") {
    const auto fam = make_family(spec("hyperbolic"));
    CHECK_THROWS_AS(evaluate_ah_metric(*fam, 0.0, vec({0.0, 0.0})), Error);
    CHECK_THROWS_AS(evaluate_ah_metric(*fam, 1.5, vec({0.0, 0.0})), Error);
  }
}

TEST_CASE("even structure r = rho^2") {
  const Vec y = vec({0.2, -0.1});
  SUBCASE("hyperbolic: k1 = I, k2 = 0") {
    const auto m = model_of("hyperbolic");
    ModelJet j;
    m->jet(0.3, y, j);
    CHECK((j.k1 - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(j.k2.norm() == 0.0);
    CHECK(m->order() == 0);
  }
  SUBCASE("N = 5 bump: k1 = I, k2 = q(y) I") {
    const auto fam = make_family(spec("n5_bump"));
    const auto m = to_even_structure(*fam);
    ModelJet j;
    m->jet(0.04, y, j);
    const double q = (fam->h(1.0, y)(0, 0) - 1.0);
    CHECK((j.k1 - Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK((j.k2 - q * Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK(m->order() == 5);
    // k(r) = h(√r)
    CHECK((m->k(0.04, y) - fam->h(0.2, y)).norm() < 1e-14);
  }
  SUBCASE("(1 + rho^2) I: k1 = (1 + r) I, k2 = 0") {
    const auto m = model_of("even_quadratic", 2, 1.0, 0.0);
    ModelJet j;
    m->jet(0.3, y, j);
    CHECK((j.k1 - 1.3 * Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK(j.k2.norm() == 0.0);
  }
}

TEST_CASE("evenness check") {
  SUBCASE("constant family: all odd derivatives vanish") {
    const auto rep = check_evenness(*make_family(spec("hyperbolic")), 7);
    CHECK(rep.passed);
    for (const auto& o : rep.orders) CHECK(o.norm == doctest::Approx(0.0));
  }
  SUBCASE("(1 + rho^3) I fails at N = 5 with m = 3 norm near 6") {
    const auto rep = check_evenness(*make_family(spec("n3_bump", 2, 1.0, 0.0)), 5);
    CHECK_FALSE(rep.passed);
    bool seen = false;
    for (const auto& o : rep.orders) {
      if (o.order == 3) {
        seen = true;
        // operator norm of 6·I₂
        CHECK(o.norm == doctest::Approx(6.0).epsilon(1e-3));
      }
    }
    CHECK(seen);
  }
  SUBCASE("(1 + rho^5) I passes at N = 5") {
    const auto rep = check_evenness(*make_family(spec("n5_bump", 2, 1.0, 0.0)), 5);
    CHECK(rep.passed);
    for (const auto& o : rep.orders) CHECK(o.norm < rep.tolerance);
  }
}

TEST_CASE("pullback density weight") {
  CollarGridFunction f;
  for (int i = 0; i < 6; ++i) f.rho.push_back(0.1 * i);
  f.y = {vec({0.0}), vec({0.5})};
  auto fill = [&](auto fn) {
    f.values.clear();
    for (double rho : f.rho)
      for (const Vec& y : f.y) f.values.push_back(fn(rho, y[0]));
  };
  SUBCASE("rho^2 maps to 1, including the boundary row") {
    fill([](double rho, double) { return rho * rho; });
    const auto w = pullback_density_weight(f);
    for (double v : w.values) CHECK(v == doctest::Approx(1.0));
    CHECK(w.rho[3] == doctest::Approx(0.09));
  }
  SUBCASE("rho^3 g(y) maps to sqrt(r) g(y)") {
    fill([](double rho, double y) { return rho * rho * rho * (1.0 + y); });
    const auto w = pullback_density_weight(f);
    for (std::size_t i = 1; i < f.rho.size(); ++i) {
      for (std::size_t j = 0; j < f.y.size(); ++j) {
        CHECK(w.at(i, j) == doctest::Approx(std::sqrt(w.rho[i]) * (1.0 + f.y[j][0])));
      }
    }
  }
  SUBCASE("constant 1 maps to 1/r, infinite at r = 0") {
    fill([](double, double) { return 1.0; });
    const auto w = pullback_density_weight(f);
    CHECK(std::isinf(w.at(0, 0)));
    CHECK(w.at(2, 1) == doctest::Approx(25.0));
  }
}

TEST_CASE("finite-difference weights reproduce polynomial derivatives") {
  const std::vector<double> nodes{-2, -1, 0, 1, 2};
  const auto w = fd_weights(0.0, nodes, 1);
  double d = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) d += w[i] * std::pow(nodes[i] + 1.0, 3);
  CHECK(d == doctest::Approx(3.0));
}
