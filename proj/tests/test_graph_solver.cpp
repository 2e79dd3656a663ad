#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "capvertex/errors.hpp"
#include "capvertex/geom_core.hpp"
#include "capvertex/graph_solver.hpp"

using namespace capvertex;

namespace {

RectangleProblem equal_angles(double a, double b, double gamma, int n) {
  RectangleProblem p;
  p.a = a;
  p.b = b;
  p.gammas.fill(gamma);
  p.grid_n = n;
  return p;
}

double mean(const Grid2D& u) {
  double s = 0;
  for (double v : u.values) s += v;
  return s / static_cast<double>(u.values.size());
}

}  // namespace

TEST_CASE("compatibility_h") {
  CHECK(compatibility_h(1, 1, {kPi / 3, kPi / 3, kPi / 3, kPi / 3}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(compatibility_h(1, 2, {kPi / 3, kPi / 3, kPi / 3, kPi / 3}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(compatibility_h(1, 1, {kPi / 2, kPi / 2, kPi / 2, kPi / 2}) == 0.0);
  for (auto [a, b] : {std::pair{1.0, 1.0}, {3.0, 2.0}, {0.2, 5.0}})
    CHECK(compatibility_h(a, b, {0.0, kPi / 2, 0.0, kPi / 2}) == 1.0 / b);
  CHECK_THROWS_AS(compatibility_h(0, 1, {}), DomainError);
  CHECK_THROWS_AS(compatibility_h(1, -1, {}), DomainError);
}

TEST_CASE("square against the exact cap") {
  const RectangleProblem p = equal_angles(1, 1, kPi / 3, 64);
  const GraphField sol = solve_rectangle(p);
  const RectangleGrid g = RectangleGrid::from_problem(p);
  CHECK(g.nx == 64);
  CHECK(sol.convergence.final_residual < 1e-10);
  CHECK(std::abs(mean(sol.u)) < 1e-12);
  CHECK(graph_residual(g, sol.u, 1.0).max_abs() < 1e-10);
  const auto exact = exact_cap_field(p, g);
  REQUIRE(exact.has_value());
  CHECK(gauge_aligned_max_error(sol.u, *exact) < 1e-2);
}

TEST_CASE("exact cap exists only for matching data") {
  RectangleProblem p = equal_angles(1, 2, kPi / 3, 16);
  CHECK_FALSE(exact_cap_field(p, RectangleGrid::from_problem(p)).has_value());
  p = equal_angles(1, 1, 1.2, 16);
  CHECK(exact_cap_field(p, RectangleGrid::from_problem(p)).has_value());
}

TEST_CASE("discrete conservation at arbitrary iterates") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(-0.3, 0.3);
  const RectangleProblem p = equal_angles(1, 2, 1.1, 16);
  const RectangleGrid g = RectangleGrid::from_problem(p);
  Grid2D u = g.make_field();
  for (double& v : u.values) v = u01(rng);
  const Grid2D div = graph_divergence(g, u, KernelMode::Serial);
  double total = 0;
  for (double v : div.values) total += v * g.dx * g.dy;
  const double boundary = 2 * (p.a + p.b) * std::cos(1.1);
  CHECK(std::abs(total - boundary) < 1e-12);
}

TEST_CASE("gauge invariance and square symmetry") {
  const RectangleProblem p = equal_angles(1, 1, 1.2, 32);
  const GraphField base = solve_rectangle(p);
  SolveOptions o;
  Grid2D guess = RectangleGrid::from_problem(p).make_field(7.5);
  o.initial_guess = guess;
  const GraphField shifted = solve_rectangle(p, o);
  double diff = 0, asym = 0;
  const int n = base.u.nx;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      diff = std::max(diff, std::abs(base.u.at(i, j) - shifted.u.at(i, j)));
      const double v = base.u.at(i, j);
      for (double w : {base.u.at(n - 1 - i, j), base.u.at(i, n - 1 - j), base.u.at(j, i),
                       base.u.at(n - 1 - j, n - 1 - i)})
        asym = std::max(asym, std::abs(v - w));
    }
  CHECK(diff < 1e-12);
  CHECK(asym < 1e-10);
}

TEST_CASE("mixed data with compatible h") {
  RectangleProblem p;
  p.a = 1;
  p.b = 1.5;
  p.gammas = {1.0, 1.3, 1.1, 1.25};
  p.grid_n = 32;
  const GraphField sol = solve_rectangle(p);
  CHECK(sol.convergence.final_residual < 1e-10);
  p.h = compatibility_h(p.a, p.b, p.gammas) + 1e-6;
  CHECK_THROWS_AS(solve_rectangle(p), IncompatibleData);
}

TEST_CASE("input errors") {
  CHECK_THROWS_AS(solve_rectangle(equal_angles(1, 1, kPi / 5, 32)), DomainError);
  CHECK_THROWS_AS(solve_rectangle(equal_angles(1, 1, kPi / 2, 32)), DomainError);
  CHECK_THROWS_AS(solve_rectangle(equal_angles(1, 1, 1.2, 8)), DomainError);
  CHECK_THROWS_AS(solve_rectangle(equal_angles(-1, 1, 1.2, 32)), DomainError);
  SolveOptions o;
  o.max_newton = 1;
  CHECK_THROWS_AS(solve_rectangle(equal_angles(1, 2, 0.85, 32), o), NonConvergence);
}
