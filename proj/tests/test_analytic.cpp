#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "capvertex/analytic.hpp"
#include "capvertex/errors.hpp"

using namespace capvertex;

namespace {

// Angle at V between the lines where the tangent plane of the sphere at V
// cuts the two walls, each oriented away from the edge.
double tangent_plane_angle(const SphericalCap& cap, const WedgeConfig& w, const Vec3& v) {
  const Vec3 nu = (v - cap.center).normalized();
  Vec3 t1 = w.plane1.normal().cross(nu).normalized();
  Vec3 t2 = w.plane2.normal().cross(nu).normalized();
  if (t1.dot(w.wall_direction(1)) < 0) t1 = -t1;
  if (t2.dot(w.wall_direction(2)) < 0) t2 = -t2;
  return std::acos(std::clamp(t1.dot(t2), -1.0, 1.0));
}

double distance_to_line(const Vec3& p, const Line& l) {
  const Vec3 r = p - l.point;
  return (r - r.dot(l.dir) * l.dir).norm();
}

}  // namespace

TEST_CASE("wedge_cap examples") {
  const auto w = WedgeConfig::canonical(kPi / 4, kPi / 2, kPi / 2);
  const SphericalCap cap = wedge_cap(w, 1.0);
  CHECK(cap.radius == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(distance_to_line(cap.center, w.edge) < 1e-15);
  REQUIRE(cap.vertices.size() == 2);
  CHECK((cap.vertices[0] - cap.center).norm() == doctest::Approx(1.0));
  CHECK((cap.vertices[1] - cap.center).norm() == doctest::Approx(1.0));
  CHECK((cap.vertices[0] - cap.vertices[1]).norm() == doctest::Approx(2.0));

  const auto w2 = WedgeConfig::canonical(kPi / 4, 2 * kPi / 3, 2 * kPi / 3);
  const SphericalCap c2 = wedge_cap(w2, -1.0);
  REQUIRE(c2.vertices.size() == 2);
  for (const Vec3& v : c2.vertices) {
    const double oracle = tangent_plane_angle(c2, w2, v);
    CHECK(oracle == doctest::Approx(std::acos(1.0 / 3)).epsilon(1e-12));
    CHECK(oracle == doctest::Approx(1.230959).epsilon(1e-6));
    CHECK(cap_vertex_angle(c2, w2.plane1, w2.plane2, v) == doctest::Approx(oracle).epsilon(1e-12));
  }

  const auto w3 = WedgeConfig::canonical(kPi / 6, 0.2, 0.2);
  CHECK_THROWS_AS(wedge_cap(w3, 1.0), NoSolution);
  CHECK_THROWS_AS(wedge_cap(w3, -3.0), NoSolution);
}

TEST_CASE("wedge_cap invariants: radius, plane distances, contact angles") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(0.1, 1.45), ug(0.0, kPi), uh(0.2, 3.0);
  int n = 0;
  while (n < 300) {
    const double a = ua(rng), g1 = ug(rng), g2 = ug(rng);
    if (classify_data(a, g1, g2).tag != AdmissibilityTag::InteriorQ) continue;
    const double h = (n % 2 ? 1 : -1) * uh(rng);
    const auto w = WedgeConfig::canonical(a, g1, g2);
    const auto cap = wedge_cap(w, h);
    CHECK(std::abs(std::abs(cap.h_signed) * cap.radius - 1) < 1e-12);
    for (const PlaneSupport* p : {&w.plane1, &w.plane2}) {
      CHECK(std::abs(std::abs(p->signed_distance(cap.center)) - cap.radius * std::abs(p->beta())) <
            1e-12 * cap.radius);
      // liquid side: signed distance has the sign of cos(gamma) / h
      CHECK(p->signed_distance(cap.center) * p->beta() * h >= -1e-15);
      CHECK(std::abs(cap_contact_cos(cap, *p) - p->beta()) < 1e-12);
    }
    ++n;
  }
}

TEST_CASE("cap existence matches classification on 1000 samples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ua(0.1, 1.45), ug(0.0, kPi), u01(0.0, 1.0);
  int counts[6] = {0, 0, 0, 0, 0, 0};
  for (int s = 0; s < 1000; ++s) {
    const double a = ua(rng);
    double g1 = ug(rng), g2 = ug(rng);
    if (s % 4 == 0) {
      // Put the sample on the D1 side of the rectangle boundary.
      const double target = (u01(rng) < 0.5) ? kPi - 2 * a : kPi + 2 * a;
      g1 = (target < kPi) ? u01(rng) * target : target - kPi + u01(rng) * (2 * kPi - target);
      g2 = target - g1;
    }
    const auto cls = classify_data(a, g1, g2);
    ++counts[static_cast<int>(cls.tag)];
    const auto w = WedgeConfig::canonical(a, g1, g2);
    const double h = (s % 3 ? 1.0 : -0.5);
    if (cls.tag == AdmissibilityTag::InteriorQ) {
      const auto cap = wedge_cap(w, h);
      CHECK(cap.vertices.size() == 2);
      CHECK(distance_to_line(cap.center, w.edge) < cap.radius * (1 - 1e-12));
      for (const Vec3& v : cap.vertices) CHECK(std::abs((v - cap.center).norm() - cap.radius) < 1e-12);
    } else if (cls.tag == AdmissibilityTag::BoundaryQ_D1) {
      const auto cap = wedge_cap(w, h);
      CHECK(cap.vertices.size() == 1);
      CHECK(std::abs(distance_to_line(cap.center, w.edge) - cap.radius) < 1e-8 * cap.radius);
    } else {
      CHECK_THROWS_AS(wedge_cap(w, h), NoSolution);
      if (cls.tag == AdmissibilityTag::D1 || cls.tag == AdmissibilityTag::D2) {
        // Independent check: the sphere with the prescribed distances misses the edge.
        const double c = w.plane1.normal().dot(w.plane2.normal());
        const double d1 = w.plane1.beta() / h, d2 = w.plane2.beta() / h;
        const double rho2 = (d1 * d1 + d2 * d2 - 2 * c * d1 * d2) / (1 - c * c);
        CHECK(rho2 > 1.0 / (h * h) - 1e-12);
      }
    }
  }
  CHECK(counts[static_cast<int>(AdmissibilityTag::InteriorQ)] > 50);
  CHECK(counts[static_cast<int>(AdmissibilityTag::BoundaryQ_D1)] > 50);
  CHECK(counts[static_cast<int>(AdmissibilityTag::D1)] > 50);
  CHECK(counts[static_cast<int>(AdmissibilityTag::D2)] > 50);
}

TEST_CASE("vertex angle of the cap matches the closed form") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ua(0.1, 1.45), ug(0.01, kPi - 0.01);
  int n = 0;
  while (n < 500) {
    const double a = ua(rng), g1 = ug(rng), g2 = ug(rng);
    if (classify_data(a, g1, g2).tag != AdmissibilityTag::InteriorQ) continue;
    const auto w = WedgeConfig::canonical(a, g1, g2);
    const auto cap = wedge_cap(w, n % 2 ? 2.0 : -0.7);
    const double expect = vertex_angle(a, g1, g2).two_beta;
    for (const Vec3& v : cap.vertices) {
      CHECK(std::abs(tangent_plane_angle(cap, w, v) - expect) < 1e-9);
      CHECK(std::abs(cap_vertex_angle(cap, w.plane1, w.plane2, v) - expect) < 1e-9);
    }
    ++n;
  }
}

TEST_CASE("scaling covariance") {
  const auto w = WedgeConfig::canonical(0.6, 1.1, 1.9);
  const auto cap = wedge_cap(w, -1.3);
  for (double lam : {0.25, 3.0, 17.0}) {
    const auto ws = scaled(w, lam);
    const auto cs = wedge_cap(ws, -1.3 / lam);
    CHECK((cs.center - lam * cap.center).norm() < 1e-12 * lam);
    CHECK(cs.radius == doctest::Approx(lam * cap.radius).epsilon(1e-14));
    const auto cs2 = scaled(cap, lam);
    CHECK((cs2.center - cs.center).norm() < 1e-12 * lam);
  }
  // trihedral with the apex off the origin
  const auto tw = TrihedralConfig::from_planes({PlaneSupport(Vec3(1, 0.2, 0), 0.3, 1.2),
                                                PlaneSupport(Vec3(0, 1, 0.1), -0.2, 1.4),
                                                PlaneSupport(Vec3(0.1, 0, 1), 0.5, 1.3)});
  const auto tc = std::get<SphericalCap>(trihedral_cap(tw, -2.0));
  const auto ts = std::get<SphericalCap>(trihedral_cap(scaled(tw, 4.0), -0.5));
  CHECK((ts.center - 4.0 * tc.center).norm() < 1e-11);
  CHECK(ts.radius == doctest::Approx(4.0 * tc.radius).epsilon(1e-14));
}

TEST_CASE("trihedral_cap examples") {
  const auto t = TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2});
  const auto cap = std::get<SphericalCap>(trihedral_cap(t, -1.0));
  CHECK(cap.center.norm() < 1e-15);
  CHECK_FALSE(cap.degenerate);
  REQUIRE(cap.vertices.size() == 3);
  CHECK((cap.vertices[0] - Vec3(0, 0, 1)).norm() < 1e-15);  // edge of planes x, y
  CHECK((cap.vertices[1] - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((cap.vertices[2] - Vec3(0, 1, 0)).norm() < 1e-15);

  const double g = std::acos(std::sqrt(3.0) / 3);
  const auto planar = trihedral_cap(TrihedralConfig::orthogonal({g, g, g}), 0.0);
  REQUIRE(std::holds_alternative<PlanarSolution>(planar));
  const Vec3 m = std::get<PlanarSolution>(planar).normal;
  CHECK((m - Vec3(1, 1, 1).normalized()).norm() < 1e-12);

  CHECK_THROWS_AS(trihedral_cap(TrihedralConfig::orthogonal({1.0, 1.2, 1.4}), 0.0), NoSolution);
}

TEST_CASE("orthogonal equal-angle family: center and degenerate flag") {
  const double r = 1.7;
  for (int k = 1; k < 200; ++k) {
    // cos gamma < 0.7 keeps every pair interior (|gamma - pi/2| < pi/4); for
    // h > 0 and cos gamma < -1/sqrt 3 the sphere misses the edge rays.
    const double c = -0.55 + 1.25 * k / 200.0;
    const double g = std::acos(c);
    const auto t = TrihedralConfig::orthogonal({g, g, g});
    const auto cap = std::get<SphericalCap>(trihedral_cap(t, 1.0 / r));
    CHECK((cap.center - Vec3(r * c, r * c, r * c)).norm() < 1e-12);
    CHECK(cap.degenerate == (std::abs(c * std::sqrt(3.0) - 1) < 1e-9));
  }
  const double c0 = 1 / std::sqrt(3.0);
  CHECK(std::get<SphericalCap>(trihedral_cap(TrihedralConfig::orthogonal({std::acos(c0), std::acos(c0), std::acos(c0)}), 1.0)).degenerate);
  const double c1 = c0 + 1e-6;
  CHECK_FALSE(std::get<SphericalCap>(trihedral_cap(TrihedralConfig::orthogonal({std::acos(c1), std::acos(c1), std::acos(c1)}), 1.0)).degenerate);
}

TEST_CASE("trihedral consistency on 100 random admissible configurations") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> ug(0.0, kPi), uo(-1.0, 1.0), uh(0.3, 3.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  int n = 0, attempts = 0, misses = 0;
  while (n < 100) {
    ++attempts;
    std::array<Vec3, 3> normals;
    for (auto& v : normals) v = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
    Eigen::Matrix3d nm;
    for (int j = 0; j < 3; ++j) nm.row(j) = normals[j].transpose();
    if (std::abs(nm.determinant()) < 0.2) continue;
    std::array<double, 3> g{ug(rng), ug(rng), ug(rng)};
    const auto t = TrihedralConfig::from_planes({PlaneSupport(normals[0], uo(rng), g[0]),
                                                 PlaneSupport(normals[1], uo(rng), g[1]),
                                                 PlaneSupport(normals[2], uo(rng), g[2])});
    bool ok = true;
    for (int j = 0; j < 3; ++j) {
      const int k = (j + 1) % 3;
      if (classify_data(t.half_opening(j, k), g[j], g[k]).tag != AdmissibilityTag::InteriorQ) ok = false;
    }
    if (!ok) continue;
    const double h = (attempts % 2 ? 1 : -1) * uh(rng);
    TrihedralSolution sol = PlanarSolution{Vec3::UnitX(), 0.0, t};
    try {
      sol = trihedral_cap(t, h);
    } catch (const NoSolution&) {
      ++misses;  // this sign of h gives no drop at the apex
      continue;
    }
    const auto& cap = std::get<SphericalCap>(sol);
    // Oracle: the center solves the three distance constraints directly.
    Vec3 rhs;
    for (int j = 0; j < 3; ++j) rhs[j] = t.planes[j].offset() + t.planes[j].beta() / h;
    const Vec3 oracle = nm.fullPivLu().solve(rhs);
    CHECK((cap.center - oracle).norm() < 1e-10 * (1 + oracle.norm()));
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(cap_contact_cos(cap, t.planes[j]) - std::cos(g[j])) < 1e-12);
    ++n;
  }
  CHECK(misses < 100);
}

TEST_CASE("cylinder_cap") {
  const double r = 0.5;
  for (double g : {1.1, 1.3, 1.7, 2.0}) {
    const auto prism = TrihedralConfig::equilateral_prism(r, {g, g, g});
    const double h = cylinder_h(prism);
    CHECK(h == doctest::Approx(std::cos(g) / r).epsilon(1e-13));
    const auto cap = cylinder_cap(prism);
    CHECK(cap.center.norm() < 1e-13);
    CHECK(cap.radius == doctest::Approx(r / std::abs(std::cos(g))).epsilon(1e-13));
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(prism.planes[j].signed_distance(cap.center) - cap.radius * std::cos(g) * (h > 0 ? 1 : -1)) < 1e-12);
      CHECK(std::abs(cap_contact_cos(cap, prism.planes[j]) - std::cos(g)) < 1e-12);
    }
    CHECK(cap.vertices.size() == 3);
  }
  // Orthogonal contact on all three walls admits only a plane.
  CHECK(cylinder_h(TrihedralConfig::equilateral_prism(r, {kPi / 2, kPi / 2, kPi / 2})) == 0.0);
  CHECK_THROWS_AS(cylinder_cap(TrihedralConfig::equilateral_prism(r, {kPi / 2, kPi / 2, kPi / 2})),
                  NoSolution);
  // Unequal admissible angles.
  const auto mixed = TrihedralConfig::equilateral_prism(1.0, {1.2, 1.4, 1.3});
  const auto mc = cylinder_cap(mixed);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(cap_contact_cos(mc, mixed.planes[j]) - mixed.planes[j].beta()) < 1e-12);
}

TEST_CASE("wente half-cylinder") {
  const auto w1 = wente_halfcylinder(1, 1);
  CHECK(w1.radius == 0.5);
  CHECK(w1.h == 1.0);
  const auto w2 = wente_halfcylinder(3, 2);
  CHECK(w2.radius == 1.0);
  CHECK(w2.h == 0.5);
  CHECK_THROWS_AS(wente_halfcylinder(0, 1), DomainError);

  for (const auto& w : {w1, w2}) {
    const double b = w.b;
    const int ny = 400;
    const double y0 = 0.05 * b, dy = 0.9 * b / ny;
    Grid2D samples(20, ny, 0.0, y0, w.a / 20, dy);
    GraphDerivatives d = [&](double, double y) {
      return std::array<double, 5>{0.0, w.slope(y), 0.0, 0.0, w.curvature(y)};
    };
    CHECK(cartesian_cmc_residual(d, w.h, samples).max_abs() < 1e-10);
  }
}

TEST_CASE("cartesian residual by differences") {
  Grid2D flat(8, 8, 0, 0, 0.125, 0.125, 3.0);
  CHECK(cartesian_cmc_residual(flat, 0.0).max_abs() == 0.0);
  CHECK_THROWS_AS(cartesian_cmc_residual(Grid2D(2, 5, 0, 0, 1, 1), 0.0), DomainError);

  // Lower unit cap over the unit square: div Tu = 2. The largest residual
  // sits in the corner cell, which moves as the grid refines, so the order
  // is measured on the fixed region [0.1, 0.9]^2 and the whole grid is held
  // to a uniform C h^2 bound.
  std::vector<double> errs;
  for (int n : {32, 64, 128}) {
    Grid2D u(n, n, 0, 0, 1.0 / n, 1.0 / n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = u.x(i) - 0.5, y = u.y(j) - 0.5;
        u.at(i, j) = -std::sqrt(1 - x * x - y * y);
      }
    const Grid2D r = cartesian_cmc_residual(u, 1.0);
    CHECK(r.max_abs() <= 2.0 / (n * n));
    double m = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (u.x(i) > 0.1 && u.x(i) < 0.9 && u.y(j) > 0.1 && u.y(j) < 0.9)
          m = std::max(m, std::abs(r.at(i, j)));
    errs.push_back(m);
  }
  CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
  CHECK(std::log2(errs[1] / errs[2]) >= 1.9);
}

TEST_CASE("spherical residual on constant radius") {
  for (int refine : {1, 2}) {
    const int nt = 16 * refine, np = 12 * refine;
    const double dphi = (kPi - 0.4) / np;
    SphericalGraphField f{Grid2D(nt, np, 0.0, 0.2, 2 * kPi / nt, dphi, 2.5), -1 / 2.5};
    CHECK(spherical_cmc_residual(f).max_abs() <= 1e-12);
    f.h = 0.0;
    const Grid2D r = spherical_cmc_residual(f);
    double worst = 0;
    for (int j = 1; j < np - 1; ++j)
      for (int i = 1; i < nt - 1; ++i)
        worst = std::max(worst, std::abs(r.at(i, j) + 2 * std::sin(f.phi(j))));
    CHECK(worst <= 1e-12);
  }
  SphericalGraphField polar{Grid2D(8, 8, 0.0, 0.0, 0.1, 0.1, 1.0), 0.0};
  CHECK_THROWS_AS(spherical_cmc_residual(polar), DomainError);
}
