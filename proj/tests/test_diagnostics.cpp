#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "capvertex/diagnostics.hpp"
#include "capvertex/errors.hpp"
#include "capvertex/seed.hpp"

using namespace capvertex;

namespace {

const TrihedralConfig kOctant = TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2});

std::vector<Vec3> sphere_points(const Vec3& c, double r, int n, std::uint64_t seed,
                                bool upper = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Vec3> pts;
  for (int k = 0; k < n; ++k) {
    Vec3 d(nd(rng), nd(rng), upper ? std::abs(nd(rng)) : nd(rng));
    pts.push_back(c + r * d.normalized());
  }
  return pts;
}

}  // namespace

TEST_CASE("sphere fit recovers exact spheres and ignores point order") {
  const Vec3 c(0.3, -1.2, 2.0);
  std::vector<Vec3> pts = sphere_points(c, 1.7, 400, 1);
  const SphereFit f = fit_sphere(pts);
  CHECK_FALSE(f.plane_fallback);
  CHECK((f.center - c).norm() < 1e-10);
  CHECK(f.radius == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(f.relative_rms < 1e-12);

  std::reverse(pts.begin(), pts.end());
  std::shuffle(pts.begin(), pts.end(), std::mt19937_64(3));
  const SphereFit g = fit_sphere(pts);
  CHECK(g.center == f.center);
  CHECK(g.radius == f.radius);

  CHECK_THROWS_AS(fit_sphere(std::vector<Vec3>(pts.begin(), pts.begin() + 9)), DomainError);
}

TEST_CASE("ellipsoid is not a sphere") {
  std::vector<Vec3> pts = sphere_points(Vec3::Zero(), 1.0, 2000, 2, false);
  for (Vec3& p : pts) p.z() *= 1.2;
  CHECK(fit_sphere(pts).relative_rms > 0.03);
}

TEST_CASE("coplanar points fall back to a plane") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) pts.emplace_back(i, j, 2.0 - 0.5 * i + 0.25 * j);
  const SphereFit f = fit_sphere(pts);
  CHECK(f.plane_fallback);
  CHECK(f.plane.max_distance < 1e-12);
  const Vec3 n = Vec3(0.5, -0.25, 1.0).normalized();
  CHECK(std::abs(std::abs(f.plane.normal.dot(n)) - 1.0) < 1e-12);
}

TEST_CASE("curvature of the sampled octant") {
  const TriMeshDrop d = seed_mesh(kOctant, kPi / 6, 4);
  const auto field = curvature_field(d.surface);
  const CurvatureStats s = mean_curvature_stats(field);
  CHECK(s.mean == doctest::Approx(-1.0).epsilon(2e-3));
  CHECK(s.cv < 1e-2);
  for (const auto& v : field)
    if (v.interior) {
      CHECK(v.k1 >= v.k2);
      CHECK(v.k1 == doctest::Approx(-1.0).epsilon(0.05));
    }
  CHECK(umbilicity_rms(d.surface, field, 1.0) < 5e-2);
}

TEST_CASE("umbilicity decreases under refinement on the sphere") {
  double prev = 1e9;
  for (int r : {2, 3, 4}) {
    const TriMeshDrop d = seed_mesh(kOctant, kPi / 6, r);
    const double u = umbilicity_rms(d.surface, curvature_field(d.surface), 1.0);
    CHECK(u < prev);
    prev = u;
  }
}

TEST_CASE("half-cylinder curvature") {
  const SurfaceMesh m = half_cylinder_mesh(0.5, 4);
  const auto field = curvature_field(m);
  const CurvatureStats s = mean_curvature_stats(field);
  CHECK(s.mean == doctest::Approx(1.0).epsilon(1e-2));
  const double u = umbilicity_rms(m, field, 0.5);
  CHECK(u == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(half_cylinder_mesh(0.0, 2), DomainError);
}

TEST_CASE("contact angles and vertex angles of analytic seeds") {
  const TriMeshDrop oct = seed_mesh(kOctant, kPi / 6, 3);
  for (double e : measure_contact_angles(oct).max_error) CHECK(e < 1e-10);

  const WedgeConfig w = WedgeConfig::canonical(kPi / 4, 2 * kPi / 3, 2 * kPi / 3);
  const TriMeshDrop d = seed_mesh(w, 1.0, 3);
  const double pred = vertex_angle(w.alpha, w.gamma1(), w.gamma2()).two_beta;
  CHECK(pred == doctest::Approx(std::acos(1.0 / 3.0)).epsilon(1e-14));
  int edges = 0;
  for (std::size_t v = 0; v < d.tags.size(); ++v) {
    if (d.tags[v].kind != TagKind::OnEdge) {
      continue;
    }
    ++edges;
    CHECK(std::abs(measure_vertex_angle(d, static_cast<int>(v)) - pred) < 1e-10);
  }
  CHECK(edges == 2);
  CHECK_THROWS_AS(measure_vertex_angle(d, 0), DomainError);
}

TEST_CASE("report serialization") {
  const TriMeshDrop d = seed_mesh(kOctant, kPi / 6, 2);
  const DiagnosticsReport r = diagnose(d);
  CHECK(r.vertex_angles.size() == 3);
  const std::string js = to_json(r, 17);
  CHECK(js == to_json(r, 17));
  const auto j = nlohmann::json::parse(js);
  CHECK(j.at("seed") == 17);
  CHECK(j.at("sphere_relative_rms").get<double>() < 1e-12);
  CHECK(j.at("contact_angle_errors").size() == 3);
  // Orthogonal walls: the predicted vertex angle is pi/2.
  for (const auto& s : j.at("vertex_angles"))
    CHECK(s.at("predicted").get<double>() == doctest::Approx(kPi / 2));

  const std::string csv = to_csv(r, 17);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find("\r\n") != std::string::npos);
  CHECK(csv.rfind("17,", csv.find("\r\n") + 2) == csv.find("\r\n") + 2);
}
