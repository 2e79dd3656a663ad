// Acceptance criteria 1 to 13. One line per criterion; exit status 1 if any
// criterion fails. Measurements here are written separately from the
// verify recipes in src/verify.cpp.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "capvertex/analytic.hpp"
#include "capvertex/diagnostics.hpp"
#include "capvertex/energy.hpp"
#include "capvertex/errors.hpp"
#include "capvertex/evolver.hpp"
#include "capvertex/geom_core.hpp"
#include "capvertex/graph_solver.hpp"
#include "capvertex/seed.hpp"

using namespace capvertex;

namespace {

constexpr std::uint64_t kSeed = 42;

// Pinned tolerances.
constexpr double kBand1 = 1e-6;
constexpr double kIdentity2 = 1e-12;
constexpr double kEqualAngle2 = 1e-12;
constexpr double kVertexAngle3 = 1e-9;
constexpr double kContactCos4 = 1e-12;
constexpr double kCapError5 = 5e-3;
constexpr double kOrder5 = 1.9;
constexpr double kRatio6 = 20.0;
constexpr double kResidual7 = 1e-10;
constexpr double kSphereRms = 1e-3;
constexpr double kCv8 = 1e-2;
constexpr double kContactDeg8 = 1.0;
constexpr double kVertexDeg8 = 2.0;
constexpr double kPlane9 = 1e-4;
constexpr double kCapCos10 = 1e-12;
constexpr double kUmbilic11 = 5e-2;
constexpr double kSeparation11 = 10.0;
constexpr double kResidual12 = 1e-12;
constexpr double kGradient13 = 1e-5;
constexpr double kGradTol = 1e-7;

struct Item {
  std::string text;
  bool ok;
};

class Criterion {
 public:
  void less(const char* what, double value, double bound) { add(what, value, "<", bound, value < bound); }
  void at_most(const char* what, double value, double bound) { add(what, value, "<=", bound, value <= bound); }
  void at_least(const char* what, double value, double bound) { add(what, value, ">=", bound, value >= bound); }
  void more(const char* what, double value, double bound) { add(what, value, ">", bound, value > bound); }
  void equal(const char* what, double value, double expected) { add(what, value, "==", expected, value == expected); }

  bool ok() const {
    for (const auto& i : items_)
      if (!i.ok) return false;
    return !items_.empty();
  }
  const std::vector<Item>& items() const { return items_; }

 private:
  void add(const char* what, double value, const char* cmp, double bound, bool ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s=%.3e %s %.3g", what, value, cmp, bound);
    items_.push_back({buf, ok && !std::isnan(value)});
  }
  std::vector<Item> items_;
};

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.equal((std::string("exception: ") + e.what()).c_str(), 1, 0);
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.less("runtime_s", t, limit_s);
  const bool ok = c.ok();
  if (!ok) ++failures;
  std::printf("C%02d %s  %s |", id, ok ? "PASS" : "FAIL", title);
  for (const auto& i : c.items()) std::printf(" %s%s;", i.text.c_str(), i.ok ? "" : " (x)");
  std::printf("\n");
  std::fflush(stdout);
}

// Algebraic least-squares sphere |x|^2 = 2 c.x + k; relative RMS of
// (|x - c| - R) / R.
double sphere_rms(const std::vector<Vec3>& pts) {
  Eigen::MatrixXd a(pts.size(), 4);
  Eigen::VectorXd rhs(pts.size());
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vec3 q = pts[k] - mean;
    a.row(k) << 2 * q.x(), 2 * q.y(), 2 * q.z(), 1.0;
    rhs[k] = q.squaredNorm();
  }
  const Eigen::Vector4d s = a.colPivHouseholderQr().solve(rhs);
  const Vec3 c = s.head<3>();
  const double r = std::sqrt(s[3] + c.squaredNorm());
  double acc = 0;
  for (const Vec3& p : pts) {
    const double d = ((p - mean) - c).norm() / r - 1.0;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pts.size()));
}

std::vector<Vec3> graph_points(const Grid2D& u) {
  std::vector<Vec3> pts;
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i) pts.emplace_back(u.x(i), u.y(j), u.at(i, j));
  return pts;
}

RectangleProblem equal_rectangle(double a, double b, double gamma, int n) {
  RectangleProblem p;
  p.a = a;
  p.b = b;
  p.gammas.fill(gamma);
  p.grid_n = n;
  return p;
}

// Lower cap of radius 1/h over the rectangle, compared after removing the
// mean difference.
double cap_error(const Grid2D& u, double a, double b, double h) {
  const double r = 1.0 / h;
  std::vector<double> diff;
  double mean = 0;
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i) {
      const double x = u.x(i) - a / 2, y = u.y(j) - b / 2;
      diff.push_back(u.at(i, j) + std::sqrt(r * r - x * x - y * y));
      mean += diff.back();
    }
  mean /= static_cast<double>(diff.size());
  double worst = 0;
  for (double d : diff) worst = std::max(worst, std::abs(d - mean));
  return worst;
}

struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t s) : g(s) {}
  double uni(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
};

// Center of the unit sphere meeting both walls of a canonical wedge at the
// prescribed angles with the liquid inside the ball, in the xy plane.
Eigen::Vector2d wedge_center(const WedgeConfig& w) {
  Eigen::Matrix2d m;
  m << w.plane1.normal().x(), w.plane1.normal().y(), w.plane2.normal().x(), w.plane2.normal().y();
  return m.fullPivLu().solve(Eigen::Vector2d(-std::cos(w.gamma1()), -std::cos(w.gamma2())));
}

EvolveResult relax(const SupportConfig& s, double volume, int r, SeedOptions so,
                   VolumeMode mode = VolumeMode::Fixed) {
  EvolveOptions o;
  o.grad_tol = kGradTol;
  o.max_iters = 4000;
  o.volume_mode = mode;
  return evolve(seed_mesh(s, volume, r, so), o);
}

}  // namespace

int main() {
  run(1, "classification oracle equivalence", 1.0, [](Criterion& c) {
    long bad = 0, tag_bad = 0, n = 0;
    for (double alpha : {kPi / 6, kPi / 4, kPi / 3})
      for (int i = 0; i <= 180; ++i)
        for (int j = 0; j <= 180; ++j) {
          const double g1 = kPi * i / 180, g2 = kPi * j / 180;
          const double s = std::abs(g1 + g2 - kPi) - 2 * alpha;
          const double d = std::abs(g1 - g2) - (kPi - 2 * alpha);
          if (std::abs(s) <= kBand1 || std::abs(d) <= kBand1) continue;
          ++n;
          const bool in_q = s < 0 && d < 0;
          if ((vertex_numerator(alpha, g1, g2) > 0) != in_q) ++bad;
          if ((classify_data(alpha, g1, g2).tag == AdmissibilityTag::InteriorQ) != in_q) ++tag_bad;
        }
    c.equal("numerator_disagreements", static_cast<double>(bad), 0);
    c.equal("class_disagreements", static_cast<double>(tag_bad), 0);
    c.more("points", static_cast<double>(n), 9e4);
  });

  run(2, "vertex-angle identity and equal-angle bound", 1.0, [](Criterion& c) {
    Rng r(kSeed);
    double id = 0, excess = -1;
    int n = 0, m = 0;
    while (n < 10000) {
      const double a = r.uni(0.01, kPi / 2 - 0.01), g1 = r.uni(0, kPi), g2 = r.uni(0, kPi);
      if (classify_data(a, g1, g2).tag != AdmissibilityTag::InteriorQ) continue;
      const VertexAngleResult v = vertex_angle(a, g1, g2);
      id = std::max(id, std::abs(v.sin_sq_two_beta - (1 - v.cos_two_beta * v.cos_two_beta)));
      ++n;
    }
    while (m < 10000) {
      const double a = r.uni(0.01, kPi / 2 - 0.01), g = r.uni(0, kPi);
      if (classify_data(a, g, g).tag != AdmissibilityTag::InteriorQ) continue;
      excess = std::max(excess, vertex_angle(a, g, g).two_beta - 2 * a);
      ++m;
    }
    c.less("identity_residual", id, kIdentity2);
    c.at_most("max_2beta_minus_2alpha", excess, kEqualAngle2);
  });

  run(3, "cap vertex angle and existence pattern", 5.0, [](Criterion& c) {
    Rng r(kSeed + 3);
    double worst = 0;
    int n = 0;
    long mismatch = 0;
    while (n < 100) {
      const double a = r.uni(0.01, kPi / 2 - 0.01), g1 = r.uni(0, kPi), g2 = r.uni(0, kPi);
      const WedgeConfig w = WedgeConfig::canonical(a, g1, g2);
      const Eigen::Vector2d c2 = wedge_center(w);
      const bool exists = c2.squaredNorm() < 1.0;
      const bool interior = classify_data(a, g1, g2).tag == AdmissibilityTag::InteriorQ;
      if (exists != interior) ++mismatch;
      if (!interior) continue;
      ++n;
      const SphericalCap cap = wedge_cap(w, -1.0);
      if (cap.vertices.size() != 2) ++mismatch;
      const Vec3 center(c2.x(), c2.y(), 0.0);
      if ((cap.center - center).norm() > 1e-12) ++mismatch;
      const double pred = vertex_angle(a, g1, g2).two_beta;
      for (const Vec3& v : cap.vertices) {
        // Tangent of each contact circle at v, pointing along its wall.
        Vec3 t[2];
        const PlaneSupport* pl[2] = {&w.plane1, &w.plane2};
        for (int k = 0; k < 2; ++k) {
          const Vec3 foot = pl[k]->project(center);
          t[k] = pl[k]->normal().cross(v - foot).normalized();
          const Vec3 along = pl[1 - k]->normal() - pl[1 - k]->normal().dot(pl[k]->normal()) * pl[k]->normal();
          if (t[k].dot(along) < 0) t[k] = -t[k];
        }
        worst = std::max(worst, std::abs(std::acos(std::clamp(t[0].dot(t[1]), -1.0, 1.0)) - pred));
      }
    }
    c.less("max_vertex_angle_error", worst, kVertexAngle3);
    c.equal("existence_mismatches", static_cast<double>(mismatch), 0);
  });

  run(4, "trihedral sphere construction", 5.0, [](Criterion& c) {
    Rng r(kSeed + 4);
    std::normal_distribution<double> nd;
    double worst = 0;
    int built = 0;
    for (int attempt = 0; built < 100 && attempt < 200000; ++attempt) {
      std::array<Vec3, 3> n;
      for (auto& v : n) v = Vec3(nd(r.g), nd(r.g), nd(r.g)).normalized();
      if (std::abs(n[0].dot(n[1].cross(n[2]))) < 0.2) continue;
      const double h = (r.uni(0, 1) < 0.5 ? -1 : 1) * r.uni(0.5, 2.0);
      std::array<PlaneSupport, 3> planes{PlaneSupport(n[0], 0, r.uni(0, kPi)),
                                         PlaneSupport(n[1], 0, r.uni(0, kPi)),
                                         PlaneSupport(n[2], 0, r.uni(0, kPi))};
      try {
        const TrihedralConfig t = TrihedralConfig::from_planes(planes);
        const auto sol = trihedral_cap(t, h);
        const auto& cap = std::get<SphericalCap>(sol);
        const double side = cap.liquid_inside_ball ? 1.0 : -1.0;
        for (const auto& p : t.planes) {
          const double cos_m = -side * p.signed_distance(cap.center) / cap.radius;
          worst = std::max(worst, std::abs(cos_m - std::cos(p.gamma())));
        }
        ++built;
      } catch (const NoSolution&) {
      } catch (const DomainError&) {
      }
    }
    long flag = 0;
    const double g0 = std::acos(std::sqrt(3.0) / 3);
    for (double d : {0.0, 1e-4, -1e-4, 1e-2, -1e-2, 0.2, -0.1}) {
      const double g = g0 + d;
      // Below the planar angle only the concave cap exists.
      const SphericalCap cap =
          std::get<SphericalCap>(trihedral_cap(TrihedralConfig::orthogonal({g, g, g}), d < 0 ? 1.0 : -1.0));
      const bool through_apex = std::abs(cap.center.norm() - cap.radius) < 1e-9;
      if (cap.degenerate != (d == 0.0) || cap.degenerate != through_apex) ++flag;
    }
    c.equal("configurations", built, 100);
    c.less("max_contact_cos_error", worst, kContactCos4);
    c.equal("degenerate_flag_errors", static_cast<double>(flag), 0);
  });

  double square_rms = std::nan("");
  run(5, "square PDE against the exact cap", 60.0, [&](Criterion& c) {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
      const GraphField s = solve_rectangle(equal_rectangle(1, 1, kPi / 3, n));
      err.push_back(cap_error(s.u, 1, 1, 1.0));
      if (n == 128) square_rms = sphere_rms(graph_points(s.u));
    }
    c.at_most("max_error_128", err[2], kCapError5);
    c.at_least("order_32_64", std::log2(err[0] / err[1]), kOrder5);
    c.at_least("order_64_128", std::log2(err[1] / err[2]), kOrder5);
  });

  run(6, "non-sphericity of the 1x2 rectangle solution", 60.0, [&](Criterion& c) {
    const GraphField s = solve_rectangle(equal_rectangle(1, 2, 1.2, 128));
    const double rms = sphere_rms(graph_points(s.u));
    c.less("residual", s.convergence.final_residual, 1e-10);
    c.at_least("rms_ratio", rms / square_rms, kRatio6);
  });

  run(7, "half-cylinder example", 1.0, [](Criterion& c) {
    double worst = 0, compat = 0;
    for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {1.0, 3.0}, {0.35, 0.9}}) {
      const double r = b / 2;
      for (int k = 0; k <= 1000; ++k) {
        const double y = b * (0.05 + 0.9 * k / 1000.0);
        const double t = y - b / 2;
        const double s = std::sqrt(r * r - t * t);
        const double up = t / s, upp = r * r / (s * s * s);
        const std::array<double, 5> d{0.0, up, 0.0, 0.0, upp};
        worst = std::max(worst, std::abs(div_tu(d) - 2.0 / b));
      }
      const HalfCylinderSolution w = wente_halfcylinder(a, b);
      worst = std::max(worst, std::abs(w.h - 1.0 / b));
      compat = std::max(compat, std::abs(compatibility_h(a, b, {0.0, kPi / 2, 0.0, kPi / 2}) - 1.0 / b));
    }
    c.less("max_residual", worst, kResidual7);
    c.equal("compatibility_minus_inv_b", compat, 0.0);
  });

  run(8, "wedge drop relaxes to a sphere (r=4)", 120.0, [](Criterion& c) {
    const EvolveResult res = relax(WedgeConfig::canonical(kPi / 4, 2 * kPi / 3, 2 * kPi / 3), 1.0, 4,
                                   {std::nullopt, 0.01, kSeed});
    const DiagnosticsReport d = diagnose(res.drop);
    double ca = 0, va = d.vertex_angles.size() == 2 ? 0 : std::nan("");
    for (double e : d.contact_angle_errors) ca = std::max(ca, e);
    for (const auto& s : d.vertex_angles) va = std::max(va, std::abs(s.measured - std::acos(1.0 / 3)));
    c.equal("converged", res.report.status == EvolveStatus::Converged, 1);
    c.less("sphere_rms", sphere_rms(res.drop.surface.vertices), kSphereRms);
    c.less("curvature_cv", d.mean_curvature.cv, kCv8);
    c.less("contact_angle_err_deg", ca * 180 / kPi, kContactDeg8);
    c.less("vertex_angle_dev_deg", va * 180 / kPi, kVertexDeg8);
  });

  run(9, "trihedral drops: plane at H=0, sphere at fixed volume", 120.0, [](Criterion& c) {
    const double g = std::acos(std::sqrt(3.0) / 3);
    const EvolveResult flat = relax(TrihedralConfig::orthogonal({g, g, g}), 1.0, 4, {0.0, 0.01, kSeed},
                                    VolumeMode::Pressure);
    const PlaneFit pf = fit_plane(flat.drop.surface.vertices);
    c.equal("planar_converged", flat.report.status == EvolveStatus::Converged, 1);
    c.less("plane_dist_over_diam", pf.max_distance / mesh_diameter(flat.drop.surface), kPlane9);
    const EvolveResult oct = relax(TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2}), kPi / 6, 4,
                                   {std::nullopt, 0.01, kSeed});
    c.equal("octant_converged", oct.report.status == EvolveStatus::Converged, 1);
    c.less("octant_sphere_rms", sphere_rms(oct.drop.surface.vertices), kSphereRms);
  });

  run(10, "prism drop relaxes to a sphere", 120.0, [](Criterion& c) {
    const TrihedralConfig prism = TrihedralConfig::equilateral_prism(1.0, {1.2, 1.2, 1.2});
    const EvolveResult res = relax(prism, 10.0, 4, {std::nullopt, 0.01, kSeed});
    c.equal("converged", res.report.status == EvolveStatus::Converged, 1);
    c.less("sphere_rms", sphere_rms(res.drop.surface.vertices), kSphereRms);
    const SphericalCap cap = cylinder_cap(prism);
    const double side = cap.liquid_inside_ball ? 1.0 : -1.0;
    double worst = 0;
    for (const auto& p : prism.planes)
      worst = std::max(worst, std::abs(-side * p.signed_distance(cap.center) / cap.radius - std::cos(p.gamma())));
    c.less("cap_contact_cos_error", worst, kCapCos10);
  });

  run(11, "umbilicity separates sphere from cylinder", 10.0, [](Criterion& c) {
    const TriMeshDrop s = seed_mesh(TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2}), kPi / 6, 4);
    const double r = s.reference->radius;
    const double us = umbilicity_rms(s.surface, curvature_field(s.surface), r);
    const SurfaceMesh cyl = half_cylinder_mesh(r, 4);
    const double uc = umbilicity_rms(cyl, curvature_field(cyl), r);
    c.less("sphere_umbilicity", us, kUmbilic11);
    c.more("cylinder_over_sphere", uc / us, kSeparation11);
  });

  run(12, "radial-graph CMC residual", 1.0, [](Criterion& c) {
    double zero = 0, closed = 0;
    for (int k : {1, 3}) {
      const int nt = 20 * k, np = 10 * k;
      const double p0 = 0.15, dphi = (kPi - 2 * p0) / np;
      for (double radius : {0.3, 1.0, 4.0}) {
        SphericalGraphField f{Grid2D(nt, np, 0.0, p0, 2 * kPi / nt, dphi, radius), -1.0 / radius};
        zero = std::max(zero, spherical_cmc_residual(f).max_abs());
        f.h = 0.0;
        const Grid2D res = spherical_cmc_residual(f);
        for (int j = 1; j < np - 1; ++j)
          for (int i = 1; i < nt - 1; ++i)
            closed = std::max(closed, std::abs(res.at(i, j) - (-2.0 * std::sin(f.phi(j)))));
      }
    }
    c.at_most("residual_at_h", zero, kResidual12);
    c.at_most("closed_form_error_h0", closed, kResidual12);
  });

  run(13, "gradient check against central differences", 30.0, [](Criterion& c) {
    Rng r(kSeed + 13);
    std::normal_distribution<double> nd;
    const std::vector<std::pair<SupportConfig, double>> cases = {
        {WedgeConfig::canonical(kPi / 4, 2 * kPi / 3, 2 * kPi / 3), 1.0},
        {TrihedralConfig::orthogonal({1.1, 1.3, 1.7}), 1.0},
        {TrihedralConfig::equilateral_prism(1.0, {1.2, 1.2, 1.2}), 10.0}};
    double worst = 0;
    int probes = 0;
    for (std::size_t m = 0; m < cases.size(); ++m) {
      TriMeshDrop d = seed_mesh(cases[m].first, cases[m].second, 3, {std::nullopt, 0.05, kSeed + m});
      const EnergyContext ctx = EnergyContext::build(d);
      const EnergyEvaluation ev = evaluate(d, ctx, KernelMode::Serial);
      const double h = 1e-6 * mesh_diameter(d.surface);
      std::uniform_int_distribution<int> pick(0, static_cast<int>(d.surface.vertices.size()) - 1);
      for (int k = 0; k < 50; ++k, ++probes) {
        const int v = pick(r.g);
        int dim = 0;
        const Eigen::Matrix3d b = d.geometry.basis(d.tags[v], &dim);
        Vec3 dir = Vec3::Zero();
        for (int q = 0; q < dim; ++q) dir += nd(r.g) * b.col(q);
        dir.normalize();
        const Vec3 p = d.surface.vertices[v];
        d.surface.vertices[v] = p + h * dir;
        const double ep = energy(d, KernelMode::Serial).energy;
        d.surface.vertices[v] = p - h * dir;
        const double em = energy(d, KernelMode::Serial).energy;
        d.surface.vertices[v] = p;
        const double fd = (ep - em) / (2 * h);
        const double an = ev.grad_energy[v].dot(dir);
        worst = std::max(worst, std::abs(fd - an) / std::abs(an));
      }
    }
    c.equal("probes", probes, 150);
    c.less("max_relative_error", worst, kGradient13);
  });

  std::printf("%s: %d of 13 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
