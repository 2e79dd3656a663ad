#include "capvertex/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "capvertex/analytic.hpp"
#include "capvertex/diagnostics.hpp"
#include "capvertex/energy.hpp"
#include "capvertex/errors.hpp"
#include "capvertex/evolver.hpp"
#include "capvertex/geom_core.hpp"
#include "capvertex/graph_solver.hpp"
#include "capvertex/mesh_io.hpp"
#include "capvertex/seed.hpp"

namespace capvertex {

bool Check::pass() const {
  if (std::isnan(measured)) return false;
  if (comparison == "<") return measured < threshold;
  if (comparison == "<=") return measured <= threshold;
  if (comparison == ">") return measured > threshold;
  if (comparison == ">=") return measured >= threshold;
  if (comparison == "==") return measured == threshold;
  return false;
}

bool CriterionOutcome::pass() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

bool VerifyOutcome::pass() const {
  return std::all_of(criteria.begin(), criteria.end(),
                     [](const CriterionOutcome& c) { return c.pass(); });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"theorem1-wedge",    "theorem3-trihedral",
                                                 "theorem4-cylinder", "counterexample-v4",
                                                 "wente",             "formulas"};
  return names;
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "formulas") return {1, 2, 3, 4, 12};
  if (suite == "wente") return {7};
  if (suite == "counterexample-v4") return {5, 6};
  if (suite == "theorem1-wedge") return {8, 11, 13};
  if (suite == "theorem3-trihedral") return {9};
  if (suite == "theorem4-cylinder") return {10};
  throw DomainError("unknown suite '" + suite + "'");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double deg(double rad) { return rad * 180.0 / kPi; }

CriterionOutcome make(int id, const char* title, const char* oracle, double limit) {
  CriterionOutcome c;
  c.id = id;
  c.title = title;
  c.oracle = oracle;
  c.time_limit_s = limit;
  return c;
}

void add(CriterionOutcome& c, std::string q, double measured, const char* cmp, double threshold) {
  c.checks.push_back({std::move(q), measured, cmp, threshold});
}

CriterionOutcome classification_grid() {
  auto c = make(1, "classification oracle equivalence",
                "closed-form rectangle test |g1+g2-pi| < 2a, |g1-g2| < pi-2a", 1.0);
  long disagreements = 0, compared = 0;
  for (double alpha : {kPi / 6, kPi / 4, kPi / 3}) {
    for (int i = 0; i < 181; ++i) {
      for (int j = 0; j < 181; ++j) {
        const double g1 = i * kPi / 180.0, g2 = j * kPi / 180.0;
        const double m_sum = 2 * alpha - std::abs(g1 + g2 - kPi);
        const double m_diff = (kPi - 2 * alpha) - std::abs(g1 - g2);
        if (std::abs(m_sum) < 1e-6 || std::abs(m_diff) < 1e-6) continue;
        ++compared;
        const bool inside = m_sum > 0 && m_diff > 0;
        if ((vertex_numerator(alpha, g1, g2) > 0) != inside) ++disagreements;
      }
    }
  }
  add(c, "disagreements", static_cast<double>(disagreements), "==", 0);
  add(c, "compared points", static_cast<double>(compared), ">", 0);
  return c;
}

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

  // Uniform wedge data conditioned on the interior of the admissible rectangle.
  std::array<double, 3> interior_wedge(bool equal_angles = false) {
    while (true) {
      const double a = uniform(0.02, kPi / 2 - 0.02);
      const double g1 = uniform(0.0, kPi);
      const double g2 = equal_angles ? g1 : uniform(0.0, kPi);
      if (classify_data(a, g1, g2).tag == AdmissibilityTag::InteriorQ) return {a, g1, g2};
    }
  }
};

CriterionOutcome identity_samples(std::uint64_t seed) {
  auto c = make(2, "vertex-angle identity and equal-angle bound",
                "sin^2 + cos^2 = 1; 2beta <= 2alpha for equal angles", 1.0);
  Sampler s(seed);
  double worst = 0.0, excess = -kPi;
  for (int k = 0; k < 10000; ++k) {
    const auto [a, g1, g2] = s.interior_wedge();
    const VertexAngleResult v = vertex_angle(a, g1, g2);
    worst = std::max(worst, std::abs(v.sin_sq_two_beta - (1.0 - v.cos_two_beta * v.cos_two_beta)));
  }
  for (int k = 0; k < 10000; ++k) {
    const auto [a, g, g_] = s.interior_wedge(true);
    excess = std::max(excess, vertex_angle(a, g, g_).two_beta - 2 * a);
  }
  add(c, "max identity residual", worst, "<", 1e-12);
  add(c, "max 2beta - 2alpha (equal angles)", excess, "<=", 1e-12);
  return c;
}

CriterionOutcome cap_cross_validation(std::uint64_t seed) {
  auto c = make(3, "cap vertex angle and existence cross-validation",
                "contact-circle tangents of the analytic cap; center-distance existence test",
                5.0);
  Sampler s(seed ^ 0x3ULL);
  double worst = 0.0;
  long bad_vertices = 0;
  for (int k = 0; k < 100; ++k) {
    const auto [a, g1, g2] = s.interior_wedge();
    const WedgeConfig w = WedgeConfig::canonical(a, g1, g2);
    const SphericalCap cap = wedge_cap(w, -1.0);
    if (cap.vertices.size() != 2) ++bad_vertices;
    const double pred = vertex_angle(a, g1, g2).two_beta;
    for (const Vec3& v : cap.vertices)
      worst = std::max(worst, std::abs(cap_vertex_angle(cap, w.plane1, w.plane2, v) - pred));
  }
  // Existence: the sphere of radius 1 whose center sits at distance
  // cos(g_j) / h from both walls reaches the edge.
  long mismatches = 0;
  for (int k = 0; k < 100; ++k) {
    const double a = s.uniform(0.02, kPi / 2 - 0.02);
    const double g1 = s.uniform(0.0, kPi), g2 = s.uniform(0.0, kPi);
    const WedgeConfig w = WedgeConfig::canonical(a, g1, g2);
    Eigen::Matrix2d m;
    m << w.plane1.normal().x(), w.plane1.normal().y(), w.plane2.normal().x(), w.plane2.normal().y();
    const Eigen::Vector2d ctr = m.inverse() * Eigen::Vector2d(-std::cos(g1), -std::cos(g2));
    const bool reaches = ctr.squaredNorm() < 1.0;
    const bool interior = classify_data(a, g1, g2).tag == AdmissibilityTag::InteriorQ;
    bool built = false;
    try {
      built = wedge_cap(w, -1.0).vertices.size() == 2;
    } catch (const NoSolution&) {
    }
    if (reaches != interior || built != interior) ++mismatches;
  }
  add(c, "max |measured 2beta - formula|", worst, "<", 1e-9);
  add(c, "caps without two vertices", static_cast<double>(bad_vertices), "==", 0);
  add(c, "existence mismatches", static_cast<double>(mismatches), "==", 0);
  return c;
}

Vec3 random_unit(Sampler& s) {
  std::normal_distribution<double> n;
  Vec3 v(n(s.rng), n(s.rng), n(s.rng));
  return v.normalized();
}

CriterionOutcome trihedral_construction(std::uint64_t seed) {
  auto c = make(4, "trihedral sphere construction",
                "plane contact cosines of the constructed sphere; apex incidence", 5.0);
  Sampler s(seed ^ 0x4ULL);
  double worst = 0.0;
  int built = 0, attempts = 0;
  while (built < 100 && attempts < 100000) {
    ++attempts;
    std::array<Vec3, 3> n{random_unit(s), random_unit(s), random_unit(s)};
    if (std::abs(n[0].dot(n[1].cross(n[2]))) < 0.2) continue;
    const std::array<PlaneSupport, 3> planes{PlaneSupport(n[0], 0.0, s.uniform(0.0, kPi)),
                                             PlaneSupport(n[1], 0.0, s.uniform(0.0, kPi)),
                                             PlaneSupport(n[2], 0.0, s.uniform(0.0, kPi))};
    const double h = (s.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * s.uniform(0.5, 2.0);
    try {
      const TrihedralConfig t = TrihedralConfig::from_planes(planes);
      const TrihedralSolution sol = trihedral_cap(t, h);
      const SphericalCap& cap = std::get<SphericalCap>(sol);
      for (const auto& p : t.planes)
        worst = std::max(worst, std::abs(cap_contact_cos(cap, p) - std::cos(p.gamma())));
      ++built;
    } catch (const NoSolution&) {
    } catch (const DomainError&) {
    }
  }
  const double g0 = std::acos(std::sqrt(3.0) / 3.0);
  long flag_errors = 0;
  for (double d : {0.0, -1e-2, -1e-3, 1e-3, 1e-2, -0.1, 0.2}) {
    const double g = g0 + d;
    const auto sol = trihedral_cap(TrihedralConfig::orthogonal({g, g, g}), d < 0 ? 1.0 : -1.0);
    if (std::get<SphericalCap>(sol).degenerate != (d == 0.0)) ++flag_errors;
  }
  add(c, "configurations built", built, "==", 100);
  add(c, "max |cos measured - cos gamma|", worst, "<", 1e-12);
  add(c, "degenerate flag errors", static_cast<double>(flag_errors), "==", 0);
  return c;
}

RectangleProblem rectangle(double a, double b, double gamma, int n) {
  RectangleProblem p;
  p.a = a;
  p.b = b;
  p.gammas.fill(gamma);
  p.grid_n = n;
  return p;
}

double graph_sphere_rms(const Grid2D& u) {
  const SphereFit f = fit_sphere(height_field_mesh(u).vertices);
  return f.plane_fallback ? 0.0 : f.relative_rms;
}

struct SquareRun {
  std::vector<double> errors;
  double rms128 = kNaN;
};

SquareRun square_cap_runs() {
  SquareRun out;
  for (int n : {32, 64, 128}) {
    const RectangleProblem p = rectangle(1.0, 1.0, kPi / 3, n);
    const GraphField sol = solve_rectangle(p);
    const auto exact = exact_cap_field(p, RectangleGrid::from_problem(p));
    if (!exact) throw ConsistencyError("square data should admit the exact cap");
    out.errors.push_back(gauge_aligned_max_error(sol.u, *exact));
    if (n == 128) out.rms128 = graph_sphere_rms(sol.u);
  }
  return out;
}

CriterionOutcome pde_square() {
  auto c = make(5, "square PDE against the exact cap", "radius-1 spherical cap", 60.0);
  const SquareRun r = square_cap_runs();
  const double o1 = std::log2(r.errors[0] / r.errors[1]);
  const double o2 = std::log2(r.errors[1] / r.errors[2]);
  add(c, "max error grid_n=128", r.errors[2], "<=", 5e-3);
  add(c, "min observed order", std::min(o1, o2), ">=", 1.9);
  return c;
}

CriterionOutcome pde_nonspherical() {
  auto c = make(6, "non-sphericity of the 1x2 rectangle solution",
                "sphere-fit RMS of the square solution", 60.0);
  const SquareRun r = square_cap_runs();
  const GraphField sol = solve_rectangle(rectangle(1.0, 2.0, 1.2, 128));
  const double rms = graph_sphere_rms(sol.u);
  add(c, "sphere-fit relative RMS", rms, ">", 0.0);
  add(c, "RMS ratio to square solution", rms / r.rms128, ">=", 20.0);
  return c;
}

CriterionOutcome wente_example() {
  auto c = make(7, "half-cylinder example", "exact derivatives of the half-cylinder", 1.0);
  double worst = 0.0, compat = 0.0;
  for (auto [a, b] : {std::pair{1.0, 1.0}, {3.0, 2.0}, {1.0, 2.5}, {0.7, 0.3}}) {
    const HalfCylinderSolution w = wente_halfcylinder(a, b);
    const int ny = 400;
    Grid2D samples(20, ny, 0.0, 0.05 * b, a / 20, 0.9 * b / ny);
    GraphDerivatives d = [&](double, double y) {
      return std::array<double, 5>{0.0, w.slope(y), 0.0, 0.0, w.curvature(y)};
    };
    worst = std::max(worst, cartesian_cmc_residual(d, 1.0 / b, samples).max_abs());
    compat = std::max(compat, std::abs(compatibility_h(a, b, {0.0, kPi / 2, 0.0, kPi / 2}) - 1.0 / b));
  }
  add(c, "max |div Tu - 2/b|", worst, "<", 1e-10);
  add(c, "max |compatibility_h - 1/b|", compat, "==", 0.0);
  return c;
}

struct EvolveRun {
  EvolveResult result;
  DiagnosticsReport diag;
};

EvolveRun run_evolve(const SupportConfig& support, double volume, int r, SeedOptions so,
                     EvolveOptions eo) {
  const TriMeshDrop seed = seed_mesh(support, volume, r, so);
  EvolveRun out{evolve(seed, eo), {}};
  out.diag = diagnose(out.result.drop);
  return out;
}

double converged(const EvolveRun& r) {
  return r.result.report.status == EvolveStatus::Converged ? 1.0 : 0.0;
}

double max_of(const std::vector<double>& v) {
  double m = v.empty() ? kNaN : 0.0;
  for (double x : v) m = std::isnan(x) ? x : std::max(m, x);
  return m;
}

CriterionOutcome theorem1_wedge(std::uint64_t seed) {
  auto c = make(8, "wedge drop evolves to a sphere",
                "sphere fit; vertex angle arccos(1/3) for 2a = pi/2, g = 2pi/3", 120.0);
  EvolveOptions eo;
  eo.grad_tol = 1e-7;
  eo.max_iters = 4000;
  const EvolveRun r = run_evolve(WedgeConfig::canonical(kPi / 4, 2 * kPi / 3, 2 * kPi / 3), 1.0,
                                 4, {std::nullopt, 0.01, seed}, eo);
  double dev = r.diag.vertex_angles.empty() ? kNaN : 0.0;
  for (const auto& s : r.diag.vertex_angles)
    dev = std::max(dev, std::abs(s.measured - std::acos(1.0 / 3.0)));
  add(c, "converged", converged(r), "==", 1.0);
  add(c, "sphere-fit relative RMS", r.diag.sphere_fit.relative_rms, "<", 1e-3);
  add(c, "mean-curvature cv", r.diag.mean_curvature.cv, "<", 1e-2);
  add(c, "max contact-angle error (deg)", deg(max_of(r.diag.contact_angle_errors)), "<", 1.0);
  add(c, "max vertex-angle deviation (deg)", deg(dev), "<", 2.0);
  return c;
}

CriterionOutcome theorem3_trihedral(std::uint64_t seed) {
  auto c = make(9, "trihedral drops: planar and spherical",
                "best-fit plane at H = 0; sphere fit at fixed volume", 120.0);
  const double g0 = std::acos(std::sqrt(3.0) / 3.0);
  EvolveOptions eo;
  eo.grad_tol = 1e-7;
  eo.max_iters = 4000;
  eo.volume_mode = VolumeMode::Pressure;
  const EvolveRun planar =
      run_evolve(TrihedralConfig::orthogonal({g0, g0, g0}), 1.0, 4, {0.0, 0.01, seed}, eo);
  eo.volume_mode = VolumeMode::Fixed;
  const EvolveRun octant = run_evolve(TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2}),
                                      kPi / 6, 4, {std::nullopt, 0.01, seed}, eo);
  add(c, "planar converged", converged(planar), "==", 1.0);
  add(c, "plane max distance / diameter",
      planar.diag.plane_fit.max_distance / planar.diag.diameter, "<", 1e-4);
  add(c, "octant converged", converged(octant), "==", 1.0);
  add(c, "octant sphere-fit relative RMS", octant.diag.sphere_fit.relative_rms, "<", 1e-3);
  return c;
}

CriterionOutcome theorem4_cylinder(std::uint64_t seed) {
  auto c = make(10, "prism drop evolves to a sphere",
                "sphere fit; contact cosines of the analytic cylinder cap", 120.0);
  const TrihedralConfig prism = TrihedralConfig::equilateral_prism(1.0, {1.2, 1.2, 1.2});
  EvolveOptions eo;
  eo.grad_tol = 1e-7;
  eo.max_iters = 4000;
  const EvolveRun r = run_evolve(prism, 10.0, 4, {std::nullopt, 0.01, seed}, eo);
  const SphericalCap cap = cylinder_cap(prism);
  double worst = 0.0;
  for (const auto& p : prism.planes)
    worst = std::max(worst, std::abs(cap_contact_cos(cap, p) - std::cos(p.gamma())));
  add(c, "converged", converged(r), "==", 1.0);
  add(c, "sphere-fit relative RMS", r.diag.sphere_fit.relative_rms, "<", 1e-3);
  add(c, "max |cos measured - cos gamma| (cap)", worst, "<", 1e-12);
  return c;
}

CriterionOutcome umbilicity_separation() {
  auto c = make(11, "umbilicity separates sphere from cylinder",
                "sampled unit sphere and unit half-cylinder", 10.0);
  const TriMeshDrop sphere =
      seed_mesh(TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2}), kPi / 6, 4);
  const double us = umbilicity_rms(sphere.surface, curvature_field(sphere.surface), 1.0);
  const SurfaceMesh cyl = half_cylinder_mesh(1.0, 4);
  const double uc = umbilicity_rms(cyl, curvature_field(cyl), 1.0);
  add(c, "sphere umbilicity RMS", us, "<", 5e-2);
  add(c, "cylinder / sphere umbilicity", uc / us, ">", 10.0);
  return c;
}

CriterionOutcome spherical_residual() {
  auto c = make(12, "radial-graph CMC residual", "u = R with H = -1/R; closed form at H = 0", 1.0);
  double zero = 0.0, closed = 0.0;
  for (int refine : {1, 2, 4}) {
    const int nt = 16 * refine, np = 12 * refine;
    const double dphi = (kPi - 0.4) / np;
    for (double radius : {0.5, 1.0, 2.5}) {
      SphericalGraphField f{Grid2D(nt, np, 0.0, 0.2, 2 * kPi / nt, dphi, radius), -1 / radius};
      zero = std::max(zero, spherical_cmc_residual(f).max_abs());
      f.h = 0.0;
      const Grid2D r = spherical_cmc_residual(f);
      for (int j = 1; j < np - 1; ++j)
        for (int i = 1; i < nt - 1; ++i)
          closed = std::max(closed, std::abs(r.at(i, j) + 2 * std::sin(f.phi(j))));
    }
  }
  add(c, "max residual at H = -1/R", zero, "<=", 1e-12);
  add(c, "max |residual + 2 sin(phi)| at H = 0", closed, "<=", 1e-12);
  return c;
}

CriterionOutcome gradient_check(std::uint64_t seed) {
  auto c = make(13, "energy and volume gradients", "central finite differences", 30.0);
  Sampler s(seed ^ 0xdULL);
  const std::array<SupportConfig, 3> supports = {
      WedgeConfig::canonical(kPi / 4, 2 * kPi / 3, 2 * kPi / 3),
      TrihedralConfig::orthogonal({kPi / 2, kPi / 2, kPi / 2}),
      TrihedralConfig::equilateral_prism(1.0, {1.2, 1.2, 1.2})};
  const std::array<double, 3> volumes = {1.0, kPi / 6, 10.0};
  double worst = 0.0;
  int probes = 0;
  for (int m = 0; m < 3; ++m) {
    TriMeshDrop drop = seed_mesh(supports[m], volumes[m], 2, {std::nullopt, 0.05, seed + m});
    const EnergyContext ctx = EnergyContext::build(drop);
    const EnergyEvaluation ev = evaluate(drop, ctx, KernelMode::Serial);
    double gscale = 0.0;
    for (const Vec3& g : ev.grad_energy) gscale = std::max(gscale, g.norm());
    const double eps = 1e-6 * mesh_diameter(drop.surface);
    const int n = static_cast<int>(drop.surface.vertices.size());
    for (int k = 0; k < 50; ++k, ++probes) {
      const int v = std::uniform_int_distribution<int>(0, n - 1)(s.rng);
      int dim = 0;
      const Eigen::Matrix3d basis = drop.geometry.basis(drop.tags[v], &dim);
      Vec3 dir = Vec3::Zero();
      std::normal_distribution<double> nd;
      for (int q = 0; q < dim; ++q) dir += nd(s.rng) * basis.col(q);
      dir.normalize();
      const Vec3 p0 = drop.surface.vertices[v];
      drop.surface.vertices[v] = p0 + eps * dir;
      const EnergyBreakdown plus = evaluate(drop, ctx, KernelMode::Serial, false).values;
      drop.surface.vertices[v] = p0 - eps * dir;
      const EnergyBreakdown minus = evaluate(drop, ctx, KernelMode::Serial, false).values;
      drop.surface.vertices[v] = p0;
      const double fe = (plus.energy - minus.energy) / (2 * eps);
      const double fv = (plus.volume - minus.volume) / (2 * eps);
      const double ae = ev.grad_energy[v].dot(dir);
      const double av = ev.grad_volume[v].dot(dir);
      // Components far below the gradient scale are compared against that scale.
      const double floor = 1e-3 * gscale;
      worst = std::max(worst, std::abs(fe - ae) / std::max({std::abs(ae), floor}));
      worst = std::max(worst, std::abs(fv - av) / std::max({std::abs(av), floor}));
    }
  }
  add(c, "probes", probes, "==", 150);
  add(c, "max relative error", worst, "<", 1e-5);
  return c;
}

}  // namespace

CriterionOutcome run_criterion(int id, std::uint64_t seed) {
  switch (id) {
    case 1: return classification_grid();
    case 2: return identity_samples(seed);
    case 3: return cap_cross_validation(seed);
    case 4: return trihedral_construction(seed);
    case 5: return pde_square();
    case 6: return pde_nonspherical();
    case 7: return wente_example();
    case 8: return theorem1_wedge(seed);
    case 9: return theorem3_trihedral(seed);
    case 10: return theorem4_cylinder(seed);
    case 11: return umbilicity_separation();
    case 12: return spherical_residual();
    case 13: return gradient_check(seed);
    default: break;
  }
  throw DomainError("criterion id must be in [1, 13]");
}

std::vector<VerifyOutcome> verify_suite(const std::string& suite, std::uint64_t seed) {
  std::vector<VerifyOutcome> out;
  for (int id : suite_criteria(suite)) {
    VerifyOutcome o;
    o.scenario = suite + "/" + std::to_string(id);
    o.criteria.push_back(run_criterion(id, seed));
    out.push_back(std::move(o));
  }
  return out;
}

std::string to_json(const std::vector<VerifyOutcome>& outcomes, const std::string& suite,
                    std::uint64_t seed) {
  using ojson = nlohmann::ordered_json;
  auto num = [](double x) -> ojson {
    if (!std::isfinite(x)) return nullptr;
    return x;
  };
  ojson j;
  j["suite"] = suite;
  j["seed"] = seed;
  bool all = true;
  ojson list = ojson::array();
  for (const auto& o : outcomes) {
    ojson oj;
    oj["scenario"] = o.scenario;
    oj["pass"] = o.pass();
    all = all && o.pass();
    ojson crit = ojson::array();
    for (const auto& c : o.criteria) {
      ojson cj;
      cj["id"] = c.id;
      cj["title"] = c.title;
      cj["oracle"] = c.oracle;
      cj["pass"] = c.pass();
      ojson checks = ojson::array();
      for (const auto& k : c.checks)
        checks.push_back({{"quantity", k.quantity},
                          {"measured", num(k.measured)},
                          {"comparison", k.comparison},
                          {"threshold", num(k.threshold)},
                          {"pass", k.pass()}});
      cj["checks"] = checks;
      crit.push_back(cj);
    }
    oj["criteria"] = crit;
    list.push_back(oj);
  }
  j["pass"] = all;
  j["outcomes"] = list;
  return j.dump(2) + "\n";
}

}  // namespace capvertex
