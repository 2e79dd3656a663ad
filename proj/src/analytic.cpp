#include "capvertex/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capvertex/errors.hpp"

namespace capvertex {

namespace {

bool admissible_pair(double alpha, double g1, double g2) {
  const AdmissibilityTag tag = classify_data(alpha, g1, g2).tag;
  return tag == AdmissibilityTag::InteriorQ || tag == AdmissibilityTag::BoundaryQ_D1;
}

// Crossings of the sphere with a line, as line parameters (ascending).
std::vector<double> sphere_line_crossings(const Vec3& center, double radius, const Line& line,
                                          double touch_tol) {
  const Vec3 rel = center - line.point;
  const double t0 = rel.dot(line.dir);
  const double rho2 = (rel - t0 * line.dir).squaredNorm();
  const double disc = radius * radius - rho2;
  if (disc < -touch_tol * radius * radius) return {};
  if (disc <= touch_tol * radius * radius) return {t0};
  const double s = std::sqrt(disc);
  return {t0 - s, t0 + s};
}

// Pick the crossing facing the cap: the one maximizing (p - c).m.
Vec3 pick_crossing(const SphericalCap& cap, const Line& line, const std::vector<double>& ts,
                   const Vec3& pole, double t_min) {
  bool found = false;
  Vec3 best = Vec3::Zero();
  double best_score = -1e300;
  for (double t : ts) {
    if (t < t_min) continue;
    const Vec3 p = line.at(t);
    const double score = (p - cap.center).dot(pole);
    if (score > best_score) {
      best_score = score;
      best = p;
      found = true;
    }
  }
  if (!found) throw NoSolution("sphere does not reach a support edge");
  return best;
}

Vec3 cap_pole(const SphericalCap& cap, const Vec3& nu_pole) {
  return cap.liquid_inside_ball ? nu_pole : Vec3(-nu_pole);
}

}  // namespace

Vec3 SphericalCap::outward_normal(const Vec3& x) const {
  const Vec3 radial = (x - center) / radius;
  return liquid_inside_ball ? radial : Vec3(-radial);
}

SphericalCap wedge_cap(const WedgeConfig& config, double h) {
  if (h == 0.0 || !std::isfinite(h)) throw DomainError("wedge cap requires nonzero h");
  const AdmissibilityClass cls = classify_data(config.alpha, config.gamma1(), config.gamma2());
  if (cls.tag != AdmissibilityTag::InteriorQ && cls.tag != AdmissibilityTag::BoundaryQ_D1)
    throw NoSolution(std::string("no spherical cap for ") + std::string(to_string(cls.tag)) +
                     " data");

  const Vec3& n1 = config.plane1.normal();
  const Vec3& n2 = config.plane2.normal();
  const double d1 = config.plane1.beta() / h;
  const double d2 = config.plane2.beta() / h;
  const double c = n1.dot(n2);
  const double det = 1.0 - c * c;
  const double a = (d1 - c * d2) / det;
  const double b = (d2 - c * d1) / det;

  SphericalCap cap(config);
  cap.center = config.edge.point + a * n1 + b * n2;
  cap.radius = 1.0 / std::abs(h);
  cap.h_signed = h;
  cap.liquid_inside_ball = h < 0.0;

  const double rho = (a * n1 + b * n2).norm();
  const double r = cap.radius;
  if (cls.tag == AdmissibilityTag::InteriorQ) {
    if (!(rho < r)) throw ConsistencyError("interior data but sphere misses the edge");
    const double s = std::sqrt((r - rho) * (r + rho));
    cap.vertices = {config.edge.at(-s), config.edge.at(s)};
  } else {
    cap.vertices = {config.edge.point};
  }
  return cap;
}

TrihedralSolution trihedral_cap(const TrihedralConfig& config, double h) {
  if (config.kind != TrihedralKind::Apex) throw DomainError("trihedral cap needs an apex");
  static constexpr int kPairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (const auto& pr : kPairs) {
    const int j = pr[0];
    const int k = pr[1];
    if (!admissible_pair(config.half_opening(j, k), config.planes[j].gamma(),
                         config.planes[k].gamma())) {
      std::ostringstream os;
      os << "contact angles on planes " << j << "," << k << " are not admissible";
      throw NoSolution(os.str());
    }
  }

  if (h == 0.0) {
    Eigen::Matrix3d n;
    Vec3 rhs;
    for (int j = 0; j < 3; ++j) {
      n.row(j) = config.planes[j].normal().transpose();
      rhs[j] = config.planes[j].beta();
    }
    const Vec3 m = n.partialPivLu().solve(rhs);
    if (std::abs(m.norm() - 1.0) > 1e-10)
      throw NoSolution("no plane meets all three walls in the prescribed angles");
    return PlanarSolution{m, m.dot(config.apex) + 1.0, config};
  }

  // Lines of centers for the pairs (0,1) and (1,2): points at signed
  // distance cos(gamma)/h from both planes of the pair.
  auto center_line = [&](int j, int k) {
    const PlaneSupport pj(config.planes[j].normal(),
                          config.planes[j].offset() + config.planes[j].beta() / h, 0.0);
    const PlaneSupport pk(config.planes[k].normal(),
                          config.planes[k].offset() + config.planes[k].beta() / h, 0.0);
    return intersection_line(pj, pk);
  };
  const Line l01 = center_line(0, 1);
  const Line l12 = center_line(1, 2);

  // Least-squares closest points of the two lines.
  Eigen::Matrix<double, 3, 2> m;
  m.col(0) = l01.dir;
  m.col(1) = -l12.dir;
  const Eigen::Vector2d st = m.colPivHouseholderQr().solve(l12.point - l01.point);
  const Vec3 p1 = l01.at(st[0]);
  const Vec3 p2 = l12.at(st[1]);
  const double scale = std::max(1.0, 1.0 / std::abs(h));
  if ((p1 - p2).norm() > 1e-10 * scale)
    throw ConsistencyError("lines of centers do not intersect");

  SphericalCap cap(config);
  cap.center = 0.5 * (p1 + p2);
  cap.radius = 1.0 / std::abs(h);
  cap.h_signed = h;
  cap.liquid_inside_ball = h < 0.0;

  for (int j = 0; j < 3; ++j) {
    const double err = config.planes[j].signed_distance(cap.center) - config.planes[j].beta() / h;
    if (std::abs(err) > 1e-12 * scale) {
      std::ostringstream os;
      os << "constructed center violates plane " << j << " by " << err;
      throw ConsistencyError(os.str());
    }
  }

  cap.degenerate = std::abs((cap.center - config.apex).norm() - cap.radius) <= 1e-9 * cap.radius;

  const Vec3 nu = (config.planes[0].normal() + config.planes[1].normal() +
                   config.planes[2].normal()).normalized();
  const Vec3 pole = cap_pole(cap, nu);
  if (!cap.degenerate) {
    for (const auto& pr : kPairs) {
      const Line edge = config.edge(pr[0], pr[1]);
      const auto ts = sphere_line_crossings(cap.center, cap.radius, edge, 1e-14);
      cap.vertices.push_back(pick_crossing(cap, edge, ts, pole, -1e-12 * cap.radius));
    }
  }
  return cap;
}

double cylinder_h(const TrihedralConfig& config) {
  if (config.kind != TrihedralKind::Cylinder) throw DomainError("cylinder_h needs a prism");
  const Vec3& g = config.generator;
  const auto& p = config.planes;
  const Vec3 w(g.dot(p[1].normal().cross(p[2].normal())), g.dot(p[2].normal().cross(p[0].normal())),
               g.dot(p[0].normal().cross(p[1].normal())));
  double wd = 0.0;
  double wc = 0.0;
  double wabs = 0.0;
  for (int j = 0; j < 3; ++j) {
    wd += w[j] * p[j].offset();
    wc += w[j] * p[j].beta();
    wabs += std::abs(w[j]);
  }
  if (std::abs(wd) < 1e-14) throw DomainError("prism walls meet in a line");
  if (std::abs(wc) <= 1e-14 * wabs) return 0.0;
  return -wc / wd;
}

SphericalCap cylinder_cap(const TrihedralConfig& config, std::optional<double> h_opt) {
  if (config.kind != TrihedralKind::Cylinder) throw DomainError("cylinder cap needs a prism");
  static constexpr int kPairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (const auto& pr : kPairs) {
    if (!admissible_pair(config.half_opening(pr[0], pr[1]), config.planes[pr[0]].gamma(),
                         config.planes[pr[1]].gamma()))
      throw NoSolution("contact angles on adjacent prism walls are not admissible");
  }
  const double h_consistent = cylinder_h(config);
  const double h = h_opt.value_or(h_consistent);
  if (h == 0.0 || std::abs(h_consistent) < 1e-14)
    throw NoSolution("prism data admit only a plane orthogonal to the generator");

  // Center in the cross-section through the origin: solve two wall
  // equations, then check the third.
  const Vec3& g = config.generator;
  Eigen::Matrix3d a;
  Vec3 rhs;
  a.row(0) = config.planes[0].normal().transpose();
  a.row(1) = config.planes[1].normal().transpose();
  a.row(2) = g.transpose();
  rhs << config.planes[0].offset() + config.planes[0].beta() / h,
      config.planes[1].offset() + config.planes[1].beta() / h, 0.0;
  const Vec3 center = a.partialPivLu().solve(rhs);
  const double scale = std::max(1.0, 1.0 / std::abs(h));
  const double err = config.planes[2].signed_distance(center) - config.planes[2].beta() / h;
  if (std::abs(err) > 1e-10 * scale) throw NoSolution("h inconsistent with the prism data");

  SphericalCap cap(config);
  cap.center = center;
  cap.radius = 1.0 / std::abs(h);
  cap.h_signed = h;
  cap.liquid_inside_ball = h < 0.0;
  const Vec3 pole = cap_pole(cap, g);
  for (const auto& pr : kPairs) {
    const Line edge = config.edge(pr[0], pr[1]);
    const auto ts = sphere_line_crossings(cap.center, cap.radius, edge, 1e-14);
    cap.vertices.push_back(pick_crossing(cap, edge, ts, pole, -1e300));
  }
  return cap;
}

double cap_contact_cos(const SphericalCap& cap, const PlaneSupport& plane) {
  const Vec3& n = plane.normal();
  const Vec3 foot = plane.project(cap.center);
  const double dist = plane.signed_distance(cap.center);
  const double rho2 = cap.radius * cap.radius - dist * dist;
  if (rho2 < 0.0) throw NoSolution("sphere does not meet the plane");
  Vec3 u = n.unitOrthogonal();
  const Vec3 x = foot + std::sqrt(rho2) * u;
  return cap.outward_normal(x).dot(n);
}

double cap_vertex_angle(const SphericalCap& cap, const PlaneSupport& a, const PlaneSupport& b,
                        const Vec3& vertex) {
  const Vec3 edge_dir = a.normal().cross(b.normal()).normalized();
  auto tangent = [&](const PlaneSupport& own, const PlaneSupport& other) {
    const Vec3 circle_center = own.project(cap.center);
    Vec3 t = own.normal().cross(vertex - circle_center).normalized();
    Vec3 wall = edge_dir.cross(own.normal());
    if (wall.dot(other.normal()) < 0.0) wall = -wall;
    if (t.dot(wall) < 0.0) t = -t;
    return t;
  };
  const Vec3 ta = tangent(a, b);
  const Vec3 tb = tangent(b, a);
  return std::acos(std::clamp(ta.dot(tb), -1.0, 1.0));
}

WedgeConfig scaled(const WedgeConfig& config, double s) {
  const PlaneSupport p1(config.plane1.normal(), s * config.plane1.offset(), config.gamma1());
  const PlaneSupport p2(config.plane2.normal(), s * config.plane2.offset(), config.gamma2());
  WedgeConfig out = WedgeConfig::from_planes(p1, p2);
  out.edge = Line{s * config.edge.point, config.edge.dir};
  return out;
}

TrihedralConfig scaled(const TrihedralConfig& config, double s) {
  std::array<PlaneSupport, 3> planes = config.planes;
  for (auto& p : planes) p = PlaneSupport(p.normal(), s * p.offset(), p.gamma());
  TrihedralConfig out = TrihedralConfig::from_planes(planes);
  if (out.kind == TrihedralKind::Cylinder && out.generator.dot(config.generator) < 0)
    out.generator = -out.generator;
  return out;
}

SphericalCap scaled(const SphericalCap& cap, double s) {
  SphericalCap out = cap;
  out.center = s * cap.center;
  out.radius = s * cap.radius;
  out.h_signed = cap.h_signed / s;
  for (auto& v : out.vertices) v *= s;
  std::visit([&](const auto& c) { out.config = scaled(c, s); }, cap.config);
  return out;
}

HalfCylinderSolution wente_halfcylinder(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("rectangle sides must be positive");
  return HalfCylinderSolution{a, b, Line{Vec3(0.0, b / 2, 0.0), Vec3::UnitX()}, b / 2, 1.0 / b};
}

double HalfCylinderSolution::height(double y) const {
  const double s = y - b / 2;
  return -std::sqrt(std::max(0.0, radius * radius - s * s));
}

double HalfCylinderSolution::slope(double y) const {
  const double s = y - b / 2;
  return s / std::sqrt(radius * radius - s * s);
}

double HalfCylinderSolution::curvature(double y) const {
  const double s = y - b / 2;
  const double q = radius * radius - s * s;
  return radius * radius / (q * std::sqrt(q));
}

double div_tu(const std::array<double, 5>& d) {
  const double ux = d[0], uy = d[1], uxx = d[2], uxy = d[3], uyy = d[4];
  const double w2 = 1.0 + ux * ux + uy * uy;
  return ((1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy) /
         (w2 * std::sqrt(w2));
}

Grid2D cartesian_cmc_residual(const GraphDerivatives& u, double h, const Grid2D& samples) {
  Grid2D out = samples;
  for (int j = 0; j < out.ny; ++j)
    for (int i = 0; i < out.nx; ++i) out.at(i, j) = div_tu(u(out.x(i), out.y(j))) - 2.0 * h;
  return out;
}

namespace {

inline double tu_component(double p, double q) { return p / std::sqrt(1.0 + p * p + q * q); }

}  // namespace

Grid2D cartesian_cmc_residual(const Grid2D& u, double h) {
  if (u.nx < 3 || u.ny < 3) throw DomainError("residual needs at least 3 samples per axis");
  Grid2D out = u;
  std::fill(out.values.begin(), out.values.end(), std::numeric_limits<double>::quiet_NaN());
  const double dx = u.dx;
  const double dy = u.dy;
  auto fx = [&](int i, int j) {  // flux through the face between (i, j) and (i + 1, j)
    const double p = (u.at(i + 1, j) - u.at(i, j)) / dx;
    const double q =
        (u.at(i, j + 1) - u.at(i, j - 1) + u.at(i + 1, j + 1) - u.at(i + 1, j - 1)) / (4.0 * dy);
    return tu_component(p, q);
  };
  auto fy = [&](int i, int j) {  // face between (i, j) and (i, j + 1)
    const double p = (u.at(i, j + 1) - u.at(i, j)) / dy;
    const double q =
        (u.at(i + 1, j) - u.at(i - 1, j) + u.at(i + 1, j + 1) - u.at(i - 1, j + 1)) / (4.0 * dx);
    return tu_component(p, q);
  };
  for (int j = 1; j < u.ny - 1; ++j) {
    for (int i = 1; i < u.nx - 1; ++i) {
      const double div = (fx(i, j) - fx(i - 1, j)) / dx + (fy(i, j) - fy(i, j - 1)) / dy;
      out.at(i, j) = div - 2.0 * h;
    }
  }
  return out;
}

double SphericalGraphField::w(int i, int j) const {
  const double ut = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * u.dx);
  const double up = (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * u.dy);
  const double s = std::sin(phi(j));
  const double v = u.at(i, j);
  return std::sqrt((v * v + up * up) * s * s + ut * ut);
}

Grid2D spherical_cmc_residual(const SphericalGraphField& f) {
  const Grid2D& u = f.u;
  if (u.nx < 3 || u.ny < 3) throw DomainError("residual needs at least 3 samples per axis");
  const double dphi = u.dy;
  if (u.y0 < 0.5 * dphi || u.y0 + u.ny * dphi > kPi - 0.5 * dphi)
    throw DomainError("spherical grid too close to a pole");
  for (double v : u.values)
    if (!(v > 0.0)) throw DomainError("radial graph must be positive");

  const double dt = u.dx;
  Grid2D out = u;
  std::fill(out.values.begin(), out.values.end(), std::numeric_limits<double>::quiet_NaN());

  // Staggered fluxes u_theta / W across theta faces and u_phi sin^2 phi / W
  // across phi faces.
  auto ftheta = [&](int i, int j) {
    const double ut = (u.at(i + 1, j) - u.at(i, j)) / dt;
    const double up = (u.at(i, j + 1) - u.at(i, j - 1) + u.at(i + 1, j + 1) - u.at(i + 1, j - 1)) /
                      (4.0 * dphi);
    const double v = 0.5 * (u.at(i, j) + u.at(i + 1, j));
    const double s = std::sin(f.phi(j));
    const double w = std::sqrt((v * v + up * up) * s * s + ut * ut);
    return ut / w;
  };
  auto fphi = [&](int i, int j) {
    const double up = (u.at(i, j + 1) - u.at(i, j)) / dphi;
    const double ut = (u.at(i + 1, j) - u.at(i - 1, j) + u.at(i + 1, j + 1) - u.at(i - 1, j + 1)) /
                      (4.0 * dt);
    const double v = 0.5 * (u.at(i, j) + u.at(i, j + 1));
    const double s = std::sin(f.phi(j) + 0.5 * dphi);
    const double w = std::sqrt((v * v + up * up) * s * s + ut * ut);
    return up * s * s / w;
  };
  for (int j = 1; j < u.ny - 1; ++j) {
    for (int i = 1; i < u.nx - 1; ++i) {
      const double div = (ftheta(i, j) - ftheta(i - 1, j)) / dt + (fphi(i, j) - fphi(i, j - 1)) / dphi;
      const double s = std::sin(f.phi(j));
      const double source = 2.0 * (s / f.w(i, j) + f.h) * u.at(i, j) * s;
      out.at(i, j) = div - source;
    }
  }
  return out;
}

}  // namespace capvertex
