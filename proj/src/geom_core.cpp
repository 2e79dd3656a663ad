#include "capvertex/geom_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capvertex/errors.hpp"

namespace capvertex {

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= kPi)) {
    std::ostringstream os;
    os << "contact angle " << gamma << " outside [0, pi]";
    throw DomainError(os.str());
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < kPi / 2)) {
    std::ostringstream os;
    os << "half-opening " << alpha << " outside (0, pi/2)";
    throw DomainError(os.str());
  }
}

}  // namespace

PlaneSupport::PlaneSupport(const Vec3& normal, double offset, double gamma)
    : offset_(offset), gamma_(gamma) {
  const double len = normal.norm();
  if (!(len > 1e-14)) throw DomainError("plane normal has zero length");
  normal_ = normal / len;
  offset_ = offset / len;
  check_gamma(gamma);
}

PlaneSupport PlaneSupport::through(const Vec3& normal, const Vec3& point, double gamma) {
  const Vec3 n = normal.normalized();
  return {n, n.dot(point), gamma};
}

double PlaneSupport::beta() const { return std::cos(gamma_); }

double half_opening(const Vec3& n1, const Vec3& n2) {
  const double c = std::clamp(n1.dot(n2), -1.0, 1.0);
  return 0.5 * (kPi - std::acos(c));
}

Line intersection_line(const PlaneSupport& p1, const PlaneSupport& p2) {
  const Vec3& n1 = p1.normal();
  const Vec3& n2 = p2.normal();
  const Vec3 dir = n1.cross(n2);
  const double s = dir.norm();
  if (s < 1e-10) throw DomainError("planes are parallel");
  const double c = n1.dot(n2);
  const double det = 1.0 - c * c;
  const double a = (p1.offset() - c * p2.offset()) / det;
  const double b = (p2.offset() - c * p1.offset()) / det;
  return {a * n1 + b * n2, dir / s};
}

WedgeConfig WedgeConfig::from_planes(const PlaneSupport& p1, const PlaneSupport& p2) {
  const double alpha = half_opening(p1.normal(), p2.normal());
  check_alpha(alpha);
  const Line edge = intersection_line(p1, p2);
  if (std::abs(edge.dir.dot(p1.normal())) > 1e-12 || std::abs(edge.dir.dot(p2.normal())) > 1e-12)
    throw ConsistencyError("wedge edge not orthogonal to plane normals");
  return WedgeConfig{p1, p2, alpha, edge};
}

WedgeConfig WedgeConfig::canonical(double alpha, double gamma1, double gamma2) {
  check_alpha(alpha);
  const double s = std::sin(alpha);
  const double c = std::cos(alpha);
  // Walls leave the edge along (c, s, 0) and (c, -s, 0).
  PlaneSupport p1(Vec3(s, -c, 0.0), 0.0, gamma1);
  PlaneSupport p2(Vec3(s, c, 0.0), 0.0, gamma2);
  WedgeConfig w{p1, p2, alpha, Line{Vec3::Zero(), Vec3::UnitZ()}};
  return w;
}

Vec3 WedgeConfig::wall_direction(int j) const {
  const PlaneSupport& own = (j == 1) ? plane1 : plane2;
  const PlaneSupport& other = (j == 1) ? plane2 : plane1;
  Vec3 w = edge.dir.cross(own.normal()).normalized();
  if (w.dot(other.normal()) < 0.0) w = -w;
  return w;
}

TrihedralConfig TrihedralConfig::from_planes(const std::array<PlaneSupport, 3>& planes) {
  for (int j = 0; j < 3; ++j) {
    for (int k = j + 1; k < 3; ++k) {
      if (planes[j].normal().cross(planes[k].normal()).norm() < 1e-10)
        throw DomainError("two support planes are parallel");
    }
  }
  Eigen::Matrix3d n;
  Vec3 d;
  for (int j = 0; j < 3; ++j) {
    n.row(j) = planes[j].normal().transpose();
    d[j] = planes[j].offset();
  }
  const double det = n.determinant();
  TrihedralConfig cfg{planes, TrihedralKind::Apex};
  if (std::abs(det) > 1e-10) {
    cfg.apex = n.partialPivLu().solve(d);
  } else {
    cfg.kind = TrihedralKind::Cylinder;
    cfg.generator = planes[0].normal().cross(planes[1].normal()).normalized();
  }
  return cfg;
}

TrihedralConfig TrihedralConfig::orthogonal(const std::array<double, 3>& gammas) {
  return from_planes({PlaneSupport(Vec3::UnitX(), 0.0, gammas[0]),
                      PlaneSupport(Vec3::UnitY(), 0.0, gammas[1]),
                      PlaneSupport(Vec3::UnitZ(), 0.0, gammas[2])});
}

TrihedralConfig TrihedralConfig::equilateral_prism(double inradius,
                                                   const std::array<double, 3>& gammas) {
  if (!(inradius > 0.0)) throw DomainError("prism inradius must be positive");
  std::array<PlaneSupport, 3> planes{PlaneSupport(Vec3::UnitX(), 0.0, gammas[0]),
                                     PlaneSupport(Vec3::UnitX(), 0.0, gammas[1]),
                                     PlaneSupport(Vec3::UnitX(), 0.0, gammas[2])};
  for (int j = 0; j < 3; ++j) {
    const double th = kPi / 2 + 2.0 * kPi * j / 3.0;
    const Vec3 outward(std::cos(th), std::sin(th), 0.0);
    planes[j] = PlaneSupport(-outward, -inradius, gammas[j]);
  }
  TrihedralConfig cfg = from_planes(planes);
  if (cfg.kind != TrihedralKind::Cylinder) throw ConsistencyError("prism planes not coplanar");
  if (cfg.generator.z() < 0) cfg.generator = -cfg.generator;
  return cfg;
}

Line TrihedralConfig::edge(int j, int k) const {
  Line line = intersection_line(planes[j], planes[k]);
  if (kind == TrihedralKind::Apex) {
    const int l = 3 - j - k;
    line.point = apex;
    if (line.dir.dot(planes[l].normal()) < 0.0) line.dir = -line.dir;
  } else {
    if (line.dir.dot(generator) < 0.0) line.dir = -line.dir;
  }
  return line;
}

double TrihedralConfig::half_opening(int j, int k) const {
  return capvertex::half_opening(planes[j].normal(), planes[k].normal());
}

std::string_view to_string(AdmissibilityTag tag) {
  switch (tag) {
    case AdmissibilityTag::InteriorQ: return "InteriorQ";
    case AdmissibilityTag::BoundaryQ_D1: return "BoundaryQ_D1";
    case AdmissibilityTag::BoundaryQ_D2: return "BoundaryQ_D2";
    case AdmissibilityTag::Corner: return "Corner";
    case AdmissibilityTag::D1: return "D1";
    case AdmissibilityTag::D2: return "D2";
  }
  return "?";
}

double vertex_numerator(double alpha, double gamma1, double gamma2) {
  const double b1 = std::cos(gamma1);
  const double b2 = std::cos(gamma2);
  const double s = std::sin(2.0 * alpha);
  return s * s - (b1 * b1 + b2 * b2 + 2.0 * b1 * b2 * std::cos(2.0 * alpha));
}

AdmissibilityClass classify_data(double alpha, double gamma1, double gamma2,
                                 const ClassifyOptions& opts) {
  check_alpha(alpha);
  check_gamma(gamma1);
  check_gamma(gamma2);

  AdmissibilityClass out{};
  out.numerator = vertex_numerator(alpha, gamma1, gamma2);
  out.sum_margin = 2.0 * alpha - std::abs(gamma1 + gamma2 - kPi);
  out.diff_margin = (kPi - 2.0 * alpha) - std::abs(gamma1 - gamma2);

  const double band = opts.band;
  const bool sum_in = out.sum_margin > band;
  const bool diff_in = out.diff_margin > band;
  const bool sum_out = out.sum_margin < -band;
  const bool diff_out = out.diff_margin < -band;

  if (sum_in && diff_in) {
    out.tag = AdmissibilityTag::InteriorQ;
  } else if (sum_out) {
    out.tag = AdmissibilityTag::D1;
  } else if (diff_out) {
    out.tag = AdmissibilityTag::D2;
  } else if (!sum_in && !diff_in) {
    out.tag = AdmissibilityTag::Corner;
  } else if (!sum_in) {
    out.tag = AdmissibilityTag::BoundaryQ_D1;
  } else {
    out.tag = AdmissibilityTag::BoundaryQ_D2;
  }

  const bool inside = out.tag == AdmissibilityTag::InteriorQ;
  const bool outside = sum_out || diff_out;
  if ((inside && out.numerator < -opts.numerator_tol) ||
      (outside && out.numerator > opts.numerator_tol)) {
    std::ostringstream os;
    os.precision(17);
    os << "classification mismatch at (alpha=" << alpha << ", gamma1=" << gamma1
       << ", gamma2=" << gamma2 << "): band test says " << to_string(out.tag)
       << " but numerator = " << out.numerator;
    throw ConsistencyError(os.str());
  }
  return out;
}

VertexAngleResult vertex_angle(double alpha, double gamma1, double gamma2) {
  const double b1 = std::cos(gamma1);
  const double b2 = std::cos(gamma2);
  if (std::abs(b1) >= 1.0 || std::abs(b2) >= 1.0)
    throw DomainError("vertical contact data: |cos gamma| = 1");
  const AdmissibilityClass cls = classify_data(alpha, gamma1, gamma2);
  if (cls.tag != AdmissibilityTag::InteriorQ)
    throw DomainError(std::string("vertex angle requires interior data, got ") +
                      std::string(to_string(cls.tag)));
  // Numerator rewritten as sin^2 g1 sin^2 g2 - (B1 B2 + cos 2a)^2, which
  // avoids 1 - B^2 cancellation when a contact angle is near 0 or pi.
  const double sg1 = std::sin(gamma1);
  const double sg2 = std::sin(gamma2);
  const double q = sg1 * sg1 * sg2 * sg2;
  const double m = b1 * b2 + std::cos(2.0 * alpha);
  VertexAngleResult r{};
  r.cos_two_beta = m / (std::abs(sg1) * std::abs(sg2));
  r.sin_sq_two_beta = (q - m * m) / q;
  r.two_beta = std::acos(std::clamp(r.cos_two_beta, -1.0, 1.0));
  return r;
}

}  // namespace capvertex
