#pragma once

// Plane configurations, contact-angle data classification and the vertex-angle
// formulas for a drop crossing the edge of a dihedral angle.
//
// Angles are radians. A contact angle gamma is always measured within the
// liquid; a plane normal always points into the region accessible to the drop.

#include <array>
#include <numbers>
#include <string_view>

#include <Eigen/Dense>

namespace capvertex {

using Vec3 = Eigen::Vector3d;
inline constexpr double kPi = std::numbers::pi;

class PlaneSupport {
 public:
  /// Plane {x : normal.x = offset}; `normal` is normalized on construction.
  PlaneSupport(const Vec3& normal, double offset, double gamma);
  static PlaneSupport through(const Vec3& normal, const Vec3& point, double gamma);

  const Vec3& normal() const { return normal_; }
  double offset() const { return offset_; }
  double gamma() const { return gamma_; }
  /// Wetting coefficient cos(gamma).
  double beta() const;

  double signed_distance(const Vec3& x) const { return normal_.dot(x) - offset_; }
  Vec3 project(const Vec3& x) const { return x - signed_distance(x) * normal_; }
  PlaneSupport with_gamma(double gamma) const { return {normal_, offset_, gamma}; }

 private:
  Vec3 normal_;
  double offset_;
  double gamma_;
};

struct Line {
  Vec3 point;
  Vec3 dir;  // unit

  Vec3 at(double t) const { return point + t * dir; }
  Vec3 project(const Vec3& x) const { return point + (x - point).dot(dir) * dir; }
};

/// Half-opening of the dihedral angle bounded by two planes with inward normals.
double half_opening(const Vec3& n1, const Vec3& n2);

/// Intersection line of two non-parallel planes; the point returned is the
/// one closest to the origin.
Line intersection_line(const PlaneSupport& p1, const PlaneSupport& p2);

struct WedgeConfig {
  PlaneSupport plane1;
  PlaneSupport plane2;
  double alpha;  // half-opening, 0 < alpha < pi/2
  Line edge;

  static WedgeConfig from_planes(const PlaneSupport& p1, const PlaneSupport& p2);
  /// Edge along +z through the origin, bisector along +x.
  static WedgeConfig canonical(double alpha, double gamma1, double gamma2);

  double gamma1() const { return plane1.gamma(); }
  double gamma2() const { return plane2.gamma(); }
  /// Unit direction lying in plane `j` (1 or 2), orthogonal to the edge,
  /// pointing along the wall away from the edge.
  Vec3 wall_direction(int j) const;
};

enum class TrihedralKind { Apex, Cylinder };

struct TrihedralConfig {
  std::array<PlaneSupport, 3> planes;
  TrihedralKind kind;
  Vec3 apex = Vec3::Zero();       // Apex kind
  Vec3 generator = Vec3::Zero();  // Cylinder kind

  static TrihedralConfig from_planes(const std::array<PlaneSupport, 3>& planes);
  /// The three coordinate planes, apex at the origin, drop in the positive octant.
  static TrihedralConfig orthogonal(const std::array<double, 3>& gammas);
  /// Triangular prism with equilateral cross-section of the given inradius,
  /// axis along +z through the origin.
  static TrihedralConfig equilateral_prism(double inradius, const std::array<double, 3>& gammas);

  /// Intersection line of planes j and k. For Apex kind the line passes
  /// through the apex and `dir` points into the drop-accessible region.
  Line edge(int j, int k) const;
  double half_opening(int j, int k) const;
};

enum class AdmissibilityTag { InteriorQ, BoundaryQ_D1, BoundaryQ_D2, Corner, D1, D2 };

std::string_view to_string(AdmissibilityTag tag);

struct AdmissibilityClass {
  AdmissibilityTag tag;
  double numerator;    // sin^2 2a - (B1^2 + B2^2 + 2 B1 B2 cos 2a)
  double sum_margin;   // 2a - |g1 + g2 - pi|, positive inside the sum band
  double diff_margin;  // (pi - 2a) - |g1 - g2|, positive inside the difference band
};

struct ClassifyOptions {
  double band = 1e-9;            // width of the boundary band, radians
  double numerator_tol = 1e-10;  // sign tolerance for the cross-check
};

/// Numerator of the squared vertex-angle sine; positive exactly on the
/// interior of the admissible rectangle.
double vertex_numerator(double alpha, double gamma1, double gamma2);

/// Classify contact-angle data (gamma1, gamma2) for a wedge of half-opening
/// alpha. The closed-form band tests decide; the numerator sign is
/// cross-checked and a ConsistencyError is thrown if the two disagree outside
/// the boundary band.
AdmissibilityClass classify_data(double alpha, double gamma1, double gamma2,
                                 const ClassifyOptions& opts = {});

struct VertexAngleResult {
  double two_beta;
  double cos_two_beta;
  double sin_sq_two_beta;
};

/// Angle between the two contact lines where they meet on the edge.
VertexAngleResult vertex_angle(double alpha, double gamma1, double gamma2);

}  // namespace capvertex
