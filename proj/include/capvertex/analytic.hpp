#pragma once

// Closed-form capillary surfaces in plane configurations and residual
// evaluators for the constant mean curvature equation.
//
// Mean-curvature sign: h > 0 when the mean-curvature vector points out of the
// liquid (surface concave as seen from the liquid, e.g. a wetting meniscus in
// a tube); a convex drop sitting inside its sphere has h < 0. With this sign a
// sphere meeting plane j at contact angle gamma_j has its center at signed
// distance cos(gamma_j) / h on the liquid side of the plane.

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "capvertex/geom_core.hpp"
#include "capvertex/grid.hpp"

namespace capvertex {

using SupportConfig = std::variant<WedgeConfig, TrihedralConfig>;

struct SphericalCap {
  explicit SphericalCap(SupportConfig cfg) : config(std::move(cfg)) {}

  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  double h_signed = 0.0;
  /// The liquid occupies the ball side of the sphere (h < 0). The companion
  /// cap on the same sphere, with the liquid on the other side, is described
  /// by the same center and radius with this flag negated.
  bool liquid_inside_ball = false;
  /// Points where the cap meets the support edges (the vertices V).
  std::vector<Vec3> vertices;
  /// Trihedral only: the sphere passes through the apex.
  bool degenerate = false;
  SupportConfig config;

  /// Unit normal pointing out of the liquid at a point of the sphere.
  Vec3 outward_normal(const Vec3& x) const;
};

struct PlanarSolution {
  Vec3 normal;  // out of the liquid
  double offset;
  TrihedralConfig config;
};

using TrihedralSolution = std::variant<SphericalCap, PlanarSolution>;

/// Spherical cap in a wedge crossing the edge in two vertices (interior data)
/// or touching it once (data on the D1 side of the rectangle boundary).
SphericalCap wedge_cap(const WedgeConfig& config, double h);

/// Spherical cap in a trihedral angle (h != 0), or the planar solution when
/// h == 0 and the three angles admit one.
TrihedralSolution trihedral_cap(const TrihedralConfig& config, double h);

/// Mean curvature for which the three walls of a prism admit a sphere; zero
/// when the only solution is a plane orthogonal to the generator.
double cylinder_h(const TrihedralConfig& config);

/// Sphere meeting the three prism walls in the prescribed angles, center at
/// generator coordinate 0. When `h` is omitted it is taken from cylinder_h.
SphericalCap cylinder_cap(const TrihedralConfig& config, std::optional<double> h = std::nullopt);

/// cos of the angle (within the liquid) at which the cap meets `plane`,
/// evaluated from the sphere geometry at a point of the contact circle.
double cap_contact_cos(const SphericalCap& cap, const PlaneSupport& plane);

/// Angle at `vertex` between the contact circles on planes a and b, each
/// tangent oriented along its wall away from the edge.
double cap_vertex_angle(const SphericalCap& cap, const PlaneSupport& a, const PlaneSupport& b,
                        const Vec3& vertex);

/// Apply x -> scale * x to the cap and its support configuration.
SphericalCap scaled(const SphericalCap& cap, double scale);
WedgeConfig scaled(const WedgeConfig& config, double scale);
TrihedralConfig scaled(const TrihedralConfig& config, double scale);

/// Lower half of a horizontal cylinder over the rectangle [0, a] x [0, b]:
/// gamma = 0 on the two walls of length a (y = 0, y = b) and gamma = pi/2 on
/// the walls of length b.
struct HalfCylinderSolution {
  double a;
  double b;
  Line axis;
  double radius;
  double h;

  double height(double y) const;
  double slope(double y) const;
  double curvature(double y) const;  // second derivative in y
};

HalfCylinderSolution wente_halfcylinder(double a, double b);

/// Derivatives (u_x, u_y, u_xx, u_xy, u_yy) of an analytic graph.
using GraphDerivatives = std::function<std::array<double, 5>(double x, double y)>;

/// div Tu with Tu = grad u / sqrt(1 + |grad u|^2), from exact derivatives.
double div_tu(const std::array<double, 5>& d);

/// div Tu - 2h at the cell centers of `samples`, from exact derivatives.
Grid2D cartesian_cmc_residual(const GraphDerivatives& u, double h, const Grid2D& samples);

/// div Tu - 2h from second-order centered differences of sampled heights.
/// The outer layer of samples is excluded (NaN).
Grid2D cartesian_cmc_residual(const Grid2D& u, double h);

/// u(theta, phi) on a grid with theta along i and phi along j.
struct SphericalGraphField {
  Grid2D u;  // x ~ theta, y ~ phi
  double h = 0.0;

  double theta(int i) const { return u.x(i); }
  double phi(int j) const { return u.y(j); }
  /// W = sqrt((u^2 + u_phi^2) sin^2 phi + u_theta^2) by centered differences
  /// at an interior sample.
  double w(int i, int j) const;
};

/// Residual of the CMC equation for a radial graph in spherical coordinates,
/// at interior samples (outer layer NaN).
Grid2D spherical_cmc_residual(const SphericalGraphField& field);

}  // namespace capvertex
