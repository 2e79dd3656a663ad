#pragma once

// Measurements on drop meshes: sphere and plane fits, discrete mean and
// principal curvatures, umbilicity, contact angles and vertex angles.
//
// Mean curvature follows the sign convention of analytic.hpp: a drop inside
// its sphere has H < 0 (the octant drop of radius 1 has H = -1).

#include <cstdint>
#include <string>
#include <vector>

#include "capvertex/mesh.hpp"

namespace capvertex {

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  double rms = 0.0;           // RMS distance to the plane
  double max_distance = 0.0;
};

struct SphereFit {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  double relative_rms = 0.0;  // RMS of (|v - c| - R) / R
  /// Points are (numerically) coplanar; `plane` holds the fit and the
  /// sphere fields are not meaningful.
  bool plane_fallback = false;
  PlaneFit plane;
};

/// Least-squares plane through the centroid.
PlaneFit fit_plane(const std::vector<Vec3>& points);

/// Algebraic fit refined by Gauss-Newton on the geometric residuals. The
/// result does not depend on the order of the points. Throws DomainError for
/// fewer than 10 points.
SphereFit fit_sphere(const std::vector<Vec3>& points);

struct VertexCurvature {
  double h = 0.0;   // cotangent mean curvature
  double k1 = 0.0;  // principal curvatures from the quadric fit, k1 >= k2
  double k2 = 0.0;
  bool interior = false;
};

/// Per-vertex curvatures. H_i = -(grad_i A . n_i) / (2 |grad_i V|) at
/// interior vertices (0 on the boundary); principal curvatures from a
/// quadric fit over the 2-ring in the tangent frame, signed like H.
/// Throws MeshDegeneration for a vertex of valence < 3.
std::vector<VertexCurvature> curvature_field(const SurfaceMesh& mesh);

struct CurvatureStats {
  double mean = 0.0;
  double std = 0.0;
  double cv = 0.0;  // std / |mean|
  int count = 0;
};

CurvatureStats mean_curvature_stats(const std::vector<VertexCurvature>& field);

/// Area-weighted RMS of |k1 - k2| over interior vertices, times `scale`.
double umbilicity_rms(const SurfaceMesh& mesh, const std::vector<VertexCurvature>& field,
                      double scale);

struct ContactAngleSample {
  int vertex = 0;
  int plane = 0;
  double measured = 0.0;
};

struct ContactAngleReport {
  std::vector<ContactAngleSample> samples;
  std::vector<double> max_error;  // per plane, radians
};

/// Contact angle within the liquid at every plane-boundary vertex, from the
/// normal of a sphere (or plane) fitted through the vertex and its 2-ring.
ContactAngleReport measure_contact_angles(const TriMeshDrop& drop);

/// Angle between the two contact polylines at an edge vertex, each tangent
/// taken from a circle fitted through the vertex and its 4 nearest samples
/// on that side. Throws DomainError unless the vertex is an edge vertex with
/// at least 3 samples on each side.
double measure_vertex_angle(const TriMeshDrop& drop, int vertex);

struct VertexAngleSample {
  int vertex = 0;
  int edge = 0;
  double measured = 0.0;
  double predicted = 0.0;
  double deviation = 0.0;
};

struct DiagnosticsReport {
  CurvatureStats mean_curvature;
  double multiplier_h = 0.0;  // lagrange_h / 2
  SphereFit sphere_fit;
  PlaneFit plane_fit;
  double umbilicity_rms = 0.0;
  std::vector<double> contact_angle_errors;
  std::vector<VertexAngleSample> vertex_angles;
  double diameter = 0.0;
};

DiagnosticsReport diagnose(const TriMeshDrop& drop);

/// Flat JSON object; keys are listed in the README.
std::string to_json(const DiagnosticsReport& report, std::uint64_t seed);
/// Header line and one data row (RFC 4180).
std::string to_csv(const DiagnosticsReport& report, std::uint64_t seed);

/// Half of a circular cylinder of radius `radius` around the x axis, charted
/// isometrically by the polar disk of the given refinement.
SurfaceMesh half_cylinder_mesh(double radius, int refinement);

}  // namespace capvertex
