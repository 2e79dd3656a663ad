#pragma once

// Triangulated drop surfaces with per-vertex support constraints.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "capvertex/analytic.hpp"
#include "capvertex/geom_core.hpp"

namespace capvertex {

using Tri = std::array<int, 3>;

struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<Tri> triangles;
};

enum class TagKind : std::uint8_t { Free, OnPlane, OnEdge };

struct VertexTag {
  TagKind kind = TagKind::Free;
  int id = -1;  // plane or edge index

  static VertexTag free() { return {}; }
  static VertexTag plane(int j) { return {TagKind::OnPlane, j}; }
  static VertexTag edge(int e) { return {TagKind::OnEdge, e}; }
  bool operator==(const VertexTag&) const = default;
};

/// "Free", "P<k>" or "E<k>".
std::string to_string(const VertexTag& tag);
VertexTag parse_tag(const std::string& text);

/// Intersection line of two support planes. The anchor, when present, is
/// the fixed point where the wetted polygons of both planes turn off the
/// line (trihedral apex, foot of a prism edge on the base).
struct EdgeLine {
  int plane_a = 0;
  int plane_b = 0;
  Line line;
  std::optional<Vec3> anchor;
};

struct SupportGeometry {
  std::vector<PlaneSupport> planes;
  std::vector<EdgeLine> edges;
  /// Prism only: base plane, fully wetted, normal pointing into the liquid.
  std::optional<PlaneSupport> base;
  double base_area = 0.0;

  /// Wedge: planes {1, 2}, edge E0 = (0, 1). Trihedral and prism: edges
  /// E0 = (0, 1), E1 = (1, 2), E2 = (2, 0). Prism base is the plane through
  /// `base_point` orthogonal to the generator.
  static SupportGeometry from_config(const SupportConfig& config,
                                     const Vec3& base_point = Vec3::Zero());

  /// Volume contribution of fixed closing facets (the prism base).
  double passive_volume() const;
  Vec3 constrain(const Vec3& p, const VertexTag& tag) const;
  /// Orthonormal basis of the admissible displacements (3, 2 or 1 columns).
  Eigen::Matrix3d basis(const VertexTag& tag, int* dim) const;
  /// Distance of p from its constraint set.
  double constraint_residual(const Vec3& p, const VertexTag& tag) const;
};

struct ReferenceSphere {
  Vec3 center;
  double radius;
};

struct TriMeshDrop {
  explicit TriMeshDrop(SupportConfig cfg) : support(std::move(cfg)) {}

  SurfaceMesh surface;
  std::vector<VertexTag> tags;
  SupportConfig support;
  SupportGeometry geometry;
  double target_volume = 0.0;
  double lagrange_h = 0.0;
  /// Exact surface the mesh samples, used to place midpoints in refine.
  std::optional<ReferenceSphere> reference;
};

/// Connectivity derived from the triangle list.
struct MeshTopology {
  int n_vertices = 0;
  std::vector<std::array<int, 2>> edges;  // unique undirected edges, a < b
  std::vector<int> edge_triangle_count;
  std::vector<int> boundary_loop;         // in the orientation of the triangles
  std::vector<char> on_boundary;
  /// Vertex -> incident (triangle, corner) pairs, sorted by triangle.
  std::vector<int> incidence_offsets;
  std::vector<std::array<int, 2>> incidence;
  /// Vertex -> sorted neighbor list.
  std::vector<int> neighbor_offsets;
  std::vector<int> neighbors;

  int euler_characteristic(int n_triangles) const {
    return n_vertices - static_cast<int>(edges.size()) + n_triangles;
  }
};

/// Throws MeshDegeneration unless the mesh is an oriented manifold disk
/// with one boundary loop.
MeshTopology build_topology(const SurfaceMesh& mesh);

/// Wetted polygon on one plane: contact chain (mesh vertices, in boundary
/// order, both end corners included) closed through fixed anchor points.
struct WettedPolygon {
  int plane = -1;
  std::vector<int> chain;
  std::vector<Vec3> anchors;
};

/// One polygon per plane. Throws ConsistencyError when the boundary tags do
/// not form one contact chain per plane.
std::vector<WettedPolygon> wetted_polygons(const TriMeshDrop& drop, const MeshTopology& topo);

double triangle_area(const SurfaceMesh& mesh, int t);
/// Area-weighted vertex normals (unit), oriented like the triangles.
std::vector<Vec3> vertex_normals(const SurfaceMesh& mesh, const MeshTopology& topo);

/// Throws MeshDegeneration / ConsistencyError on any TriMeshDrop invariant
/// violation: disk topology, boundary tagging, constraints within
/// 1e-12 * scale, triangle areas above 1e-14.
void validate(const TriMeshDrop& drop);

/// Quadrisection: every triangle split into four at edge midpoints.
/// Boundary midpoints inherit the plane tag of the edge; with a reference
/// sphere, midpoints are moved onto it (boundary midpoints onto the contact
/// circle of their plane).
TriMeshDrop refine(const TriMeshDrop& drop);

double mesh_diameter(const SurfaceMesh& mesh);

}  // namespace capvertex
