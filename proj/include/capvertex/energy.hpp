#pragma once

// Capillary energy |S| - sum_j cos(gamma_j) S_j and enclosed volume of a
// drop mesh, with exact per-vertex gradients.
//
// Triangles are oriented with normals pointing out of the liquid. The drop is
// closed by the wetted polygons (outward normal -n_j) and, for a prism, by
// the base facet, so V = 1/6 sum p0.(p1 x p2) - 1/3 sum_j d_j S_j + passive.

#include <vector>

#include "capvertex/kernel_mode.hpp"
#include "capvertex/mesh.hpp"

namespace capvertex {

struct EnergyBreakdown {
  double free_area = 0.0;
  std::vector<double> wetted_areas;
  double volume = 0.0;
  double energy = 0.0;
  double constraint_violation = 0.0;  // |volume - target_volume|
};

/// Topology and wetted polygons of a mesh whose connectivity is fixed.
struct EnergyContext {
  MeshTopology topo;
  std::vector<WettedPolygon> polygons;

  static EnergyContext build(const TriMeshDrop& drop);
};

struct EnergyEvaluation {
  EnergyBreakdown values;
  std::vector<Vec3> grad_area;
  std::vector<Vec3> grad_energy;
  std::vector<Vec3> grad_volume;
};

/// Free-surface terms: total area, 6 x the signed cone volume, and their
/// per-vertex gradients (when `gradients`).
struct SurfaceTerms {
  double area = 0.0;
  double volume6 = 0.0;
  std::vector<Vec3> grad_area;
  std::vector<Vec3> grad_volume6;
};

SurfaceTerms surface_terms(const SurfaceMesh& mesh, const MeshTopology& topo, KernelMode mode,
                           bool gradients);

/// Throws MeshDegeneration on a triangle of area <= 1e-14 and
/// ConsistencyError on inconsistent boundary tagging.
EnergyBreakdown energy(const TriMeshDrop& drop, KernelMode mode = KernelMode::Parallel);

EnergyEvaluation evaluate(const TriMeshDrop& drop, const EnergyContext& ctx,
                          KernelMode mode = KernelMode::Parallel, bool gradients = true);

/// Move every vertex by s * P_i n_i (P_i: projector onto the admissible
/// displacements of vertex i, n_i: unit vertex normal) with the single
/// scalar s chosen by Newton so the volume equals target_volume. Returns the
/// final |V - target|. Iterates until rel_tol or until round-off stops the
/// error from halving.
double restore_volume(TriMeshDrop& drop, const EnergyContext& ctx, KernelMode mode,
                      double rel_tol = 1e-15);

}  // namespace capvertex
