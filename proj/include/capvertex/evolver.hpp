#pragma once

// Constrained descent of the capillary energy on a drop mesh.

#include <vector>

#include "capvertex/energy.hpp"
#include "capvertex/kernel_mode.hpp"
#include "capvertex/mesh.hpp"

namespace capvertex {

enum class VolumeMode {
  Fixed,     // volume held at target_volume, multiplier estimated each step
  Pressure,  // minimize E + lagrange_h * V with lagrange_h fixed
};

enum class EvolveStatus { Converged, MaxIterations, Stalled };

const char* to_string(EvolveStatus s);

struct EvolveOptions {
  int max_iters = 2000;
  double grad_tol = 1e-8;
  VolumeMode volume_mode = VolumeMode::Fixed;
  double smoothing = 0.2;
  double armijo = 1e-4;
  int memory = 10;  // quasi-Newton pairs; 0 gives plain preconditioned descent
  KernelMode mode = KernelMode::Parallel;
  /// Throw NonConvergence instead of returning a non-converged report.
  bool require_convergence = false;
};

struct IterationRecord {
  int iter = 0;
  double energy = 0.0;
  double area = 0.0;
  double volume = 0.0;
  double grad_norm = 0.0;
  double h_estimate = 0.0;
};

struct ConvergenceReport {
  EvolveStatus status = EvolveStatus::MaxIterations;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<IterationRecord> trace;
};

struct EvolveResult {
  TriMeshDrop drop;
  ConvergenceReport report;
};

/// Projected descent with one admissible direction per vertex (normal for
/// free vertices, conormal in the plane for contact-line vertices, along the
/// line for edge vertices). The search direction is a limited-memory
/// quasi-Newton update preconditioned by K = cotangent stiffness + small
/// mass, kept tangent to the volume constraint; each trial restores the
/// volume and the step is line-searched on the energy. A tangential
/// smoothing pass follows every step. Stops when the projected gradient
/// infinity norm drops below grad_tol.
/// Throws MeshDegeneration if the mesh degenerates and DomainError on
/// invalid options.
EvolveResult evolve(TriMeshDrop drop, const EvolveOptions& opts = {});

/// Cotangent edge weights 1/2 (cot a + cot b), one per topology edge.
std::vector<double> cotan_weights(const SurfaceMesh& mesh, const MeshTopology& topo);

}  // namespace capvertex
