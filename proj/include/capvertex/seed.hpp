#pragma once

#include <cstdint>
#include <optional>

#include "capvertex/analytic.hpp"
#include "capvertex/mesh.hpp"

namespace capvertex {

struct SeedOptions {
  /// Mean curvature of the seed surface. Only the sign matters for wedge and
  /// apex supports (the seed is scaled to the volume); 0 requests the planar
  /// trihedral solution. Default: negative (liquid inside the ball). Prism
  /// seeds always use the curvature fixed by the wall data.
  std::optional<double> h;
  /// Amplitude of the smooth random normal perturbation, as a fraction of
  /// the seed radius (or half-diameter for planar seeds).
  double perturbation = 0.0;
  std::uint64_t seed = 0;
};

/// Disk mesh of 32 * 4^r triangles sampling the analytic solution for the
/// support, sized to `target_volume`. Wedge and apex seeds are scaled about
/// the edge point / apex; prism seeds keep the cap and place the base plane.
/// Throws NoSolution when the data admit no seed surface.
TriMeshDrop seed_mesh(const SupportConfig& support, double target_volume, int refinement,
                      const SeedOptions& opts = {});

/// Combinatorial polar disk (center, ring of 8, ring of 16) quadrisected r
/// times, with chart positions in the unit disk.
SurfaceMesh polar_disk(int refinement);

/// Smooth scalar field on R^3 built from `modes` random plane waves with
/// wavelengths between length/3 and length; max |f| over `points` is 1.
std::vector<double> smooth_random_field(const std::vector<Vec3>& points, double length,
                                        std::uint64_t seed, int modes = 6);

}  // namespace capvertex
