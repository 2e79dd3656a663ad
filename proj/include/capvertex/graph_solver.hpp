#pragma once

// Nonparametric constant mean curvature equation div Tu = 2h on a rectangle
// with constant contact angle on each wall (nu . Tu = cos gamma).

#include <array>
#include <optional>

#include "capvertex/grid.hpp"
#include "capvertex/kernel_mode.hpp"

namespace capvertex {

/// Wall order: south (y = 0, length a), east (x = a, length b),
/// north (y = b, length a), west (x = 0, length b).
enum Wall { kSouth = 0, kEast = 1, kNorth = 2, kWest = 3 };

struct RectangleProblem {
  double a = 1.0;
  double b = 1.0;
  std::array<double, 4> gammas{};
  std::optional<double> h;  // derived from the data when omitted
  int grid_n = 64;          // cells per unit length
};

/// h = sum over walls of cos(gamma) * length / (2ab).
double compatibility_h(double a, double b, const std::array<double, 4>& gammas);

/// Cell layout and wall data shared by the kernels.
struct RectangleGrid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::array<double, 4> wall_cos{};

  static RectangleGrid from_problem(const RectangleProblem& p);
  Grid2D make_field(double fill = 0.0) const { return Grid2D(nx, ny, 0.0, 0.0, dx, dy, fill); }
};

/// Finite-volume divergence of Tu per cell (sum of outward face fluxes over
/// the cell area). Interior face fluxes use the face-normal difference and
/// the average of the two cells' tangential derivatives; wall faces carry
/// cos(gamma). Serial and Parallel give identical values.
Grid2D graph_divergence(const RectangleGrid& g, const Grid2D& u,
                        KernelMode mode = KernelMode::Parallel);

struct SolveOptions {
  double tol = 1e-10;      // residual infinity norm required
  double polish_to = 1e-13;
  int max_newton = 60;
  int max_halvings = 30;
  double compat_tol = 1e-10;
  KernelMode mode = KernelMode::Parallel;
  std::optional<Grid2D> initial_guess;
};

/// Damped Newton solve in the mean-zero gauge. Throws IncompatibleData when a
/// supplied h violates compatibility, NonConvergence when the residual stalls
/// above tol, DomainError on invalid input.
GraphField solve_rectangle(const RectangleProblem& p, const SolveOptions& opts = {});

/// Discrete residual div Tu - 2h, corrected by the grid compatibility defect
/// so that its area-weighted sum vanishes.
Grid2D graph_residual(const RectangleGrid& g, const Grid2D& u, double h,
                      KernelMode mode = KernelMode::Parallel);

/// Lower spherical cap of radius 1/h centered over the rectangle, when the
/// wall angles match it (cos gamma = h a/2 on east/west, h b/2 on
/// south/north) and the cap covers the rectangle.
std::optional<Grid2D> exact_cap_field(const RectangleProblem& p, const RectangleGrid& g);

/// max |u - exact - c| with c the mean of u - exact (the solver's gauge is
/// mean zero). Throws DomainError on mismatched grids.
double gauge_aligned_max_error(const Grid2D& u, const Grid2D& exact);

}  // namespace capvertex
