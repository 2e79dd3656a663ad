#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace capvertex {

/// Scalar samples on a uniform structured grid. Sample (i, j) sits at
/// (x0 + (i + 0.5) dx, y0 + (j + 0.5) dy), i.e. grids are cell-centered.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  std::vector<double> values;

  Grid2D() = default;
  Grid2D(int nx_, int ny_, double x0_, double y0_, double dx_, double dy_, double fill = 0.0)
      : nx(nx_), ny(ny_), x0(x0_), y0(y0_), dx(dx_), dy(dy_),
        values(static_cast<std::size_t>(nx_) * ny_, fill) {}

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double& at(int i, int j) { return values[index(i, j)]; }
  double at(int i, int j) const { return values[index(i, j)]; }
  double x(int i) const { return x0 + (i + 0.5) * dx; }
  double y(int j) const { return y0 + (j + 0.5) * dy; }

  /// Max |value| over finite samples.
  double max_abs() const {
    double m = 0.0;
    for (double v : values)
      if (std::isfinite(v)) m = std::max(m, std::abs(v));
    return m;
  }
};

struct ConvergenceRecord {
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  std::vector<double> residual_history;
};

/// Graph u(x, y) over a rectangle [x0, x0 + nx dx] x [y0, y0 + ny dy].
struct GraphField {
  Grid2D u;
  ConvergenceRecord convergence;
};

}  // namespace capvertex
