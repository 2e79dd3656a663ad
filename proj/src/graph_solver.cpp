#include "capvertex/graph_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "capvertex/errors.hpp"
#include "capvertex/geom_core.hpp"

namespace capvertex {

namespace {

// Derivative of the cell values along one axis at cell k of n: centered in
// the interior, second-order one-sided at the ends.
struct Stencil {
  int off[3];
  double w[3];
};

Stencil derivative_stencil(int k, int n, double h) {
  if (k == 0) return {{0, 1, 2}, {-1.5 / h, 2.0 / h, -0.5 / h}};
  if (k == n - 1) return {{0, -1, -2}, {1.5 / h, -2.0 / h, 0.5 / h}};
  return {{-1, 1, 0}, {-0.5 / h, 0.5 / h, 0.0}};
}

double dy_cell(const Grid2D& u, int i, int j) {
  const Stencil s = derivative_stencil(j, u.ny, u.dy);
  return s.w[0] * u.at(i, j + s.off[0]) + s.w[1] * u.at(i, j + s.off[1]) +
         s.w[2] * u.at(i, j + s.off[2]);
}

double dx_cell(const Grid2D& u, int i, int j) {
  const Stencil s = derivative_stencil(i, u.nx, u.dx);
  return s.w[0] * u.at(i + s.off[0], j) + s.w[1] * u.at(i + s.off[1], j) +
         s.w[2] * u.at(i + s.off[2], j);
}

inline double flux(double p, double q) { return p / std::sqrt(1.0 + p * p + q * q); }

// +x flux through the face between (i, j) and (i + 1, j); i = -1 and
// i = nx - 1 are the west and east walls.
double x_face(const RectangleGrid& g, const Grid2D& u, int i, int j) {
  if (i < 0) return -g.wall_cos[kWest];
  if (i >= g.nx - 1) return g.wall_cos[kEast];
  const double p = (u.at(i + 1, j) - u.at(i, j)) / g.dx;
  const double q = 0.5 * (dy_cell(u, i, j) + dy_cell(u, i + 1, j));
  return flux(p, q);
}

double y_face(const RectangleGrid& g, const Grid2D& u, int i, int j) {
  if (j < 0) return -g.wall_cos[kSouth];
  if (j >= g.ny - 1) return g.wall_cos[kNorth];
  const double p = (u.at(i, j + 1) - u.at(i, j)) / g.dy;
  const double q = 0.5 * (dx_cell(u, i, j) + dx_cell(u, i, j + 1));
  return flux(p, q);
}

void check_shape(const RectangleGrid& g, const Grid2D& u) {
  if (u.nx != g.nx || u.ny != g.ny) throw DomainError("field does not match the rectangle grid");
}

double boundary_mean_flux(const RectangleGrid& g) {
  const double a = g.nx * g.dx;
  const double b = g.ny * g.dy;
  const double total = (g.wall_cos[kSouth] + g.wall_cos[kNorth]) * a +
                       (g.wall_cos[kEast] + g.wall_cos[kWest]) * b;
  return total / (a * b);
}

double max_abs(const Grid2D& r) { return r.max_abs(); }

void subtract_mean(Grid2D& u) {
  const double m = std::accumulate(u.values.begin(), u.values.end(), 0.0) / u.values.size();
  for (double& v : u.values) v -= m;
}

using Triplet = Eigen::Triplet<double>;

// Jacobian of the residual with row 0 replaced by the gauge row e_0.
Eigen::SparseMatrix<double> assemble_jacobian(const RectangleGrid& g, const Grid2D& u,
                                              KernelMode mode) {
  const int nx = g.nx;
  const int ny = g.ny;
  const int nxf = nx - 1;  // interior x faces per row
  const int nyf = ny - 1;
  const std::size_t n_xfaces = static_cast<std::size_t>(nxf) * ny;
  const std::size_t n_yfaces = static_cast<std::size_t>(nx) * nyf;
  // Per face: 8 derivative entries, each entering two cell rows.
  constexpr int kPer = 16;
  std::vector<Triplet> trips((n_xfaces + n_yfaces) * kPer, Triplet(0, 0, 0.0));

  auto emit_face = [&](std::size_t slot, int row_minus, int row_plus, double inv_len,
                       const int (&cols)[8], const double (&d)[8]) {
    Triplet* t = &trips[slot * kPer];
    for (int k = 0; k < 8; ++k) {
      t[2 * k] = Triplet(row_minus, cols[k], d[k] * inv_len);
      t[2 * k + 1] = Triplet(row_plus, cols[k], -d[k] * inv_len);
    }
  };

  const long long total_faces = static_cast<long long>(n_xfaces + n_yfaces);
#pragma omp parallel for schedule(static) if (mode == KernelMode::Parallel)
  for (long long f = 0; f < total_faces; ++f) {
    int cols[8];
    double d[8];
    if (f < static_cast<long long>(n_xfaces)) {
      const int j = static_cast<int>(f / nxf);
      const int i = static_cast<int>(f % nxf);
      const double p = (u.at(i + 1, j) - u.at(i, j)) / g.dx;
      const double q = 0.5 * (dy_cell(u, i, j) + dy_cell(u, i + 1, j));
      const double w2 = 1.0 + p * p + q * q;
      const double w3 = w2 * std::sqrt(w2);
      const double fp = (1.0 + q * q) / w3;
      const double fq = -p * q / w3;
      cols[0] = static_cast<int>(u.index(i, j));
      d[0] = -fp / g.dx;
      cols[1] = static_cast<int>(u.index(i + 1, j));
      d[1] = fp / g.dx;
      const Stencil s = derivative_stencil(j, ny, g.dy);
      for (int k = 0; k < 3; ++k) {
        cols[2 + k] = static_cast<int>(u.index(i, j + s.off[k]));
        d[2 + k] = 0.5 * fq * s.w[k];
        cols[5 + k] = static_cast<int>(u.index(i + 1, j + s.off[k]));
        d[5 + k] = 0.5 * fq * s.w[k];
      }
      emit_face(static_cast<std::size_t>(f), static_cast<int>(u.index(i, j)),
                static_cast<int>(u.index(i + 1, j)), 1.0 / g.dx, cols, d);
    } else {
      const long long fy = f - static_cast<long long>(n_xfaces);
      const int j = static_cast<int>(fy / nx);
      const int i = static_cast<int>(fy % nx);
      const double p = (u.at(i, j + 1) - u.at(i, j)) / g.dy;
      const double q = 0.5 * (dx_cell(u, i, j) + dx_cell(u, i, j + 1));
      const double w2 = 1.0 + p * p + q * q;
      const double w3 = w2 * std::sqrt(w2);
      const double fp = (1.0 + q * q) / w3;
      const double fq = -p * q / w3;
      cols[0] = static_cast<int>(u.index(i, j));
      d[0] = -fp / g.dy;
      cols[1] = static_cast<int>(u.index(i, j + 1));
      d[1] = fp / g.dy;
      const Stencil s = derivative_stencil(i, nx, g.dx);
      for (int k = 0; k < 3; ++k) {
        cols[2 + k] = static_cast<int>(u.index(i + s.off[k], j));
        d[2 + k] = 0.5 * fq * s.w[k];
        cols[5 + k] = static_cast<int>(u.index(i + s.off[k], j + 1));
        d[5 + k] = 0.5 * fq * s.w[k];
      }
      emit_face(static_cast<std::size_t>(f), static_cast<int>(u.index(i, j)),
                static_cast<int>(u.index(i, j + 1)), 1.0 / g.dy, cols, d);
    }
  }

  // Gauge row.
  std::vector<Triplet> kept;
  kept.reserve(trips.size() + 1);
  for (const Triplet& t : trips)
    if (t.row() != 0) kept.push_back(t);
  kept.emplace_back(0, 0, 1.0);
  const int n = nx * ny;
  Eigen::SparseMatrix<double> jac(n, n);
  jac.setFromTriplets(kept.begin(), kept.end());
  return jac;
}

Grid2D paraboloid_guess(const RectangleGrid& g, double h) {
  Grid2D u = g.make_field();
  const double cx = 0.5 * g.nx * g.dx;
  const double cy = 0.5 * g.ny * g.dy;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = u.x(i) - cx;
      const double y = u.y(j) - cy;
      u.at(i, j) = 0.5 * h * (x * x + y * y);
    }
  return u;
}

}  // namespace

double compatibility_h(double a, double b, const std::array<double, 4>& gammas) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("rectangle sides must be positive");
  // sin(pi/2 - g) is exactly 0 at g = pi/2, where cos(g) is not.
  const auto c = [](double g) { return std::sin(0.5 * kPi - g); };
  const double total = (c(gammas[kSouth]) + c(gammas[kNorth])) * a +
                       (c(gammas[kEast]) + c(gammas[kWest])) * b;
  return total / (2.0 * a) / b;
}

RectangleGrid RectangleGrid::from_problem(const RectangleProblem& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0)) throw DomainError("rectangle sides must be positive");
  RectangleGrid g;
  g.nx = static_cast<int>(std::lround(p.a * p.grid_n));
  g.ny = static_cast<int>(std::lround(p.b * p.grid_n));
  if (g.nx < 3 || g.ny < 3) throw DomainError("grid needs at least 3 cells per side");
  g.dx = p.a / g.nx;
  g.dy = p.b / g.ny;
  for (int w = 0; w < 4; ++w) {
    if (!(p.gammas[w] >= 0.0 && p.gammas[w] <= kPi)) throw DomainError("wall angle outside [0, pi]");
    g.wall_cos[w] = std::cos(p.gammas[w]);
  }
  return g;
}

Grid2D graph_divergence(const RectangleGrid& g, const Grid2D& u, KernelMode mode) {
  check_shape(g, u);
  Grid2D div = g.make_field();
  const int nx = g.nx;
  const int ny = g.ny;
  if (mode == KernelMode::Serial) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        div.at(i, j) = (x_face(g, u, i, j) - x_face(g, u, i - 1, j)) / g.dx +
                       (y_face(g, u, i, j) - y_face(g, u, i, j - 1)) / g.dy;
    return div;
  }
  // Face fluxes once, then a per-cell gather.
  std::vector<double> fx(static_cast<std::size_t>(nx + 1) * ny);
  std::vector<double> fy(static_cast<std::size_t>(nx) * (ny + 1));
#pragma omp parallel
  {
#pragma omp for schedule(static) nowait
    for (int j = 0; j < ny; ++j)
      for (int i = -1; i < nx; ++i) fx[static_cast<std::size_t>(j) * (nx + 1) + (i + 1)] = x_face(g, u, i, j);
#pragma omp for schedule(static)
    for (int j = -1; j < ny; ++j)
      for (int i = 0; i < nx; ++i) fy[static_cast<std::size_t>(j + 1) * nx + i] = y_face(g, u, i, j);
#pragma omp for schedule(static)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t r = static_cast<std::size_t>(j) * (nx + 1) + i;
        const double ex = fx[r + 1] - fx[r];
        const double ey = fy[static_cast<std::size_t>(j + 1) * nx + i] -
                          fy[static_cast<std::size_t>(j) * nx + i];
        div.at(i, j) = ex / g.dx + ey / g.dy;
      }
  }
  return div;
}

Grid2D graph_residual(const RectangleGrid& g, const Grid2D& u, double h, KernelMode mode) {
  Grid2D r = graph_divergence(g, u, mode);
  const double defect = boundary_mean_flux(g) - 2.0 * h;
  for (double& v : r.values) v -= 2.0 * h + defect;
  return r;
}

std::optional<Grid2D> exact_cap_field(const RectangleProblem& p, const RectangleGrid& g) {
  const double h = p.h.value_or(compatibility_h(p.a, p.b, p.gammas));
  if (!(h > 0.0)) return std::nullopt;
  const double tol = 1e-12;
  if (std::abs(g.wall_cos[kEast] - 0.5 * h * p.a) > tol ||
      std::abs(g.wall_cos[kWest] - 0.5 * h * p.a) > tol ||
      std::abs(g.wall_cos[kSouth] - 0.5 * h * p.b) > tol ||
      std::abs(g.wall_cos[kNorth] - 0.5 * h * p.b) > tol)
    return std::nullopt;
  const double r = 1.0 / h;
  if (r * r <= 0.25 * (p.a * p.a + p.b * p.b)) return std::nullopt;
  Grid2D u = g.make_field();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double x = u.x(i) - 0.5 * p.a;
      const double y = u.y(j) - 0.5 * p.b;
      u.at(i, j) = -std::sqrt(r * r - x * x - y * y);
    }
  return u;
}

double gauge_aligned_max_error(const Grid2D& u, const Grid2D& exact) {
  if (u.nx != exact.nx || u.ny != exact.ny) throw DomainError("grids differ in shape");
  double shift = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) shift += u.values[k] - exact.values[k];
  shift /= static_cast<double>(u.values.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k)
    worst = std::max(worst, std::abs(u.values[k] - exact.values[k] - shift));
  return worst;
}

GraphField solve_rectangle(const RectangleProblem& p, const SolveOptions& opts) {
  if (p.grid_n < 16) throw DomainError("grid_n must be at least 16");
  const RectangleGrid g = RectangleGrid::from_problem(p);
  const bool all_equal = p.gammas[0] == p.gammas[1] && p.gammas[1] == p.gammas[2] &&
                         p.gammas[2] == p.gammas[3];
  if (all_equal && !(p.gammas[0] > kPi / 4 && p.gammas[0] < kPi / 2)) {
    std::ostringstream os;
    os << "equal wall angle " << p.gammas[0] << " outside the existence window (pi/4, pi/2)";
    throw DomainError(os.str());
  }
  const double h_compat = compatibility_h(p.a, p.b, p.gammas);
  if (p.h && std::abs(*p.h - h_compat) > opts.compat_tol) {
    std::ostringstream os;
    os.precision(17);
    os << "h = " << *p.h << " violates compatibility (expected " << h_compat << ")";
    throw IncompatibleData(os.str());
  }
  const double h = p.h.value_or(h_compat);

  GraphField out;
  if (opts.initial_guess) {
    out.u = *opts.initial_guess;
    check_shape(g, out.u);
  } else if (auto cap = exact_cap_field(p, g)) {
    out.u = std::move(*cap);
  } else {
    out.u = paraboloid_guess(g, h);
  }
  subtract_mean(out.u);

  Grid2D res = graph_residual(g, out.u, h, opts.mode);
  double norm = max_abs(res);
  ConvergenceRecord& rec = out.convergence;
  rec.residual_history.push_back(norm);

  const int n = g.nx * g.ny;
  Eigen::VectorXd rhs(n);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < opts.max_newton && norm > opts.polish_to; ++it) {
    const Eigen::SparseMatrix<double> jac = assemble_jacobian(g, out.u, opts.mode);
    for (int k = 0; k < n; ++k) rhs[k] = -res.values[k];
    rhs[0] = 0.0;
    if (it == 0) lu.analyzePattern(jac);
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw NonConvergence("Newton matrix factorization failed");
    const Eigen::VectorXd step = lu.solve(rhs);

    double t = 1.0;
    bool accepted = false;
    Grid2D trial = out.u;
    Grid2D trial_res;
    double trial_norm = norm;
    for (int k = 0; k <= opts.max_halvings; ++k) {
      for (int c = 0; c < n; ++c) trial.values[c] = out.u.values[c] + t * step[c];
      trial_res = graph_residual(g, trial, h, opts.mode);
      trial_norm = max_abs(trial_res);
      if (std::isfinite(trial_norm) && trial_norm < norm) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    subtract_mean(trial);
    out.u = std::move(trial);
    res = std::move(trial_res);
    norm = trial_norm;
    rec.iterations = it + 1;
    rec.residual_history.push_back(norm);
  }
  rec.final_residual = norm;
  if (!(norm < opts.tol)) {
    std::ostringstream os;
    os << "Newton stalled after " << rec.iterations << " iterations; residual trace:";
    for (double r : rec.residual_history) os << ' ' << r;
    throw NonConvergence(os.str());
  }
  return out;
}

}  // namespace capvertex
