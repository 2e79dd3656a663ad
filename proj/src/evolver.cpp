#include "capvertex/evolver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "capvertex/errors.hpp"

namespace capvertex {

const char* to_string(EvolveStatus s) {
  switch (s) {
    case EvolveStatus::Converged: return "converged";
    case EvolveStatus::MaxIterations: return "max_iterations";
    case EvolveStatus::Stalled: return "stalled";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// One admissible direction per vertex: the unit normal for free vertices,
// the in-plane conormal of the contact line for plane vertices, the line
// direction for edge vertices. Tangential redistribution is left to the
// smoothing pass.
struct Frame {
  std::vector<Vec3> dir;

  static Frame build(const TriMeshDrop& drop, const MeshTopology& topo) {
    Frame f;
    f.dir = vertex_normals(drop.surface, topo);
    const int nb = static_cast<int>(topo.boundary_loop.size());
    for (int k = 0; k < nb; ++k) {
      const int v = topo.boundary_loop[k];
      const VertexTag& tag = drop.tags[v];
      if (tag.kind == TagKind::OnEdge) {
        f.dir[v] = drop.geometry.edges[tag.id].line.dir;
      } else if (tag.kind == TagKind::OnPlane) {
        const Vec3& n = drop.geometry.planes[tag.id].normal();
        const Vec3 t = drop.surface.vertices[topo.boundary_loop[(k + 1) % nb]] -
                       drop.surface.vertices[topo.boundary_loop[(k + nb - 1) % nb]];
        f.dir[v] = n.cross(t).normalized();
      }
    }
    return f;
  }

  Eigen::VectorXd restrict(const std::vector<Vec3>& g) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(dir.size()));
    for (std::size_t v = 0; v < dir.size(); ++v) out[v] = dir[v].dot(g[v]);
    return out;
  }

  std::vector<Vec3> extend(const Eigen::VectorXd& d) const {
    std::vector<Vec3> out(dir.size());
    for (std::size_t v = 0; v < dir.size(); ++v) out[v] = d[v] * dir[v];
    return out;
  }
};

// F^T (L (x) I + eps M) F with nonnegative cotangent weights, F the frame.
class Metric {
 public:
  Metric(const TriMeshDrop& drop, const MeshTopology& topo, const Frame& frame) : topo_(topo) {
    assemble(drop, frame);
    solver_.analyzePattern(k_);
  }

  void factor(const TriMeshDrop& drop, const Frame& frame) {
    assemble(drop, frame);
    solver_.factorize(k_);
    if (solver_.info() != Eigen::Success) throw MeshDegeneration("descent metric is singular");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return solver_.solve(rhs); }

 private:
  void assemble(const TriMeshDrop& drop, const Frame& frame) {
    const SurfaceMesh& m = drop.surface;
    const int nv = static_cast<int>(m.vertices.size());
    const std::vector<double> w = cotan_weights(m, topo_);
    std::vector<double> mass(nv, 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const double a = triangle_area(m, static_cast<int>(t));
      total += a;
      for (int v : m.triangles[t]) mass[v] += a / 3.0;
    }
    const double eps = 0.1 / total;
    std::vector<double> diag(nv, 0.0);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * topo_.edges.size() + nv);
    for (std::size_t e = 0; e < topo_.edges.size(); ++e) {
      const int i = topo_.edges[e][0];
      const int j = topo_.edges[e][1];
      const double we = std::max(w[e], 0.0);
      diag[i] += we;
      diag[j] += we;
      const double c = -we * frame.dir[i].dot(frame.dir[j]);
      trips.emplace_back(i, j, c);
      trips.emplace_back(j, i, c);
    }
    for (int v = 0; v < nv; ++v) trips.emplace_back(v, v, diag[v] + eps * mass[v]);
    k_.resize(nv, nv);
    k_.setFromTriplets(trips.begin(), trips.end());
  }

  const MeshTopology& topo_;
  SpMat k_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

std::vector<Vec3> triangle_normals(const SurfaceMesh& m) {
  std::vector<Vec3> n(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const Tri& tri = m.triangles[t];
    n[t] = (m.vertices[tri[1]] - m.vertices[tri[0]]).cross(m.vertices[tri[2]] - m.vertices[tri[0]]);
  }
  return n;
}

bool folded(const SurfaceMesh& m, const std::vector<Vec3>& old_normals) {
  const std::vector<Vec3> n = triangle_normals(m);
  for (std::size_t t = 0; t < n.size(); ++t) {
    if (!(0.5 * n[t].norm() > 1e-14)) return true;
    if (n[t].dot(old_normals[t]) <= 0.0) return true;
  }
  return false;
}

struct Objective {
  double value;
  EnergyBreakdown parts;
};

Objective objective(const TriMeshDrop& drop, const EnergyContext& ctx, const EvolveOptions& o,
                    double pressure) {
  const EnergyBreakdown b = evaluate(drop, ctx, o.mode, false).values;
  const double f = o.volume_mode == VolumeMode::Fixed ? b.energy : b.energy + pressure * b.volume;
  return {f, b};
}

// Free vertices move toward the area-weighted centroid of their fan, minus
// the normal component; plane-boundary vertices slide along the contact line
// toward the midpoint of their boundary neighbours.
std::vector<Vec3> smoothed_positions(const TriMeshDrop& drop, const MeshTopology& topo,
                                     double coeff) {
  const SurfaceMesh& m = drop.surface;
  const std::vector<Vec3> normals = vertex_normals(m, topo);
  std::vector<Vec3> out = m.vertices;
  for (int v = 0; v < topo.n_vertices; ++v) {
    if (drop.tags[v].kind != TagKind::Free) continue;
    Vec3 c = Vec3::Zero();
    double wsum = 0.0;
    for (int k = topo.incidence_offsets[v]; k < topo.incidence_offsets[v + 1]; ++k) {
      const int t = topo.incidence[k][0];
      const Tri& tri = m.triangles[t];
      const double a = triangle_area(m, t);
      c += a * (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) / 3.0;
      wsum += a;
    }
    Vec3 d = c / wsum - m.vertices[v];
    d -= d.dot(normals[v]) * normals[v];
    out[v] = m.vertices[v] + coeff * d;
  }
  const int nb = static_cast<int>(topo.boundary_loop.size());
  for (int k = 0; k < nb; ++k) {
    const int v = topo.boundary_loop[k];
    if (drop.tags[v].kind != TagKind::OnPlane) continue;
    const Vec3& prev = m.vertices[topo.boundary_loop[(k + nb - 1) % nb]];
    const Vec3& next = m.vertices[topo.boundary_loop[(k + 1) % nb]];
    const Vec3& n = drop.geometry.planes[drop.tags[v].id].normal();
    Vec3 t = next - prev;
    t -= t.dot(n) * n;
    if (!(t.norm() > 0.0)) continue;
    t.normalize();
    out[v] = m.vertices[v] + coeff * t.dot(0.5 * (prev + next) - m.vertices[v]) * t;
  }
  for (int v = 0; v < topo.n_vertices; ++v) out[v] = drop.geometry.constrain(out[v], drop.tags[v]);
  return out;
}

// Moves the mesh to `positions` (restoring the volume in fixed mode) and
// keeps it when the objective does not exceed `bound` and nothing folds.
bool try_positions(TriMeshDrop& drop, const EnergyContext& ctx, const EvolveOptions& o,
                   double pressure, const std::vector<Vec3>& positions,
                   const std::vector<Vec3>& old_normals, double bound, Objective* result,
                   double strict_bound = std::numeric_limits<double>::infinity()) {
  const std::vector<Vec3> saved = drop.surface.vertices;
  drop.surface.vertices = positions;
  try {
    if (!folded(drop.surface, old_normals)) {
      if (o.volume_mode == VolumeMode::Fixed) restore_volume(drop, ctx, o.mode);
      if (!folded(drop.surface, old_normals)) {
        const Objective f = objective(drop, ctx, o, pressure);
        if (f.value <= bound && f.value < strict_bound) {
          *result = f;
          return true;
        }
      }
    }
  } catch (const MeshDegeneration&) {
  }
  drop.surface.vertices = saved;
  return false;
}

// Two-loop recursion with a variable initial inverse metric.
template <class Precondition>
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& r, const std::vector<Eigen::VectorXd>& s,
                                const std::vector<Eigen::VectorXd>& y, const Precondition& h0) {
  const int m = static_cast<int>(s.size());
  std::vector<double> alpha(m);
  Eigen::VectorXd v = r;
  for (int k = m - 1; k >= 0; --k) {
    alpha[k] = s[k].dot(v) / y[k].dot(s[k]);
    v -= alpha[k] * y[k];
  }
  Eigen::VectorXd z = h0(v);
  for (int k = 0; k < m; ++k) {
    const double beta = y[k].dot(z) / y[k].dot(s[k]);
    z += (alpha[k] - beta) * s[k];
  }
  return z;
}

}  // namespace

std::vector<double> cotan_weights(const SurfaceMesh& m, const MeshTopology& topo) {
  std::unordered_map<std::uint64_t, int> index;
  index.reserve(topo.edges.size());
  for (std::size_t e = 0; e < topo.edges.size(); ++e)
    index.emplace(edge_key(topo.edges[e][0], topo.edges[e][1]), static_cast<int>(e));
  std::vector<double> w(topo.edges.size(), 0.0);
  for (const Tri& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int i = t[(k + 1) % 3];
      const int j = t[(k + 2) % 3];
      const Vec3 a = m.vertices[i] - m.vertices[t[k]];
      const Vec3 b = m.vertices[j] - m.vertices[t[k]];
      const double s = a.cross(b).norm();
      if (!(s > 0.0)) throw MeshDegeneration("degenerate triangle in cotangent weights");
      w[index.at(edge_key(i, j))] += 0.5 * a.dot(b) / s;
    }
  }
  return w;
}

EvolveResult evolve(TriMeshDrop drop, const EvolveOptions& o) {
  if (!(o.grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
  if (o.max_iters < 0) throw DomainError("max_iters must be >= 0");
  if (!(o.smoothing >= 0.0 && o.smoothing < 1.0)) throw DomainError("smoothing must be in [0, 1)");
  validate(drop);
  drop.reference.reset();

  const EnergyContext ctx = EnergyContext::build(drop);
  Metric metric(drop, ctx.topo, Frame::build(drop, ctx.topo));
  const double pressure = drop.lagrange_h;
  if (o.volume_mode == VolumeMode::Fixed) restore_volume(drop, ctx, o.mode);

  EvolveResult out{drop, {}};
  ConvergenceReport& rep = out.report;
  TriMeshDrop& d = out.drop;
  Objective current = objective(d, ctx, o, pressure);
  double step = 1.0;
  std::vector<Eigen::VectorXd> mem_s;
  std::vector<Eigen::VectorXd> mem_y;
  std::vector<Vec3> prev_x;
  Eigen::VectorXd prev_r;

  for (int iter = 0;; ++iter) {
    const EnergyEvaluation ev = evaluate(d, ctx, o.mode, true);
    const Frame frame = Frame::build(d, ctx.topo);
    const Eigen::VectorXd g = frame.restrict(ev.grad_energy);
    const Eigen::VectorXd gv = frame.restrict(ev.grad_volume);
    metric.factor(d, frame);
    double mu = 0.0;
    Eigen::VectorXd kgv;
    double gv_kgv = 0.0;
    if (o.volume_mode == VolumeMode::Fixed) {
      kgv = metric.solve(gv);
      gv_kgv = gv.dot(kgv);
      mu = gv.dot(metric.solve(g)) / gv_kgv;
      d.lagrange_h = -mu;
    } else {
      mu = -pressure;
    }
    const Eigen::VectorXd r = g - mu * gv;
    // K^-1 followed by projection onto the volume-preserving directions.
    auto precondition = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd z = metric.solve(v);
      if (o.volume_mode == VolumeMode::Fixed) z -= (gv.dot(z) / gv_kgv) * kgv;
      return z;
    };

    if (!prev_x.empty() && o.memory > 0) {
      std::vector<Vec3> dx(prev_x.size());
      for (std::size_t v = 0; v < dx.size(); ++v) dx[v] = d.surface.vertices[v] - prev_x[v];
      Eigen::VectorXd sk = frame.restrict(dx);
      Eigen::VectorXd yk = r - prev_r;
      const double sy = sk.dot(yk);
      if (sy > 1e-14 * sk.norm() * yk.norm()) {
        mem_s.push_back(std::move(sk));
        mem_y.push_back(std::move(yk));
        if (static_cast<int>(mem_s.size()) > o.memory) {
          mem_s.erase(mem_s.begin());
          mem_y.erase(mem_y.begin());
        }
      }
    }
    prev_x = d.surface.vertices;
    prev_r = r;

    Eigen::VectorXd dir = -lbfgs_direction(r, mem_s, mem_y, precondition);
    if (!(r.dot(dir) < 0.0)) {
      mem_s.clear();
      mem_y.clear();
      dir = -precondition(r);
    }
    const double gnorm = r.lpNorm<Eigen::Infinity>();
    rep.trace.push_back({iter, ev.values.energy, ev.values.free_area, ev.values.volume, gnorm,
                         -0.5 * mu});
    rep.iterations = iter;
    rep.grad_norm = gnorm;
    if (gnorm < o.grad_tol) {
      rep.status = EvolveStatus::Converged;
      break;
    }
    if (iter == o.max_iters) {
      rep.status = EvolveStatus::MaxIterations;
      break;
    }

    const double slope = r.dot(dir);
    const std::vector<Vec3> disp = frame.extend(dir);
    const std::vector<Vec3> old_normals = triangle_normals(d.surface);
    bool accepted = false;
    double t = mem_s.empty() ? std::min(2.0 * step, 4.0) : 1.0;
    for (int halving = 0; halving < 60 && !accepted; ++halving, t *= 0.5) {
      std::vector<Vec3> pos = d.surface.vertices;
      for (std::size_t v = 0; v < pos.size(); ++v)
        pos[v] = d.geometry.constrain(pos[v] + t * disp[v], d.tags[v]);
      Objective next{};
      if (try_positions(d, ctx, o, pressure, pos, old_normals,
                        current.value + o.armijo * t * slope, &next, current.value)) {
        accepted = true;
        step = t;
        current = next;
      }
    }
    if (!accepted) {
      rep.status = EvolveStatus::Stalled;
      break;
    }

    if (o.smoothing > 0.0) {
      const std::vector<Vec3> pos = smoothed_positions(d, ctx.topo, o.smoothing);
      Objective next{};
      if (try_positions(d, ctx, o, pressure, pos, triangle_normals(d.surface), current.value, &next))
        current = next;
    }
  }

  if (o.volume_mode == VolumeMode::Pressure) d.target_volume = current.parts.volume;
  if (o.require_convergence && rep.status != EvolveStatus::Converged)
    throw NonConvergence(std::string("evolution ") + to_string(rep.status) + " with gradient norm " +
                         std::to_string(rep.grad_norm));
  validate(d);
  return out;
}

}  // namespace capvertex
