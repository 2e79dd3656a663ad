#include "capvertex/energy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "capvertex/errors.hpp"

namespace capvertex {

namespace {

struct TriangleTerms {
  double area;
  double volume6;
  Vec3 ga[3];
  Vec3 gv[3];
};

inline TriangleTerms triangle_terms(const SurfaceMesh& m, int t) {
  const Tri& tri = m.triangles[t];
  const Vec3& p0 = m.vertices[tri[0]];
  const Vec3& p1 = m.vertices[tri[1]];
  const Vec3& p2 = m.vertices[tri[2]];
  const Vec3 cross = (p1 - p0).cross(p2 - p0);
  const double len = cross.norm();
  TriangleTerms r;
  r.area = 0.5 * len;
  r.volume6 = p0.dot(p1.cross(p2));
  const Vec3 n = cross / len;
  r.ga[0] = 0.5 * n.cross(p2 - p1);
  r.ga[1] = 0.5 * n.cross(p0 - p2);
  r.ga[2] = 0.5 * n.cross(p1 - p0);
  r.gv[0] = p1.cross(p2);
  r.gv[1] = p2.cross(p0);
  r.gv[2] = p0.cross(p1);
  return r;
}

void check_area(double area, int t) {
  if (!(area > 1e-14))
    throw MeshDegeneration("triangle " + std::to_string(t) + " has area <= 1e-14");
}

// Signed polygon area 1/2 n . sum q_k x q_{k+1} and its gradient with
// respect to the chain vertices.
double polygon_area(const SurfaceMesh& m, const WettedPolygon& poly, const Vec3& n,
                    std::vector<Vec3>* grad_chain) {
  std::vector<Vec3> q;
  q.reserve(poly.chain.size() + poly.anchors.size());
  for (int v : poly.chain) q.push_back(m.vertices[v]);
  for (const Vec3& a : poly.anchors) q.push_back(a);
  const int n_q = static_cast<int>(q.size());
  if (n_q < 2) return 0.0;
  Vec3 sum = Vec3::Zero();
  for (int k = 0; k < n_q; ++k) sum += q[k].cross(q[(k + 1) % n_q]);
  if (grad_chain) {
    grad_chain->resize(poly.chain.size());
    for (std::size_t k = 0; k < poly.chain.size(); ++k) {
      const int kk = static_cast<int>(k);
      const Vec3& prev = q[(kk + n_q - 1) % n_q];
      const Vec3& next = q[(kk + 1) % n_q];
      (*grad_chain)[k] = 0.5 * (next - prev).cross(n);
    }
  }
  return 0.5 * n.dot(sum);
}

}  // namespace

EnergyContext EnergyContext::build(const TriMeshDrop& drop) {
  EnergyContext ctx;
  ctx.topo = build_topology(drop.surface);
  ctx.polygons = wetted_polygons(drop, ctx.topo);
  return ctx;
}

SurfaceTerms surface_terms(const SurfaceMesh& m, const MeshTopology& topo, KernelMode mode,
                           bool gradients) {
  const int nt = static_cast<int>(m.triangles.size());
  const int nv = static_cast<int>(m.vertices.size());
  SurfaceTerms out;
  if (gradients) {
    out.grad_area.assign(nv, Vec3::Zero());
    out.grad_volume6.assign(nv, Vec3::Zero());
  }

  if (mode == KernelMode::Serial) {
    for (int t = 0; t < nt; ++t) {
      const TriangleTerms r = triangle_terms(m, t);
      check_area(r.area, t);
      out.area += r.area;
      out.volume6 += r.volume6;
      if (!gradients) continue;
      for (int k = 0; k < 3; ++k) {
        out.grad_area[m.triangles[t][k]] += r.ga[k];
        out.grad_volume6[m.triangles[t][k]] += r.gv[k];
      }
    }
    return out;
  }

  // Per-triangle terms in parallel, then reductions in triangle order.
  std::vector<TriangleTerms> terms(nt);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < nt; ++t) terms[t] = triangle_terms(m, t);
  for (int t = 0; t < nt; ++t) {
    check_area(terms[t].area, t);
    out.area += terms[t].area;
    out.volume6 += terms[t].volume6;
  }
  if (gradients) {
#pragma omp parallel for schedule(static)
    for (int v = 0; v < nv; ++v) {
      Vec3 ga = Vec3::Zero();
      Vec3 gv = Vec3::Zero();
      for (int k = topo.incidence_offsets[v]; k < topo.incidence_offsets[v + 1]; ++k) {
        const auto& inc = topo.incidence[k];
        ga += terms[inc[0]].ga[inc[1]];
        gv += terms[inc[0]].gv[inc[1]];
      }
      out.grad_area[v] = ga;
      out.grad_volume6[v] = gv;
    }
  }
  return out;
}

EnergyEvaluation evaluate(const TriMeshDrop& drop, const EnergyContext& ctx, KernelMode mode,
                          bool gradients) {
  const SurfaceMesh& m = drop.surface;
  const auto& geo = drop.geometry;
  SurfaceTerms st = surface_terms(m, ctx.topo, mode, gradients);

  EnergyEvaluation ev;
  EnergyBreakdown& b = ev.values;
  b.free_area = st.area;
  b.energy = st.area;
  b.volume = st.volume6 / 6.0 + geo.passive_volume();
  b.wetted_areas.assign(geo.planes.size(), 0.0);
  if (gradients) {
    ev.grad_area = st.grad_area;
    ev.grad_energy = std::move(st.grad_area);
    ev.grad_volume.resize(st.grad_volume6.size());
    for (std::size_t v = 0; v < st.grad_volume6.size(); ++v)
      ev.grad_volume[v] = st.grad_volume6[v] / 6.0;
  }

  std::vector<Vec3> gchain;
  for (const WettedPolygon& poly : ctx.polygons) {
    if (poly.plane < 0 || poly.chain.empty()) continue;
    const PlaneSupport& pl = geo.planes[poly.plane];
    const double s = polygon_area(m, poly, pl.normal(), gradients ? &gchain : nullptr);
    b.wetted_areas[poly.plane] = s;
    b.energy -= pl.beta() * s;
    b.volume -= pl.offset() * s / 3.0;
    if (!gradients) continue;
    for (std::size_t k = 0; k < poly.chain.size(); ++k) {
      const int v = poly.chain[k];
      ev.grad_energy[v] -= pl.beta() * gchain[k];
      ev.grad_volume[v] -= (pl.offset() / 3.0) * gchain[k];
    }
  }
  b.constraint_violation = std::abs(b.volume - drop.target_volume);
  if (!std::isfinite(b.energy) || !std::isfinite(b.volume))
    throw MeshDegeneration("energy or volume is not finite");
  return ev;
}

EnergyBreakdown energy(const TriMeshDrop& drop, KernelMode mode) {
  const EnergyContext ctx = EnergyContext::build(drop);
  return evaluate(drop, ctx, mode, false).values;
}

double restore_volume(TriMeshDrop& drop, const EnergyContext& ctx, KernelMode mode,
                      double rel_tol) {
  const int nv = static_cast<int>(drop.surface.vertices.size());
  const std::vector<Vec3> normals = vertex_normals(drop.surface, ctx.topo);
  std::vector<Vec3> dir(nv);
  for (int v = 0; v < nv; ++v) {
    int dim = 0;
    const Eigen::Matrix3d b = drop.geometry.basis(drop.tags[v], &dim);
    const auto bl = b.leftCols(dim);
    dir[v] = bl * (bl.transpose() * normals[v]);
  }
  const std::vector<Vec3> base = drop.surface.vertices;
  const double target = drop.target_volume;
  double s = 0.0;
  double err = 0.0;
  double prev_err = std::numeric_limits<double>::infinity();
  double prev_err_signed = 0.0;
  double prev_s = 0.0;
  for (int it = 0; it < 30; ++it) {
    const EnergyEvaluation ev = evaluate(drop, ctx, mode, true);
    err = ev.values.volume - target;
    if (std::abs(err) <= rel_tol * std::abs(target)) break;
    if (std::abs(err) > 0.5 * prev_err) {
      // Round-off floor: keep the better of the last two iterates.
      if (std::abs(err) > prev_err) {
        s = prev_s;
        for (int v = 0; v < nv; ++v)
          drop.surface.vertices[v] = drop.geometry.constrain(base[v] + s * dir[v], drop.tags[v]);
        err = prev_err_signed;
      }
      break;
    }
    prev_err = std::abs(err);
    prev_err_signed = err;
    prev_s = s;
    double slope = 0.0;
    for (int v = 0; v < nv; ++v) slope += ev.grad_volume[v].dot(dir[v]);
    if (!(std::abs(slope) > 0.0)) throw MeshDegeneration("volume cannot be restored along normals");
    s -= err / slope;
    for (int v = 0; v < nv; ++v)
      drop.surface.vertices[v] = drop.geometry.constrain(base[v] + s * dir[v], drop.tags[v]);
  }
  return std::abs(err);
}

}  // namespace capvertex
