#include "capvertex/seed.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <unordered_map>
#include <utility>

#include "capvertex/energy.hpp"
#include "capvertex/errors.hpp"

namespace capvertex {

namespace {

using Vec2 = Eigen::Vector2d;

SurfaceMesh subdivide(const SurfaceMesh& m) {
  const MeshTopology topo = build_topology(m);
  SurfaceMesh out;
  out.vertices = m.vertices;
  std::unordered_map<std::uint64_t, int> mid;
  auto key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  for (const auto& e : topo.edges) {
    mid.emplace(key(e[0], e[1]), static_cast<int>(out.vertices.size()));
    out.vertices.push_back(0.5 * (m.vertices[e[0]] + m.vertices[e[1]]));
  }
  for (const Tri& t : m.triangles) {
    const int ab = mid.at(key(t[0], t[1]));
    const int bc = mid.at(key(t[1], t[2]));
    const int ca = mid.at(key(t[2], t[0]));
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

// The surface the seed samples: a sphere charted by stereographic
// projection from the point opposite the cap pole, or a plane.
struct SeedSurface {
  bool planar = false;
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 pole = Vec3::UnitZ();  // unit; cap around center + radius * pole, or plane normal
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();

  void init_frame() {
    e1 = pole.unitOrthogonal();
    e2 = pole.cross(e1);
  }

  Vec2 to_chart(const Vec3& x) const {
    if (planar) return Vec2((x - center).dot(e1), (x - center).dot(e2));
    const Vec3 s = (x - center) / radius;
    const double den = 1.0 + s.dot(pole);
    return Vec2(s.dot(e1) / den, s.dot(e2) / den);
  }

  Vec3 from_chart(const Vec2& q) const {
    if (planar) return center + q[0] * e1 + q[1] * e2;
    const double r2 = q.squaredNorm();
    const Vec3 s = (2.0 * q[0] * e1 + 2.0 * q[1] * e2 + (1.0 - r2) * pole) / (1.0 + r2);
    return center + radius * s;
  }

  // Outward direction of the chart surface at x, used to check the lift.
  Vec3 normal_at(const Vec3& x) const {
    return planar ? pole : Vec3((x - center).normalized());
  }
};

struct Chain {
  int plane;
  int edge_start;
  std::function<Vec3(double)> at;
  double length;
};

Chain arc_chain(int plane, int edge_start, const SupportGeometry& geo, const SeedSurface& surf,
                const Vec3& a, const Vec3& b) {
  const PlaneSupport& pl = geo.planes[plane];
  if (surf.planar) {
    return {plane, edge_start, [a, b](double s) { return Vec3(a + s * (b - a)); }, (b - a).norm()};
  }
  const Vec3 c = pl.project(surf.center);
  const double rho = (a - c).norm();
  const Vec3 u = (a - c) / rho;
  const Vec3 w = pl.normal().cross(u);
  const double tb = std::atan2((b - c).dot(w), (b - c).dot(u));
  const double pos = tb > 0.0 ? tb : tb + 2.0 * kPi;
  const double candidates[2] = {pos, pos - 2.0 * kPi};
  // Prefer the arc inside the other walls; when both are (prism walls are
  // strips), take the one on the cap side of the sphere.
  double best_sweep = pos;
  std::pair<bool, double> best_key{false, -1e300};
  for (double sweep : candidates) {
    const Vec3 m = c + rho * (std::cos(0.5 * sweep) * u + std::sin(0.5 * sweep) * w);
    double inside = 1e300;
    for (std::size_t k = 0; k < geo.planes.size(); ++k)
      if (static_cast<int>(k) != plane) inside = std::min(inside, geo.planes[k].signed_distance(m));
    const std::pair<bool, double> key{inside >= -1e-12 * surf.radius,
                                      (m - surf.center).dot(surf.pole)};
    if (key > best_key) {
      best_key = key;
      best_sweep = sweep;
    }
  }
  const double sweep = best_sweep;
  return {plane, edge_start,
          [c, rho, u, w, sweep](double s) {
            return Vec3(c + rho * (std::cos(s * sweep) * u + std::sin(s * sweep) * w));
          },
          rho * std::abs(sweep)};
}

std::vector<int> chain_counts(const std::vector<Chain>& chains, int nb) {
  double total = 0.0;
  for (const auto& c : chains) total += c.length;
  std::vector<int> k(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c)
    k[c] = std::max(2, static_cast<int>(std::lround(nb * chains[c].length / total)));
  auto sum = [&] { return std::accumulate(k.begin(), k.end(), 0); };
  while (sum() > nb) {
    std::size_t big = 0;
    for (std::size_t c = 1; c < k.size(); ++c)
      if (k[c] > k[big]) big = c;
    --k[big];
  }
  while (sum() < nb) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k.size(); ++c)
      if (chains[c].length / k[c] > chains[best].length / k[best]) best = c;
    ++k[best];
  }
  return k;
}

// Harmonic (uniform-weight) interior positions for fixed boundary positions.
void tutte_embed(std::vector<Vec2>& pos, const MeshTopology& topo) {
  const int nv = topo.n_vertices;
  std::vector<int> index(nv, -1);
  int n_int = 0;
  for (int v = 0; v < nv; ++v)
    if (!topo.on_boundary[v]) index[v] = n_int++;
  if (n_int == 0) return;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_int, 2);
  for (int v = 0; v < nv; ++v) {
    if (index[v] < 0) continue;
    const int deg = topo.neighbor_offsets[v + 1] - topo.neighbor_offsets[v];
    trips.emplace_back(index[v], index[v], static_cast<double>(deg));
    for (int k = topo.neighbor_offsets[v]; k < topo.neighbor_offsets[v + 1]; ++k) {
      const int u = topo.neighbors[k];
      if (index[u] >= 0) {
        trips.emplace_back(index[v], index[u], -1.0);
      } else {
        rhs(index[v], 0) += pos[u][0];
        rhs(index[v], 1) += pos[u][1];
      }
    }
  }
  Eigen::SparseMatrix<double> a(n_int, n_int);
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw MeshDegeneration("seed chart system is singular");
  const Eigen::MatrixXd x = solver.solve(rhs);
  for (int v = 0; v < nv; ++v)
    if (index[v] >= 0) pos[v] = Vec2(x(index[v], 0), x(index[v], 1));
}

void flip_orientation(SurfaceMesh& m) {
  for (Tri& t : m.triangles) std::swap(t[1], t[2]);
}

}  // namespace

SurfaceMesh polar_disk(int refinement) {
  if (refinement < 0) throw DomainError("refinement level must be >= 0");
  SurfaceMesh m;
  m.vertices.push_back(Vec3::Zero());
  for (int k = 0; k < 8; ++k) {
    const double th = 2.0 * kPi * k / 8.0;
    m.vertices.emplace_back(0.5 * std::cos(th), 0.5 * std::sin(th), 0.0);
  }
  for (int k = 0; k < 16; ++k) {
    const double th = 2.0 * kPi * k / 16.0;
    m.vertices.emplace_back(std::cos(th), std::sin(th), 0.0);
  }
  for (int k = 0; k < 8; ++k) {
    const int a0 = 1 + k;
    const int a1 = 1 + (k + 1) % 8;
    const int b0 = 9 + 2 * k;
    const int b1 = 9 + 2 * k + 1;
    const int b2 = 9 + (2 * k + 2) % 16;
    m.triangles.push_back({0, a0, a1});
    m.triangles.push_back({a0, b0, b1});
    m.triangles.push_back({a0, b1, a1});
    m.triangles.push_back({a1, b1, b2});
  }
  for (int r = 0; r < refinement; ++r) m = subdivide(m);
  return m;
}

std::vector<double> smooth_random_field(const std::vector<Vec3>& points, double length,
                                        std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  struct Mode {
    Vec3 k;
    double phase;
    double amp;
  };
  std::vector<Mode> waves;
  for (int m = 0; m < modes; ++m) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    const double wavelength = length * (1.0 / 3.0 + (2.0 / 3.0) * unit(rng));
    const double phase = 2.0 * kPi * unit(rng);
    const double amp = (0.5 + 0.5 * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
    waves.push_back({(2.0 * kPi / wavelength) * dir, phase, amp});
  }
  std::vector<double> f(points.size(), 0.0);
  double fmax = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const Mode& w : waves) f[i] += w.amp * std::sin(w.k.dot(points[i]) + w.phase);
    fmax = std::max(fmax, std::abs(f[i]));
  }
  if (fmax > 0.0)
    for (double& v : f) v /= fmax;
  return f;
}

TriMeshDrop seed_mesh(const SupportConfig& support, double target_volume, int refinement,
                      const SeedOptions& opts) {
  if (!(target_volume > 0.0)) throw DomainError("target volume must be positive");
  if (refinement < 0 || refinement > 8) throw DomainError("refinement level must be in [0, 8]");

  // Analytic surface and the cyclic list of contact vertices.
  SeedSurface surf;
  std::vector<Vec3> corners;
  double seed_h = 0.0;
  Vec3 scale_point = Vec3::Zero();
  bool prism = false;
  SupportGeometry geo = SupportGeometry::from_config(support);

  auto use_cap = [&](const SphericalCap& cap, const Vec3& bisector) {
    surf.center = cap.center;
    surf.radius = cap.radius;
    surf.pole = cap.liquid_inside_ball ? bisector : Vec3(-bisector);
    corners = cap.vertices;
    seed_h = cap.h_signed;
  };

  if (const auto* w = std::get_if<WedgeConfig>(&support)) {
    const double h = opts.h.value_or(-1.0);
    if (h == 0.0) throw DomainError("wedge seeds need a nonzero h");
    const SphericalCap cap = wedge_cap(*w, h < 0 ? -1.0 : 1.0);
    if (cap.vertices.size() != 2) throw NoSolution("wedge cap does not cross the edge twice");
    use_cap(cap, (w->plane1.normal() + w->plane2.normal()).normalized());
    scale_point = w->edge.point;
  } else {
    const auto& t = std::get<TrihedralConfig>(support);
    const Vec3 bis = (t.planes[0].normal() + t.planes[1].normal() + t.planes[2].normal()).normalized();
    if (t.kind == TrihedralKind::Apex) {
      const double h = opts.h.value_or(-1.0);
      const TrihedralSolution sol = trihedral_cap(t, h == 0.0 ? 0.0 : (h < 0 ? -1.0 : 1.0));
      if (const auto* cap = std::get_if<SphericalCap>(&sol)) {
        if (cap->degenerate) throw NoSolution("cap passes through the apex: no drop of positive volume");
        use_cap(*cap, bis);
      } else {
        const auto& pl = std::get<PlanarSolution>(sol);
        surf.planar = true;
        surf.pole = pl.normal;
        surf.center = t.apex + (pl.offset - pl.normal.dot(t.apex)) * pl.normal;
        for (const auto& e : geo.edges) {
          const double s = (pl.offset - pl.normal.dot(e.line.point)) / pl.normal.dot(e.line.dir);
          if (!(s > 0.0)) throw NoSolution("planar solution does not cut an edge ray");
          corners.push_back(e.line.at(s));
        }
      }
      scale_point = t.apex;
    } else {
      prism = true;
      const SphericalCap cap = cylinder_cap(t);
      use_cap(cap, t.generator);
    }
  }
  surf.init_frame();
  if (corners.size() != geo.edges.size() && !(geo.edges.size() == 1 && corners.size() == 2))
    throw NoSolution("seed surface does not meet every support edge");

  // Contact chains in cyclic order, each starting at a corner.
  std::vector<Chain> chains;
  std::vector<int> corner_edge;
  if (geo.edges.size() == 1) {
    chains.push_back(arc_chain(0, 0, geo, surf, corners[0], corners[1]));
    chains.push_back(arc_chain(1, 0, geo, surf, corners[1], corners[0]));
  } else {
    // Corner k lies on edge k; edge k = (k, k+1) so the chain from corner k
    // to corner k+1 runs on plane k+1.
    for (int k = 0; k < 3; ++k)
      chains.push_back(arc_chain((k + 1) % 3, k, geo, surf, corners[k], corners[(k + 1) % 3]));
  }

  // Combinatorial disk, boundary placed on the chains, interior harmonic.
  SurfaceMesh disk = polar_disk(refinement);
  const MeshTopology topo = build_topology(disk);
  const int nb = static_cast<int>(topo.boundary_loop.size());
  const std::vector<int> counts = chain_counts(chains, nb);
  std::vector<Vec2> chart(disk.vertices.size(), Vec2::Zero());
  std::vector<VertexTag> tags(disk.vertices.size(), VertexTag::free());
  std::vector<Vec3> boundary_pos(disk.vertices.size(), Vec3::Zero());
  {
    int pos = 0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      for (int s = 0; s < counts[c]; ++s, ++pos) {
        const int v = topo.boundary_loop[pos];
        const Vec3 p = chains[c].at(static_cast<double>(s) / counts[c]);
        boundary_pos[v] = p;
        chart[v] = surf.to_chart(p);
        tags[v] = s == 0 ? VertexTag::edge(chains[c].edge_start) : VertexTag::plane(chains[c].plane);
      }
    }
  }
  tutte_embed(chart, topo);

  TriMeshDrop drop(support);
  drop.geometry = geo;
  drop.surface.triangles = disk.triangles;
  drop.surface.vertices.resize(disk.vertices.size());
  for (std::size_t v = 0; v < disk.vertices.size(); ++v)
    drop.surface.vertices[v] = topo.on_boundary[v] ? boundary_pos[v] : surf.from_chart(chart[v]);
  for (std::size_t v = 0; v < disk.vertices.size(); ++v)
    drop.surface.vertices[v] = geo.constrain(drop.surface.vertices[v], tags[v]);
  drop.tags = tags;
  drop.target_volume = target_volume;

  // The lift must not fold: every triangle faces the same side of the surface.
  {
    int pos_count = 0;
    int neg_count = 0;
    for (const Tri& t : drop.surface.triangles) {
      const Vec3& a = drop.surface.vertices[t[0]];
      const Vec3& b = drop.surface.vertices[t[1]];
      const Vec3& c = drop.surface.vertices[t[2]];
      const double s = (b - a).cross(c - a).dot(surf.normal_at((a + b + c) / 3.0));
      (s > 0 ? pos_count : neg_count)++;
    }
    if (pos_count > 0 && neg_count > 0) throw MeshDegeneration("seed embedding folds over");
  }

  // Prism base provisionally through the lowest vertex.
  double zmin = 1e300;
  if (prism) {
    const auto& t = std::get<TrihedralConfig>(support);
    for (const Vec3& p : drop.surface.vertices) zmin = std::min(zmin, t.generator.dot(p));
    drop.geometry = SupportGeometry::from_config(support, zmin * t.generator);
  }

  EnergyContext ctx = EnergyContext::build(drop);
  double vol = evaluate(drop, ctx, KernelMode::Serial, false).values.volume;
  if (vol < 0.0) {
    flip_orientation(drop.surface);
    ctx = EnergyContext::build(drop);
    vol = evaluate(drop, ctx, KernelMode::Serial, false).values.volume;
  }

  double scale = 1.0;
  if (!prism) {
    if (!(vol > 0.0)) throw MeshDegeneration("seed volume is not positive");
    scale = std::cbrt(target_volume / vol);
    for (Vec3& p : drop.surface.vertices) p = scale_point + scale * (p - scale_point);
    drop.geometry = SupportGeometry::from_config(support);
    for (std::size_t v = 0; v < drop.surface.vertices.size(); ++v)
      drop.surface.vertices[v] = drop.geometry.constrain(drop.surface.vertices[v], drop.tags[v]);
  } else {
    const auto& t = std::get<TrihedralConfig>(support);
    const double v0 = vol;
    if (target_volume <= v0)
      throw DomainError("target volume below the volume under the prism cap");
    const double drop_base = (target_volume - v0) / drop.geometry.base_area;
    drop.geometry = SupportGeometry::from_config(support, (zmin - drop_base) * t.generator);
  }
  ctx = EnergyContext::build(drop);

  const double radius = surf.planar ? 0.5 * mesh_diameter(drop.surface) : scale * surf.radius;
  if (!surf.planar) {
    drop.lagrange_h = 2.0 * seed_h / scale;
    if (opts.perturbation == 0.0)
      drop.reference = ReferenceSphere{scale_point + scale * (surf.center - scale_point), radius};
  }

  if (opts.perturbation != 0.0) {
    const std::vector<double> f = smooth_random_field(drop.surface.vertices, radius, opts.seed);
    const std::vector<Vec3> normals = vertex_normals(drop.surface, ctx.topo);
    for (std::size_t v = 0; v < drop.surface.vertices.size(); ++v) {
      int dim = 0;
      const Eigen::Matrix3d b = drop.geometry.basis(drop.tags[v], &dim);
      const auto bl = b.leftCols(dim);
      const Vec3 d = bl * (bl.transpose() * normals[v]);
      drop.surface.vertices[v] =
          drop.geometry.constrain(drop.surface.vertices[v] + opts.perturbation * radius * f[v] * d,
                                  drop.tags[v]);
    }
  }
  restore_volume(drop, ctx, KernelMode::Serial);
  validate(drop);
  return drop;
}

}  // namespace capvertex
