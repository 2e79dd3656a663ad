#include "capvertex/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "capvertex/errors.hpp"

namespace capvertex {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::uint64_t directed_key(int a, int b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

int common_plane(const EdgeLine& e, const EdgeLine& f) {
  for (int p : {e.plane_a, e.plane_b})
    if (p == f.plane_a || p == f.plane_b) return p;
  return -1;
}

bool edge_has_plane(const EdgeLine& e, int j) { return e.plane_a == j || e.plane_b == j; }

}  // namespace

std::string to_string(const VertexTag& tag) {
  switch (tag.kind) {
    case TagKind::Free: return "Free";
    case TagKind::OnPlane: return "P" + std::to_string(tag.id);
    case TagKind::OnEdge: return "E" + std::to_string(tag.id);
  }
  return "?";
}

VertexTag parse_tag(const std::string& text) {
  if (text == "Free") return VertexTag::free();
  if (text.size() >= 2 && (text[0] == 'P' || text[0] == 'E')) {
    int id = 0;
    for (std::size_t k = 1; k < text.size(); ++k) {
      if (text[k] < '0' || text[k] > '9') throw DomainError("bad vertex tag '" + text + "'");
      id = id * 10 + (text[k] - '0');
    }
    return text[0] == 'P' ? VertexTag::plane(id) : VertexTag::edge(id);
  }
  throw DomainError("bad vertex tag '" + text + "'");
}

SupportGeometry SupportGeometry::from_config(const SupportConfig& config, const Vec3& base_point) {
  SupportGeometry g;
  if (const auto* w = std::get_if<WedgeConfig>(&config)) {
    g.planes = {w->plane1, w->plane2};
    g.edges.push_back(EdgeLine{0, 1, w->edge, std::nullopt});
    return g;
  }
  const auto& t = std::get<TrihedralConfig>(config);
  g.planes.assign(t.planes.begin(), t.planes.end());
  static constexpr int kPairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (const auto& pr : kPairs) {
    EdgeLine e{pr[0], pr[1], t.edge(pr[0], pr[1]), std::nullopt};
    if (t.kind == TrihedralKind::Apex) e.anchor = t.apex;
    g.edges.push_back(e);
  }
  if (t.kind == TrihedralKind::Cylinder) {
    const Vec3& gen = t.generator;
    g.base = PlaneSupport::through(gen, base_point, kPi / 2);
    for (auto& e : g.edges) {
      const double s = (gen.dot(base_point) - gen.dot(e.line.point)) / gen.dot(e.line.dir);
      e.anchor = e.line.at(s);
    }
    const Vec3& f0 = *g.edges[0].anchor;
    const Vec3& f1 = *g.edges[1].anchor;
    const Vec3& f2 = *g.edges[2].anchor;
    g.base_area = 0.5 * (f1 - f0).cross(f2 - f0).norm();
  }
  return g;
}

double SupportGeometry::passive_volume() const {
  if (!base) return 0.0;
  return -base->offset() * base_area / 3.0;
}

Vec3 SupportGeometry::constrain(const Vec3& p, const VertexTag& tag) const {
  switch (tag.kind) {
    case TagKind::Free: return p;
    case TagKind::OnPlane: return planes.at(tag.id).project(p);
    case TagKind::OnEdge: return edges.at(tag.id).line.project(p);
  }
  return p;
}

Eigen::Matrix3d SupportGeometry::basis(const VertexTag& tag, int* dim) const {
  Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
  switch (tag.kind) {
    case TagKind::Free:
      *dim = 3;
      return Eigen::Matrix3d::Identity();
    case TagKind::OnPlane: {
      const Vec3& n = planes.at(tag.id).normal();
      const Vec3 t1 = n.unitOrthogonal();
      b.col(0) = t1;
      b.col(1) = n.cross(t1);
      *dim = 2;
      return b;
    }
    case TagKind::OnEdge:
      b.col(0) = edges.at(tag.id).line.dir;
      *dim = 1;
      return b;
  }
  *dim = 0;
  return b;
}

double SupportGeometry::constraint_residual(const Vec3& p, const VertexTag& tag) const {
  switch (tag.kind) {
    case TagKind::Free: return 0.0;
    case TagKind::OnPlane: return std::abs(planes.at(tag.id).signed_distance(p));
    case TagKind::OnEdge: return (p - edges.at(tag.id).line.project(p)).norm();
  }
  return 0.0;
}

MeshTopology build_topology(const SurfaceMesh& mesh) {
  MeshTopology topo;
  const int nv = static_cast<int>(mesh.vertices.size());
  const int nt = static_cast<int>(mesh.triangles.size());
  topo.n_vertices = nv;

  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(3 * nt);
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      if (a < 0 || a >= nv || b < 0 || b >= nv || a == b)
        throw MeshDegeneration("triangle " + std::to_string(t) + " has invalid vertex indices");
      if (!directed.emplace(directed_key(a, b), t).second)
        throw MeshDegeneration("inconsistent orientation or non-manifold edge at triangle " +
                               std::to_string(t));
    }
  }

  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(3 * nt);
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      auto [it, inserted] = edge_index.emplace(edge_key(a, b), static_cast<int>(topo.edges.size()));
      if (inserted) {
        topo.edges.push_back({std::min(a, b), std::max(a, b)});
        topo.edge_triangle_count.push_back(0);
      }
      ++topo.edge_triangle_count[it->second];
    }
  }

  // Boundary: directed edges without a twin.
  std::vector<int> next(nv, -1);
  int n_boundary_edges = 0;
  for (int t = 0; t < nt; ++t) {
    const Tri& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      if (directed.count(directed_key(b, a))) continue;
      if (next[a] != -1) throw MeshDegeneration("boundary pinched at vertex " + std::to_string(a));
      next[a] = b;
      ++n_boundary_edges;
    }
  }
  topo.on_boundary.assign(nv, 0);
  if (n_boundary_edges > 0) {
    int start = 0;
    while (next[start] == -1) ++start;
    int v = start;
    do {
      topo.boundary_loop.push_back(v);
      topo.on_boundary[v] = 1;
      v = next[v];
      if (v == -1) throw MeshDegeneration("open boundary chain");
    } while (v != start && static_cast<int>(topo.boundary_loop.size()) <= n_boundary_edges);
    if (static_cast<int>(topo.boundary_loop.size()) != n_boundary_edges)
      throw MeshDegeneration("boundary has more than one component");
  }

  topo.incidence_offsets.assign(nv + 1, 0);
  for (const Tri& tri : mesh.triangles)
    for (int v : tri) ++topo.incidence_offsets[v + 1];
  for (int v = 0; v < nv; ++v) topo.incidence_offsets[v + 1] += topo.incidence_offsets[v];
  topo.incidence.resize(3 * static_cast<std::size_t>(nt));
  {
    std::vector<int> fill(topo.incidence_offsets.begin(), topo.incidence_offsets.end() - 1);
    for (int t = 0; t < nt; ++t)
      for (int k = 0; k < 3; ++k) topo.incidence[fill[mesh.triangles[t][k]]++] = {t, k};
  }

  topo.neighbor_offsets.assign(nv + 1, 0);
  for (const auto& e : topo.edges) {
    ++topo.neighbor_offsets[e[0] + 1];
    ++topo.neighbor_offsets[e[1] + 1];
  }
  for (int v = 0; v < nv; ++v) topo.neighbor_offsets[v + 1] += topo.neighbor_offsets[v];
  topo.neighbors.resize(2 * topo.edges.size());
  {
    std::vector<int> fill(topo.neighbor_offsets.begin(), topo.neighbor_offsets.end() - 1);
    for (const auto& e : topo.edges) {
      topo.neighbors[fill[e[0]]++] = e[1];
      topo.neighbors[fill[e[1]]++] = e[0];
    }
    for (int v = 0; v < nv; ++v)
      std::sort(topo.neighbors.begin() + topo.neighbor_offsets[v],
                topo.neighbors.begin() + topo.neighbor_offsets[v + 1]);
  }
  return topo;
}

std::vector<WettedPolygon> wetted_polygons(const TriMeshDrop& drop, const MeshTopology& topo) {
  const auto& geo = drop.geometry;
  const auto& loop = topo.boundary_loop;
  const int n = static_cast<int>(loop.size());
  std::vector<WettedPolygon> polys(geo.planes.size());
  for (std::size_t j = 0; j < polys.size(); ++j) polys[j].plane = static_cast<int>(j);

  std::vector<int> corners;
  for (int k = 0; k < n; ++k) {
    const VertexTag& tag = drop.tags[loop[k]];
    if (tag.kind == TagKind::Free)
      throw ConsistencyError("boundary vertex " + std::to_string(loop[k]) + " is untagged");
    if (tag.kind == TagKind::OnEdge) corners.push_back(k);
  }
  if (corners.empty()) throw ConsistencyError("contact line has no vertex on a support edge");

  std::vector<char> seen(geo.planes.size(), 0);
  for (std::size_t c = 0; c < corners.size(); ++c) {
    const int ks = corners[c];
    const int ke = corners[(c + 1) % corners.size()];
    const int span = ((ke - ks) % n + n) % n;
    const int v_start = loop[ks];
    const int v_end = loop[ke];
    const EdgeLine& es = geo.edges.at(drop.tags[v_start].id);
    const EdgeLine& ee = geo.edges.at(drop.tags[v_end].id);

    WettedPolygon chain;
    chain.chain.push_back(v_start);
    int plane = -1;
    for (int s = 1; s < span; ++s) {
      const int v = loop[(ks + s) % n];
      const int j = drop.tags[v].id;
      if (plane == -1) plane = j;
      if (j != plane)
        throw ConsistencyError("contact chain changes plane without a support-edge vertex");
      chain.chain.push_back(v);
    }
    chain.chain.push_back(v_end);
    if (plane == -1) {
      if (&es == &ee) throw ConsistencyError("empty contact chain between vertices on one edge");
      plane = common_plane(es, ee);
      if (plane < 0) throw ConsistencyError("adjacent edge vertices share no plane");
    }
    if (!edge_has_plane(es, plane) || !edge_has_plane(ee, plane))
      throw ConsistencyError("contact chain on plane " + std::to_string(plane) +
                             " ends on an edge not bounding that plane");
    if (seen[plane]) throw ConsistencyError("plane " + std::to_string(plane) + " has two contact chains");
    seen[plane] = 1;
    chain.plane = plane;
    if (ee.anchor) chain.anchors.push_back(*ee.anchor);
    if (es.anchor && (!ee.anchor || (*es.anchor - *ee.anchor).norm() > 0.0))
      chain.anchors.push_back(*es.anchor);
    polys[plane] = std::move(chain);
  }
  return polys;
}

double triangle_area(const SurfaceMesh& mesh, int t) {
  const Tri& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[tri[0]];
  return 0.5 * (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).norm();
}

std::vector<Vec3> vertex_normals(const SurfaceMesh& mesh, const MeshTopology& topo) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (int v = 0; v < topo.n_vertices; ++v) {
    Vec3 sum = Vec3::Zero();
    for (int k = topo.incidence_offsets[v]; k < topo.incidence_offsets[v + 1]; ++k) {
      const Tri& tri = mesh.triangles[topo.incidence[k][0]];
      const Vec3& a = mesh.vertices[tri[0]];
      sum += (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
    }
    const double len = sum.norm();
    normals[v] = len > 0.0 ? Vec3(sum / len) : Vec3::Zero();
  }
  return normals;
}

double mesh_diameter(const SurfaceMesh& mesh) {
  double d2 = 0.0;
  const auto& p = mesh.vertices;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) d2 = std::max(d2, (p[i] - p[j]).squaredNorm());
  return std::sqrt(d2);
}

void validate(const TriMeshDrop& drop) {
  const SurfaceMesh& m = drop.surface;
  if (drop.tags.size() != m.vertices.size())
    throw ConsistencyError("tag count does not match vertex count");
  const MeshTopology topo = build_topology(m);
  const int chi = topo.euler_characteristic(static_cast<int>(m.triangles.size()));
  if (chi != 1 || topo.boundary_loop.empty())
    throw MeshDegeneration("surface is not a disk (Euler characteristic " + std::to_string(chi) + ")");
  for (int v = 0; v < topo.n_vertices; ++v) {
    const bool boundary = topo.on_boundary[v];
    const bool free = drop.tags[v].kind == TagKind::Free;
    if (boundary && free) throw ConsistencyError("boundary vertex " + std::to_string(v) + " is Free");
    if (!boundary && !free)
      throw ConsistencyError("interior vertex " + std::to_string(v) + " carries a constraint tag");
  }
  double scale = 1.0;
  for (const Vec3& p : m.vertices) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  for (int v = 0; v < topo.n_vertices; ++v) {
    const double r = drop.geometry.constraint_residual(m.vertices[v], drop.tags[v]);
    if (r > 1e-12 * scale) {
      std::ostringstream os;
      os << "vertex " << v << " (" << to_string(drop.tags[v]) << ") violates its constraint by " << r;
      throw ConsistencyError(os.str());
    }
  }
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    if (!(triangle_area(m, t) > 1e-14))
      throw MeshDegeneration("triangle " + std::to_string(t) + " has area <= 1e-14");
  }
  wetted_polygons(drop, topo);
}

TriMeshDrop refine(const TriMeshDrop& drop) {
  const MeshTopology topo = build_topology(drop.surface);
  TriMeshDrop out = drop;
  const int nv = topo.n_vertices;
  std::unordered_map<std::uint64_t, int> mid;
  mid.reserve(topo.edges.size());
  out.surface.vertices.reserve(nv + topo.edges.size());
  out.tags.reserve(nv + topo.edges.size());

  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const int a = topo.edges[e][0];
    const int b = topo.edges[e][1];
    Vec3 p = 0.5 * (drop.surface.vertices[a] + drop.surface.vertices[b]);
    VertexTag tag = VertexTag::free();
    if (topo.edge_triangle_count[e] == 1) {
      const VertexTag& ta = drop.tags[a];
      const VertexTag& tb = drop.tags[b];
      if (ta.kind == TagKind::OnPlane) {
        tag = ta;
      } else if (tb.kind == TagKind::OnPlane) {
        tag = tb;
      } else if (ta.kind == TagKind::OnEdge && tb.kind == TagKind::OnEdge) {
        const int j = common_plane(drop.geometry.edges.at(ta.id), drop.geometry.edges.at(tb.id));
        if (j < 0 || ta.id == tb.id) throw ConsistencyError("cannot tag boundary midpoint");
        tag = VertexTag::plane(j);
      } else {
        throw ConsistencyError("boundary edge with an untagged endpoint");
      }
    }
    if (drop.reference) {
      const ReferenceSphere& s = *drop.reference;
      if (tag.kind == TagKind::OnPlane) {
        const PlaneSupport& pl = drop.geometry.planes[tag.id];
        const Vec3 c = pl.project(s.center);
        const double d = pl.signed_distance(s.center);
        const double rho = std::sqrt(std::max(0.0, s.radius * s.radius - d * d));
        const Vec3 r = pl.project(p) - c;
        if (r.norm() > 0.0) p = c + rho * r.normalized();
      } else {
        const Vec3 r = p - s.center;
        if (r.norm() > 0.0) p = s.center + s.radius * r.normalized();
      }
    }
    p = drop.geometry.constrain(p, tag);
    mid.emplace(edge_key(a, b), static_cast<int>(out.surface.vertices.size()));
    out.surface.vertices.push_back(p);
    out.tags.push_back(tag);
  }

  out.surface.triangles.clear();
  out.surface.triangles.reserve(4 * drop.surface.triangles.size());
  for (const Tri& t : drop.surface.triangles) {
    const int ab = mid.at(edge_key(t[0], t[1]));
    const int bc = mid.at(edge_key(t[1], t[2]));
    const int ca = mid.at(edge_key(t[2], t[0]));
    out.surface.triangles.push_back({t[0], ab, ca});
    out.surface.triangles.push_back({ab, t[1], bc});
    out.surface.triangles.push_back({ca, bc, t[2]});
    out.surface.triangles.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace capvertex
