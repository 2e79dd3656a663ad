#include "capvertex/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "capvertex/errors.hpp"
#include "capvertex/energy.hpp"
#include "capvertex/mesh_io.hpp"
#include "capvertex/seed.hpp"

namespace capvertex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Vec3> sorted_points(const std::vector<Vec3>& points) {
  std::vector<Vec3> p = points;
  std::sort(p.begin(), p.end(), [](const Vec3& a, const Vec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  });
  return p;
}

std::vector<int> two_ring(const MeshTopology& topo, int v) {
  std::vector<int> ring;
  for (int k = topo.neighbor_offsets[v]; k < topo.neighbor_offsets[v + 1]; ++k) {
    const int u = topo.neighbors[k];
    ring.push_back(u);
    for (int l = topo.neighbor_offsets[u]; l < topo.neighbor_offsets[u + 1]; ++l)
      ring.push_back(topo.neighbors[l]);
  }
  std::sort(ring.begin(), ring.end());
  ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
  ring.erase(std::remove(ring.begin(), ring.end(), v), ring.end());
  return ring;
}

// Normal at the origin of the sphere or plane a|x|^2 + b.x = 0 fitted to
// points given relative to the point it must pass through.
template <int D>
Eigen::Matrix<double, D, 1> normal_through_origin(const std::vector<Eigen::Matrix<double, D, 1>>& x) {
  using Mat = Eigen::Matrix<double, D, D>;
  using Vec = Eigen::Matrix<double, D, 1>;
  Mat s = Mat::Zero();
  Vec sv = Vec::Zero();
  double q = 0.0;
  for (const Vec& p : x) {
    const double r2 = p.squaredNorm();
    s += p * p.transpose();
    sv += r2 * p;
    q += r2 * r2;
  }
  if (q > 0.0) s -= sv * sv.transpose() / q;
  Eigen::SelfAdjointEigenSolver<Mat> eig(s);
  return eig.eigenvectors().col(0);
}

struct Frame2 {
  Vec3 e1;
  Vec3 e2;
};

Frame2 plane_frame(const Vec3& n) {
  const Vec3 e1 = n.unitOrthogonal();
  return {e1, n.cross(e1)};
}

}  // namespace

PlaneFit fit_plane(const std::vector<Vec3>& points) {
  if (points.size() < 3) throw DomainError("plane fit needs at least 3 points");
  const std::vector<Vec3> p = sorted_points(points);
  Vec3 c = Vec3::Zero();
  for (const Vec3& x : p) c += x;
  c /= static_cast<double>(p.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& x : p) cov += (x - c) * (x - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  PlaneFit f;
  f.normal = eig.eigenvectors().col(0).normalized();
  f.offset = f.normal.dot(c);
  double ss = 0.0;
  for (const Vec3& x : p) {
    const double dist = f.normal.dot(x) - f.offset;
    ss += dist * dist;
    f.max_distance = std::max(f.max_distance, std::abs(dist));
  }
  f.rms = std::sqrt(ss / static_cast<double>(p.size()));
  return f;
}

SphereFit fit_sphere(const std::vector<Vec3>& points) {
  if (points.size() < 10) throw DomainError("sphere fit needs at least 10 points");
  const std::vector<Vec3> p = sorted_points(points);
  const int n = static_cast<int>(p.size());
  SphereFit fit;
  fit.plane = fit_plane(p);

  Vec3 c0 = Vec3::Zero();
  for (const Vec3& x : p) c0 += x;
  c0 /= n;
  double scale = 0.0;
  for (const Vec3& x : p) scale = std::max(scale, (x - c0).norm());
  if (!(scale > 0.0)) throw DomainError("sphere fit needs distinct points");

  // Algebraic fit a|z|^2 + b.z + c = 0 with |(a, b, c)| = 1.
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
  std::vector<Vec3> z(n);
  for (int i = 0; i < n; ++i) {
    z[i] = (p[i] - c0) / scale;
    Eigen::Matrix<double, 5, 1> row;
    row << z[i].squaredNorm(), z[i].x(), z[i].y(), z[i].z(), 1.0;
    m += row * row.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> eig(m);
  const Eigen::Matrix<double, 5, 1> w = eig.eigenvectors().col(0);
  const Vec3 b(w[1], w[2], w[3]);
  if (std::abs(w[0]) < 1e-9 * b.norm() || fit.plane.rms < 1e-12 * scale) {
    fit.plane_fallback = true;
    return fit;
  }
  Vec3 center = -b / (2.0 * w[0]);
  double radius = std::sqrt(std::max(center.squaredNorm() - w[4] / w[0], 0.0));

  // Gauss-Newton on |z - c| - R.
  for (int it = 0; it < 50; ++it) {
    Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
    Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
    for (int i = 0; i < n; ++i) {
      const Vec3 d = z[i] - center;
      const double len = d.norm();
      Eigen::Vector4d j;
      j << -d / len, -1.0;
      jtj += j * j.transpose();
      jtr += j * (len - radius);
    }
    const Eigen::Vector4d step = jtj.ldlt().solve(-jtr);
    center += step.head<3>();
    radius += step[3];
    if (step.norm() < 1e-15 * std::max(1.0, radius)) break;
  }
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (z[i] - center).norm() - radius;
    ss += r * r;
  }
  fit.center = c0 + scale * center;
  fit.radius = scale * radius;
  fit.relative_rms = std::sqrt(ss / n) / radius;
  return fit;
}

std::vector<VertexCurvature> curvature_field(const SurfaceMesh& mesh) {
  const MeshTopology topo = build_topology(mesh);
  const int nv = topo.n_vertices;
  const std::vector<Vec3> normals = vertex_normals(mesh, topo);
  const SurfaceTerms st = surface_terms(mesh, topo, KernelMode::Serial, true);
  std::vector<VertexCurvature> out(nv);
  for (int v = 0; v < nv; ++v) {
    const int valence = topo.neighbor_offsets[v + 1] - topo.neighbor_offsets[v];
    if (valence < 3)
      throw MeshDegeneration("vertex " + std::to_string(v) + " has valence < 3");
    VertexCurvature& c = out[v];
    c.interior = !topo.on_boundary[v];
    const Vec3& p = mesh.vertices[v];
    if (c.interior) {
      // The cone-volume gradient of an interior vertex does not depend on
      // the origin: 1/6 sum over the fan of (pj - p) x (pk - p).
      Vec3 gv = Vec3::Zero();
      for (int k = topo.incidence_offsets[v]; k < topo.incidence_offsets[v + 1]; ++k) {
        const Tri& t = mesh.triangles[topo.incidence[k][0]];
        const int corner = topo.incidence[k][1];
        const Vec3& pj = mesh.vertices[t[(corner + 1) % 3]];
        const Vec3& pk = mesh.vertices[t[(corner + 2) % 3]];
        gv += (pj - p).cross(pk - p) / 6.0;
      }
      c.h = -st.grad_area[v].dot(normals[v]) / (2.0 * gv.norm());
    }

    const Vec3& n = normals[v];
    const Frame2 fr = plane_frame(n);
    const std::vector<int> ring = two_ring(topo, v);
    if (ring.size() < 5) continue;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(ring.size()), 5);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(ring.size()));
    for (std::size_t k = 0; k < ring.size(); ++k) {
      const Vec3 d = mesh.vertices[ring[k]] - p;
      const double x = d.dot(fr.e1);
      const double y = d.dot(fr.e2);
      a.row(static_cast<Eigen::Index>(k)) << x * x, x * y, y * y, x, y;
      rhs[static_cast<Eigen::Index>(k)] = d.dot(n);
    }
    const Eigen::VectorXd q = a.colPivHouseholderQr().solve(rhs);
    const double fx = q[3];
    const double fy = q[4];
    const double w = std::sqrt(1.0 + fx * fx + fy * fy);
    const double e = 1.0 + fx * fx;
    const double f = fx * fy;
    const double g = 1.0 + fy * fy;
    const double l = 2.0 * q[0] / w;
    const double m = q[1] / w;
    const double nn = 2.0 * q[2] / w;
    const double det1 = e * g - f * f;
    const double gauss = (l * nn - m * m) / det1;
    const double mean = (e * nn - 2.0 * f * m + g * l) / (2.0 * det1);
    const double disc = std::sqrt(std::max(mean * mean - gauss, 0.0));
    c.k1 = mean + disc;
    c.k2 = mean - disc;
  }
  return out;
}

CurvatureStats mean_curvature_stats(const std::vector<VertexCurvature>& field) {
  CurvatureStats s;
  double sum = 0.0;
  for (const auto& c : field)
    if (c.interior) {
      sum += c.h;
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean = sum / s.count;
  double ss = 0.0;
  for (const auto& c : field)
    if (c.interior) ss += (c.h - s.mean) * (c.h - s.mean);
  s.std = std::sqrt(ss / s.count);
  s.cv = s.mean != 0.0 ? s.std / std::abs(s.mean) : kNaN;
  return s;
}

double umbilicity_rms(const SurfaceMesh& mesh, const std::vector<VertexCurvature>& field,
                      double scale) {
  std::vector<double> area(mesh.vertices.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double a = triangle_area(mesh, static_cast<int>(t));
    for (int v : mesh.triangles[t]) area[v] += a / 3.0;
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t v = 0; v < field.size(); ++v) {
    if (!field[v].interior) continue;
    const double gap = field[v].k1 - field[v].k2;
    num += area[v] * gap * gap;
    den += area[v];
  }
  return den > 0.0 ? std::sqrt(num / den) * scale : 0.0;
}

ContactAngleReport measure_contact_angles(const TriMeshDrop& drop) {
  const MeshTopology topo = build_topology(drop.surface);
  const std::vector<Vec3> normals = vertex_normals(drop.surface, topo);
  ContactAngleReport rep;
  rep.max_error.assign(drop.geometry.planes.size(), 0.0);
  for (int v : topo.boundary_loop) {
    const VertexTag& tag = drop.tags[v];
    if (tag.kind != TagKind::OnPlane) continue;
    const std::vector<int> ring = two_ring(topo, v);
    if (ring.size() < 3) throw MeshDegeneration("boundary fan too small for a contact angle");
    std::vector<Vec3> rel;
    for (int u : ring) rel.push_back(drop.surface.vertices[u] - drop.surface.vertices[v]);
    Vec3 nu = normal_through_origin<3>(rel);
    if (nu.dot(normals[v]) < 0.0) nu = -nu;
    const PlaneSupport& pl = drop.geometry.planes[tag.id];
    const double angle = std::acos(std::clamp(nu.dot(pl.normal()), -1.0, 1.0));
    rep.samples.push_back({v, tag.id, angle});
    rep.max_error[tag.id] = std::max(rep.max_error[tag.id], std::abs(angle - pl.gamma()));
  }
  return rep;
}

double measure_vertex_angle(const TriMeshDrop& drop, int vertex) {
  const MeshTopology topo = build_topology(drop.surface);
  if (vertex < 0 || vertex >= topo.n_vertices || drop.tags[vertex].kind != TagKind::OnEdge)
    throw DomainError("vertex angle needs an edge vertex");
  const auto& loop = topo.boundary_loop;
  const int nb = static_cast<int>(loop.size());
  const int k0 = static_cast<int>(std::find(loop.begin(), loop.end(), vertex) - loop.begin());
  const Vec3& pv = drop.surface.vertices[vertex];
  Vec3 tangents[2];
  for (int side = 0; side < 2; ++side) {
    const int step = side == 0 ? 1 : -1;
    std::vector<int> samples;
    for (int s = 1; s < nb && static_cast<int>(samples.size()) < 4; ++s) {
      const int u = loop[((k0 + step * s) % nb + nb) % nb];
      if (drop.tags[u].kind != TagKind::OnPlane) break;
      samples.push_back(u);
    }
    if (samples.size() < 3)
      throw DomainError("fewer than 3 contact samples beside vertex " + std::to_string(vertex));
    const Vec3& n = drop.geometry.planes[drop.tags[samples[0]].id].normal();
    const Frame2 fr = plane_frame(n);
    std::vector<Eigen::Vector2d> rel;
    for (int u : samples) {
      const Vec3 d = drop.surface.vertices[u] - pv;
      rel.emplace_back(d.dot(fr.e1), d.dot(fr.e2));
    }
    const Eigen::Vector2d b = normal_through_origin<2>(rel);
    Vec3 t = -b[1] * fr.e1 + b[0] * fr.e2;
    if (t.dot(drop.surface.vertices[samples[0]] - pv) < 0.0) t = -t;
    tangents[side] = t.normalized();
  }
  return std::acos(std::clamp(tangents[0].dot(tangents[1]), -1.0, 1.0));
}

DiagnosticsReport diagnose(const TriMeshDrop& drop) {
  DiagnosticsReport r;
  const std::vector<VertexCurvature> field = curvature_field(drop.surface);
  r.mean_curvature = mean_curvature_stats(field);
  r.multiplier_h = 0.5 * drop.lagrange_h;
  r.sphere_fit = fit_sphere(drop.surface.vertices);
  r.plane_fit = r.sphere_fit.plane;
  r.diameter = mesh_diameter(drop.surface);
  const double scale = r.sphere_fit.plane_fallback ? 0.5 * r.diameter : r.sphere_fit.radius;
  r.umbilicity_rms = umbilicity_rms(drop.surface, field, scale);
  r.contact_angle_errors = measure_contact_angles(drop).max_error;

  for (std::size_t v = 0; v < drop.tags.size(); ++v) {
    const VertexTag& tag = drop.tags[v];
    if (tag.kind != TagKind::OnEdge) continue;
    VertexAngleSample s;
    s.vertex = static_cast<int>(v);
    s.edge = tag.id;
    try {
      s.measured = measure_vertex_angle(drop, s.vertex);
    } catch (const DomainError&) {
      s.measured = kNaN;
    }
    const EdgeLine& e = drop.geometry.edges[tag.id];
    const PlaneSupport& pa = drop.geometry.planes[e.plane_a];
    const PlaneSupport& pb = drop.geometry.planes[e.plane_b];
    const double alpha = 0.5 * (kPi - std::acos(std::clamp(pa.normal().dot(pb.normal()), -1.0, 1.0)));
    try {
      s.predicted = vertex_angle(alpha, pa.gamma(), pb.gamma()).two_beta;
    } catch (const std::exception&) {
      s.predicted = kNaN;
    }
    s.deviation = std::abs(s.measured - s.predicted);
    r.vertex_angles.push_back(s);
  }
  return r;
}

namespace {

nlohmann::ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

nlohmann::ordered_json vec3(const Vec3& v) { return {number(v.x()), number(v.y()), number(v.z())}; }

double max_finite(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v)
    if (std::isfinite(x)) m = std::max(m, x);
  return m;
}

}  // namespace

std::string to_json(const DiagnosticsReport& r, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["mean_curvature_mean"] = number(r.mean_curvature.mean);
  j["mean_curvature_std"] = number(r.mean_curvature.std);
  j["mean_curvature_cv"] = number(r.mean_curvature.cv);
  j["mean_curvature_count"] = r.mean_curvature.count;
  j["multiplier_h"] = number(r.multiplier_h);
  j["sphere_plane_fallback"] = r.sphere_fit.plane_fallback;
  j["sphere_center"] = vec3(r.sphere_fit.center);
  j["sphere_radius"] = number(r.sphere_fit.radius);
  j["sphere_relative_rms"] = number(r.sphere_fit.relative_rms);
  j["plane_normal"] = vec3(r.plane_fit.normal);
  j["plane_offset"] = number(r.plane_fit.offset);
  j["plane_rms"] = number(r.plane_fit.rms);
  j["plane_max_distance"] = number(r.plane_fit.max_distance);
  j["diameter"] = number(r.diameter);
  j["umbilicity_rms"] = number(r.umbilicity_rms);
  nlohmann::ordered_json ca = nlohmann::ordered_json::array();
  for (double e : r.contact_angle_errors) ca.push_back(number(e));
  j["contact_angle_errors"] = ca;
  nlohmann::ordered_json va = nlohmann::ordered_json::array();
  for (const auto& s : r.vertex_angles)
    va.push_back({{"vertex", s.vertex},
                  {"edge", s.edge},
                  {"measured", number(s.measured)},
                  {"predicted", number(s.predicted)},
                  {"deviation", number(s.deviation)}});
  j["vertex_angles"] = va;
  return j.dump(2) + "\n";
}

std::string to_csv(const DiagnosticsReport& r, std::uint64_t seed) {
  std::vector<double> dev;
  for (const auto& s : r.vertex_angles) dev.push_back(s.deviation);
  std::ostringstream os;
  os << "seed,mean_curvature_mean,mean_curvature_cv,multiplier_h,sphere_radius,"
        "sphere_relative_rms,plane_fallback,plane_max_distance,diameter,umbilicity_rms,"
        "max_contact_angle_error,max_vertex_angle_deviation\r\n";
  os << seed << ',' << format_double(r.mean_curvature.mean) << ','
     << format_double(r.mean_curvature.cv) << ',' << format_double(r.multiplier_h) << ','
     << format_double(r.sphere_fit.radius) << ',' << format_double(r.sphere_fit.relative_rms)
     << ',' << (r.sphere_fit.plane_fallback ? "true" : "false") << ','
     << format_double(r.plane_fit.max_distance) << ',' << format_double(r.diameter) << ','
     << format_double(r.umbilicity_rms) << ',' << format_double(max_finite(r.contact_angle_errors))
     << ',' << format_double(max_finite(dev)) << "\r\n";
  return os.str();
}

SurfaceMesh half_cylinder_mesh(double radius, int refinement) {
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
  SurfaceMesh m = polar_disk(refinement);
  for (Vec3& p : m.vertices) {
    const double x = 0.5 * kPi * radius * p.x();
    const double theta = 0.5 * kPi * p.y();
    p = Vec3(x, radius * std::sin(theta), -radius * std::cos(theta));
  }
  return m;
}

}  // namespace capvertex
