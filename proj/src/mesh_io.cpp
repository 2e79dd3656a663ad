#include "capvertex/mesh_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "capvertex/errors.hpp"

namespace capvertex {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string write_obj(const SurfaceMesh& mesh) {
  std::ostringstream os;
  for (const Vec3& v : mesh.vertices)
    os << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
       << format_double(v.z()) << '\n';
  for (const Tri& t : mesh.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  return os.str();
}

std::string write_obj(const TriMeshDrop& drop) {
  std::ostringstream os;
  os << write_obj(drop.surface);
  for (std::size_t v = 0; v < drop.tags.size(); ++v)
    os << "# tag " << v + 1 << ' ' << to_string(drop.tags[v]) << '\n';
  return os.str();
}

ObjMesh read_obj(std::istream& in) {
  ObjMesh out;
  std::vector<std::pair<int, VertexTag>> tags;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) { throw ConfigError(what, line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail("malformed vertex record");
      out.mesh.vertices.emplace_back(x, y, z);
    } else if (kw == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        try {
          std::size_t used = 0;
          const int i = std::stoi(tok, &used);
          if (used != tok.size() && tok[used] != '/') fail("malformed face index '" + tok + "'");
          idx.push_back(i);
        } catch (const std::logic_error&) {
          fail("malformed face index '" + tok + "'");
        }
      }
      if (idx.size() != 3) fail("only triangular faces are supported");
      Tri t;
      for (int k = 0; k < 3; ++k) {
        const int n = static_cast<int>(out.mesh.vertices.size());
        const int i = idx[k] < 0 ? n + idx[k] : idx[k] - 1;
        if (i < 0 || i >= n) fail("face index out of range");
        t[k] = i;
      }
      out.mesh.triangles.push_back(t);
    } else if (kw == "#") {
      std::string what;
      if (!(ls >> what) || what != "tag") continue;
      int index = 0;
      std::string text;
      if (!(ls >> index >> text)) fail("malformed tag record");
      try {
        tags.emplace_back(index - 1, parse_tag(text));
      } catch (const std::exception& e) {
        fail(e.what());
      }
    }
  }
  out.tags.assign(out.mesh.vertices.size(), VertexTag::free());
  for (const auto& [i, tag] : tags) {
    if (i < 0 || i >= static_cast<int>(out.tags.size()))
      throw ConfigError("tag refers to a missing vertex", 0);
    out.tags[i] = tag;
  }
  return out;
}

std::string trace_csv(const ConvergenceReport& report) {
  std::ostringstream os;
  os << "iter,energy,area,volume,grad_norm,h_estimate\r\n";
  for (const auto& r : report.trace)
    os << r.iter << ',' << format_double(r.energy) << ',' << format_double(r.area) << ','
       << format_double(r.volume) << ',' << format_double(r.grad_norm) << ','
       << format_double(r.h_estimate) << "\r\n";
  return os.str();
}

std::string graph_csv(const Grid2D& u) {
  std::ostringstream os;
  os << "x,y,u\r\n";
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i)
      os << format_double(u.x(i)) << ',' << format_double(u.y(j)) << ','
         << format_double(u.at(i, j)) << "\r\n";
  return os.str();
}

SurfaceMesh height_field_mesh(const Grid2D& u) {
  SurfaceMesh m;
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i) m.vertices.emplace_back(u.x(i), u.y(j), u.at(i, j));
  auto id = [&](int i, int j) { return j * u.nx + i; };
  for (int j = 0; j + 1 < u.ny; ++j)
    for (int i = 0; i + 1 < u.nx; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

}  // namespace capvertex
