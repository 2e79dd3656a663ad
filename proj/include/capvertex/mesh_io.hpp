#pragma once

// Text formats: Wavefront OBJ with constraint tags, RFC 4180 CSV.
//
// OBJ tag records are comments `# tag <vertex-index> <Free|P<k>|E<k>>` with
// the same 1-based vertex numbering as the `f` records.

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "capvertex/evolver.hpp"
#include "capvertex/grid.hpp"
#include "capvertex/mesh.hpp"

namespace capvertex {

/// Shortest-round-trip-safe decimal (17 significant digits); "nan", "inf".
std::string format_double(double x);

/// Quote a CSV field when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view text);

std::string write_obj(const SurfaceMesh& mesh);
std::string write_obj(const TriMeshDrop& drop);

struct ObjMesh {
  SurfaceMesh mesh;
  std::vector<VertexTag> tags;  // Free where no tag record is present
};

/// Reads v, f and tag records (other records are ignored). Throws
/// ConfigError with the offending line on malformed input.
ObjMesh read_obj(std::istream& in);

/// iter,energy,area,volume,grad_norm,h_estimate
std::string trace_csv(const ConvergenceReport& report);

/// x,y,u at the cell centers.
std::string graph_csv(const Grid2D& u);

/// Height field triangulated over the cell centers (two triangles per
/// quad of neighbouring samples).
SurfaceMesh height_field_mesh(const Grid2D& u);

}  // namespace capvertex
