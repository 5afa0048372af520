#pragma once

#include "nvs/camera.h"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace nvs {

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> vertex_normals;  // unit length, one per vertex

  bool empty() const { return faces.empty(); }
};

enum class MeshFormat { Obj, PlyAscii, PlyBinary };

/// Parses OBJ (v/vn/f) or PLY (ascii or binary_little_endian). Polygons are
/// fan-triangulated and degenerate faces dropped. Vertex normals come from
/// the file when it supplies one per vertex, otherwise they are computed.
/// Throws ParseError (with line or byte offset) or EmptyMesh.
TriangleMesh load_mesh(std::istream& in, MeshFormat format);
TriangleMesh load_mesh(const std::string& path);

void save_mesh(const TriangleMesh& mesh, std::ostream& out, MeshFormat format);
void save_mesh(const TriangleMesh& mesh, const std::string& path);

/// Format from the file extension; .ply writes binary little-endian.
MeshFormat mesh_format_for_path(const std::string& path);

/// Area-weighted average of adjacent face normals.
std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh);

/// Removes faces with repeated or out-of-range indices or zero area.
/// Returns the number of faces dropped.
std::size_t drop_degenerate_faces(TriangleMesh& mesh);

/// Axis-aligned bounds of the vertices.
std::pair<Vec3, Vec3> bounding_box(const TriangleMesh& mesh);

/// Scales and centers the mesh so its bounding box fits in
/// [-1 + margin, 1 - margin]^3 (largest extent touches the bounds).
/// Returns the new mesh and the similarity that maps old vertices to new.
std::pair<TriangleMesh, Similarity> normalize_to_unit_box(const TriangleMesh& mesh, double margin);

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Similarity& sim);

/// Concatenates meshes into one triangle soup.
TriangleMesh merge_meshes(const std::vector<TriangleMesh>& meshes);

}  // namespace nvs
