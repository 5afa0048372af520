#include "nvs/shapes.h"

#include "nvs/error.h"

#include <cmath>
#include <map>
#include <numbers>

namespace nvs::shapes {

TriangleMesh icosphere(int subdivisions, double radius, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& tri : f) {
      const auto ab = mid(tri[0], tri[1]);
      const auto bc = mid(tri[1], tri[2]);
      const auto ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  TriangleMesh mesh;
  mesh.vertex_normals = v;
  for (Vec3& p : v) p = center + radius * p;
  mesh.vertices = std::move(v);
  mesh.faces = std::move(f);
  return mesh;
}

TriangleMesh box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                               (i & 4) ? hi.z() : lo.z());
  }
  // Counter-clockwise seen from outside.
  mesh.faces = {{0, 2, 3}, {0, 3, 1},   // -z
                {4, 5, 7}, {4, 7, 6},   // +z
                {0, 4, 6}, {0, 6, 2},   // -x
                {1, 3, 7}, {1, 7, 5},   // +x
                {0, 1, 5}, {0, 5, 4},   // -y
                {2, 6, 7}, {2, 7, 3}};  // +y
  mesh.vertex_normals = compute_vertex_normals(mesh);
  return mesh;
}

TriangleMesh torus(double major, double minor, int ring_segments, int tube_segments, const Vec3& center) {
  if (ring_segments < 3 || tube_segments < 3) throw Error(ErrorCode::InvalidArgument, "torus needs >= 3 segments");
  TriangleMesh mesh;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < ring_segments; ++i) {
    const double u = two_pi * i / ring_segments;
    for (int j = 0; j < tube_segments; ++j) {
      const double w = two_pi * j / tube_segments;
      const Vec3 ring(std::cos(u), 0.0, std::sin(u));
      const Vec3 n = std::cos(w) * ring + std::sin(w) * Vec3::UnitY();
      mesh.vertices.push_back(center + major * ring + minor * n);
      mesh.vertex_normals.push_back(n);
    }
  }
  auto id = [&](int i, int j) {
    return static_cast<std::uint32_t>((i % ring_segments) * tube_segments + (j % tube_segments));
  };
  for (int i = 0; i < ring_segments; ++i) {
    for (int j = 0; j < tube_segments; ++j) {
      mesh.faces.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
      mesh.faces.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
    }
  }
  return mesh;
}

TriangleMesh capsule(double radius, double half_length, int segments, const Vec3& center) {
  if (segments < 4) throw Error(ErrorCode::InvalidArgument, "capsule needs >= 4 segments");
  TriangleMesh mesh;
  const int rings = segments / 2;  // per hemisphere, excluding the pole
  const double two_pi = 2.0 * std::numbers::pi;
  // Latitude rows from the top pole down to the bottom pole; the equator row
  // is duplicated, once per hemisphere, to form the cylinder wall.
  std::vector<std::pair<double, double>> rows;  // (polar angle, y offset)
  for (int r = 1; r <= rings; ++r) rows.emplace_back(0.5 * std::numbers::pi * r / rings, half_length);
  for (int r = 0; r < rings; ++r) {
    rows.emplace_back(0.5 * std::numbers::pi + 0.5 * std::numbers::pi * r / rings, -half_length);
  }
  mesh.vertices.push_back(center + Vec3(0, half_length + radius, 0));
  mesh.vertex_normals.emplace_back(0, 1, 0);
  for (const auto& [theta, yoff] : rows) {
    for (int s = 0; s < segments; ++s) {
      const double phi = two_pi * s / segments;
      const Vec3 n(std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi));
      mesh.vertices.push_back(center + Vec3(0, yoff, 0) + radius * n);
      mesh.vertex_normals.push_back(n);
    }
  }
  mesh.vertices.push_back(center + Vec3(0, -half_length - radius, 0));
  mesh.vertex_normals.emplace_back(0, -1, 0);
  const auto bottom = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  auto id = [&](int row, int s) { return static_cast<std::uint32_t>(1 + row * segments + (s % segments)); };
  const int nrows = static_cast<int>(rows.size());
  for (int s = 0; s < segments; ++s) mesh.faces.push_back({0, id(0, s + 1), id(0, s)});
  for (int r = 0; r + 1 < nrows; ++r) {
    for (int s = 0; s < segments; ++s) {
      mesh.faces.push_back({id(r, s), id(r, s + 1), id(r + 1, s + 1)});
      mesh.faces.push_back({id(r, s), id(r + 1, s + 1), id(r + 1, s)});
    }
  }
  for (int s = 0; s < segments; ++s) mesh.faces.push_back({bottom, id(nrows - 1, s), id(nrows - 1, s + 1)});
  return mesh;
}

TriangleMesh quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  TriangleMesh mesh;
  mesh.vertices = {a, b, c, d};
  mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  mesh.vertex_normals = compute_vertex_normals(mesh);
  return mesh;
}

TriangleMesh sphere_box_union() {
  return merge_meshes({icosphere(4, 0.6, Vec3(-0.25, 0.0, 0.0)),
                       box(Vec3(0.0, -0.35, -0.35), Vec3(0.8, 0.35, 0.35))});
}

}  // namespace nvs::shapes
