#include "nvs/fof.h"

#include "mc_tables.h"

#include <algorithm>
#include <array>
#include <limits>

namespace nvs {

namespace {

constexpr std::array<std::array<int, 3>, 8> kCorner = {{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                                        {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};
constexpr std::array<std::array<int, 2>, 12> kEdge = {
    {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};
constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

}  // namespace

TriangleMesh marching_cubes(const OccupancyGrid& grid, double iso) {
  const int nx = grid.nx(), ny = grid.ny(), nz = grid.nz();
  const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  // Vertex id per grid edge, keyed by its lower sample and axis.
  std::array<std::vector<std::uint32_t>, 3> edge_vertex;
  for (auto& e : edge_vertex) e.assign(n, kUnset);
  auto sample_index = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(k) * ny + static_cast<std::size_t>(j)) * nx + static_cast<std::size_t>(i);
  };

  TriangleMesh mesh;
  auto vertex_on_edge = [&](int i, int j, int k, int e) {
    const auto& c0 = kCorner[kEdge[e][0]];
    const auto& c1 = kCorner[kEdge[e][1]];
    std::array<int, 3> lo{i + std::min(c0[0], c1[0]), j + std::min(c0[1], c1[1]), k + std::min(c0[2], c1[2])};
    const int axis = c0[0] != c1[0] ? 0 : (c0[1] != c1[1] ? 1 : 2);
    std::uint32_t& id = edge_vertex[axis][sample_index(lo[0], lo[1], lo[2])];
    if (id != kUnset) return id;
    std::array<int, 3> hi = lo;
    ++hi[axis];
    const double v0 = grid(lo[0], lo[1], lo[2]);
    const double v1 = grid(hi[0], hi[1], hi[2]);
    const double t = v1 != v0 ? std::clamp((iso - v0) / (v1 - v0), 0.0, 1.0) : 0.5;
    Vec3 p(OccupancyGrid::coord(lo[0], nx), OccupancyGrid::coord(lo[1], ny), OccupancyGrid::coord(lo[2], nz));
    const std::array<double, 3> step{2.0 / nx, 2.0 / ny, 2.0 / nz};
    p[axis] += t * step[axis];
    id = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    return id;
  };

  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          if (grid(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) < iso) cube |= 1 << c;
        }
        if (mc_tables::kEdgeMask[cube] == 0) continue;
        const auto& tris = mc_tables::kTriangles[cube];
        for (int t = 0; tris[t] >= 0; t += 3) {
          // In this corner layout the table order is counter-clockwise seen
          // from the low-valued side.
          mesh.faces.push_back(
              {vertex_on_edge(i, j, k, tris[t]), vertex_on_edge(i, j, k, tris[t + 1]), vertex_on_edge(i, j, k, tris[t + 2])});
        }
      }
    }
  }
  drop_degenerate_faces(mesh);
  mesh.vertex_normals = compute_vertex_normals(mesh);
  return mesh;
}

}  // namespace nvs
