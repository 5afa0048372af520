#include "nvs/raster.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace nvs {

namespace {

constexpr int kSubpixelBits = 8;
constexpr std::int64_t kOne = std::int64_t{1} << kSubpixelBits;
constexpr std::int64_t kHalf = kOne / 2;
// Screen coordinates beyond this many pixels would overflow the 64-bit edge
// functions; such triangles are skipped.
constexpr double kGuardBand = static_cast<double>(1 << 19);
constexpr int kBandRows = 8;

static_assert(kHalf == static_cast<std::int64_t>(kPixelCenter * kOne));

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

struct ScreenTriangle {
  std::array<std::int64_t, 3> x{};
  std::array<std::int64_t, 3> y{};
  std::array<double, 3> attr{};  // interpolated linearly in screen space
  std::uint32_t face = 0;
  int x_first = 0, x_last = -1, y_first = 0, y_last = -1;
};

bool setup_triangle(const std::array<double, 3>& u, const std::array<double, 3>& v,
                    const std::array<double, 3>& attr, std::uint32_t face, int width, int height,
                    ScreenTriangle& t) {
  for (int i = 0; i < 3; ++i) {
    if (!(std::abs(u[i]) < kGuardBand) || !(std::abs(v[i]) < kGuardBand)) return false;
    t.x[i] = std::llround(u[i] * kOne);
    t.y[i] = std::llround(v[i] * kOne);
    t.attr[i] = attr[i];
  }
  const std::int64_t area = (t.x[1] - t.x[0]) * (t.y[2] - t.y[0]) - (t.y[1] - t.y[0]) * (t.x[2] - t.x[0]);
  if (area == 0) return false;
  if (area < 0) {
    std::swap(t.x[1], t.x[2]);
    std::swap(t.y[1], t.y[2]);
    std::swap(t.attr[1], t.attr[2]);
  }
  const auto [xmin, xmax] = std::minmax({t.x[0], t.x[1], t.x[2]});
  const auto [ymin, ymax] = std::minmax({t.y[0], t.y[1], t.y[2]});
  t.x_first = static_cast<int>(std::max<std::int64_t>(0, ceil_div(xmin - kHalf, kOne)));
  t.x_last = static_cast<int>(std::min<std::int64_t>(width - 1, floor_div(xmax - kHalf, kOne)));
  t.y_first = static_cast<int>(std::max<std::int64_t>(0, ceil_div(ymin - kHalf, kOne)));
  t.y_last = static_cast<int>(std::min<std::int64_t>(height - 1, floor_div(ymax - kHalf, kOne)));
  t.face = face;
  return t.x_first <= t.x_last && t.y_first <= t.y_last;
}

// Calls fn(x, y, interpolated_attr) for every covered pixel center in rows
// [row_begin, row_end).
template <typename Fn>
void scan_triangle(const ScreenTriangle& t, int row_begin, int row_end, Fn&& fn) {
  const int y0 = std::max(t.y_first, row_begin);
  const int y1 = std::min(t.y_last, row_end - 1);
  if (y0 > y1) return;
  const std::int64_t area = (t.x[1] - t.x[0]) * (t.y[2] - t.y[0]) - (t.y[1] - t.y[0]) * (t.x[2] - t.x[0]);
  std::array<std::int64_t, 3> dx{}, dy{}, bias{}, row_e{};
  const std::int64_t px0 = std::int64_t{t.x_first} * kOne + kHalf;
  const std::int64_t py0 = std::int64_t{y0} * kOne + kHalf;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const std::int64_t ex = t.x[j] - t.x[i];
    const std::int64_t ey = t.y[j] - t.y[i];
    dx[i] = -ey * kOne;  // step in x
    dy[i] = ex * kOne;   // step in y
    // Top-left rule for positively oriented triangles in y-down screen space.
    const bool top = ey == 0 && ex > 0;
    const bool left = ey < 0;
    bias[i] = (top || left) ? 0 : -1;
    row_e[i] = ex * (py0 - t.y[i]) - ey * (px0 - t.x[i]);
  }
  // Edge i is opposite vertex (i + 2) % 3.
  const double inv_area = 1.0 / static_cast<double>(area);
  const double a0 = t.attr[2] * inv_area;  // weight of edge 0
  const double a1 = t.attr[0] * inv_area;  // weight of edge 1
  const double a2 = t.attr[1] * inv_area;  // weight of edge 2
  for (int y = y0; y <= y1; ++y) {
    std::int64_t e0 = row_e[0], e1 = row_e[1], e2 = row_e[2];
    for (int x = t.x_first; x <= t.x_last; ++x) {
      if ((e0 + bias[0]) >= 0 && (e1 + bias[1]) >= 0 && (e2 + bias[2]) >= 0) {
        fn(x, y, static_cast<double>(e0) * a0 + static_cast<double>(e1) * a1 + static_cast<double>(e2) * a2);
      }
      e0 += dx[0];
      e1 += dx[1];
      e2 += dx[2];
    }
    row_e[0] += dy[0];
    row_e[1] += dy[1];
    row_e[2] += dy[2];
  }
}

// Buckets triangle indices by band of kBandRows rows (CSR layout), keeping
// submission order within each band.
struct Bins {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> items;
};

Bins bin_triangles(const std::vector<ScreenTriangle>& tris, int bands) {
  Bins bins;
  bins.offsets.assign(static_cast<std::size_t>(bands) + 1, 0);
  for (const ScreenTriangle& t : tris) {
    for (int b = t.y_first / kBandRows; b <= t.y_last / kBandRows; ++b) ++bins.offsets[b + 1];
  }
  for (int b = 0; b < bands; ++b) bins.offsets[b + 1] += bins.offsets[b];
  bins.items.resize(bins.offsets.back());
  std::vector<std::uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (std::uint32_t i = 0; i < tris.size(); ++i) {
    const ScreenTriangle& t = tris[i];
    for (int b = t.y_first / kBandRows; b <= t.y_last / kBandRows; ++b) bins.items[cursor[b]++] = i;
  }
  return bins;
}

// Sutherland-Hodgman clip of a triangle against z >= near. Returns the vertex count.
int clip_near(const std::array<Vec3, 3>& in, double near, std::array<Vec3, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = in[i];
    const Vec3& b = in[(i + 1) % 3];
    const bool a_in = a.z() >= near;
    const bool b_in = b.z() >= near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double s = (near - a.z()) / (b.z() - a.z());
      Vec3 p = a + s * (b - a);
      p.z() = near;
      out[n++] = p;
    }
  }
  return n;
}

}  // namespace

RasterOutput rasterize(const TriangleMesh& mesh, const Camera& cam) {
  const int width = cam.width();
  const int height = cam.height();
  RasterOutput out{DepthMap(width, height), NormalMap(width, height), Mask(width, height)};
  if (mesh.faces.empty()) return out;

  const std::size_t nv = mesh.vertices.size();
  std::vector<Vec3> pc(nv);
  std::vector<Eigen::Vector3f> nc(nv, Eigen::Vector3f::UnitZ());
  const bool have_normals = mesh.vertex_normals.size() == nv;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(nv); ++i) {
    pc[i] = cam.world_to_camera(mesh.vertices[i]);
    if (have_normals) nc[i] = (cam.rotation() * mesh.vertex_normals[i]).cast<float>();
  }

  const double near = cam.near();
  const double far = cam.far();
  std::vector<ScreenTriangle> tris;
  tris.reserve(mesh.faces.size());
  for (std::uint32_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    const std::array<Vec3, 3> v{pc[face[0]], pc[face[1]], pc[face[2]]};
    if (v[0].z() < near && v[1].z() < near && v[2].z() < near) continue;
    if (v[0].z() > far && v[1].z() > far && v[2].z() > far) continue;
    std::array<Vec3, 4> poly;
    const int n = clip_near(v, near, poly);
    if (n < 3) continue;
    std::array<double, 4> u{}, w{}, inv_z{};
    for (int i = 0; i < n; ++i) {
      u[i] = cam.fx() * poly[i].x() / poly[i].z() + cam.cx();
      w[i] = cam.fy() * poly[i].y() / poly[i].z() + cam.cy();
      inv_z[i] = 1.0 / poly[i].z();
    }
    for (int i = 1; i + 1 < n; ++i) {
      ScreenTriangle t;
      if (setup_triangle({u[0], u[i], u[i + 1]}, {w[0], w[i], w[i + 1]}, {inv_z[0], inv_z[i], inv_z[i + 1]},
                         f, width, height, t)) {
        tris.push_back(t);
      }
    }
  }

  const int bands = (height + kBandRows - 1) / kBandRows;
  const Bins bins = bin_triangles(tris, bands);
  constexpr std::uint32_t kNoFace = std::numeric_limits<std::uint32_t>::max();
  std::vector<double> best_inv_z(static_cast<std::size_t>(width) * height, 0.0);
  std::vector<std::uint32_t> best_face(best_inv_z.size(), kNoFace);
  const double inv_near = 1.0 / near;
  const double inv_far = 1.0 / far;

#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < bands; ++b) {
    const int row_begin = b * kBandRows;
    const int row_end = std::min(height, row_begin + kBandRows);
    for (std::uint32_t k = bins.offsets[b]; k < bins.offsets[b + 1]; ++k) {
      const ScreenTriangle& t = tris[bins.items[k]];
      scan_triangle(t, row_begin, row_end, [&](int x, int y, double inv_z) {
        const std::size_t idx = static_cast<std::size_t>(y) * width + x;
        if (inv_z < inv_near && inv_z > inv_far && inv_z > best_inv_z[idx]) {
          best_inv_z[idx] = inv_z;
          best_face[idx] = t.face;
        }
      });
    }
  }

  // Resolve: exact ray/facet depth and perspective-correct normal blend.
  const double z_lo = std::nextafter(static_cast<float>(near), std::numeric_limits<float>::infinity());
  const double z_hi = std::nextafter(static_cast<float>(far), 0.0f);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * width + x;
      const std::uint32_t f = best_face[idx];
      if (f == kNoFace) continue;
      const Face& face = mesh.faces[f];
      const Vec3& a = pc[face[0]];
      const Vec3& b = pc[face[1]];
      const Vec3& c = pc[face[2]];
      const Vec3 ray((x + kPixelCenter - cam.cx()) / cam.fx(), (y + kPixelCenter - cam.cy()) / cam.fy(), 1.0);
      const Vec3 n = (b - a).cross(c - a);
      const double denom = n.dot(ray);
      double z = 1.0 / best_inv_z[idx];
      if (std::abs(denom) > 1e-12 * n.norm() * ray.norm()) {
        const double t = n.dot(a) / denom;
        if (t > 0.0) z = t;
      }
      z = std::clamp(z, z_lo, z_hi);
      const Vec3 p = z * ray;
      const double nn = n.squaredNorm();
      std::array<double, 3> bary{(b - p).cross(c - p).dot(n) / nn, (c - p).cross(a - p).dot(n) / nn,
                                 (a - p).cross(b - p).dot(n) / nn};
      double sum = 0.0;
      for (double& l : bary) {
        l = std::clamp(l, 0.0, 1.0);
        sum += l;
      }
      Eigen::Vector3f normal = Eigen::Vector3f::Zero();
      if (have_normals && sum > 0.0) {
        normal = static_cast<float>(bary[0] / sum) * nc[face[0]] + static_cast<float>(bary[1] / sum) * nc[face[1]] +
                 static_cast<float>(bary[2] / sum) * nc[face[2]];
      }
      if (!(normal.norm() > 1e-6f)) {
        // Flat facet normal facing the viewer.
        Vec3 fn = n.normalized();
        if (fn.dot(ray) > 0.0) fn = -fn;
        normal = fn.cast<float>();
      }
      out.depth[idx] = static_cast<float>(z);
      out.normals[idx] = normal.normalized();
      out.mask[idx] = 1;
    }
  }
  return out;
}

DepthLayers rasterize_layers_ortho(const TriangleMesh& mesh, int width, int height) {
  std::vector<ScreenTriangle> tris;
  std::vector<std::int8_t> tri_facing;
  tris.reserve(mesh.faces.size());
  for (std::uint32_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    std::array<double, 3> u{}, v{}, z{};
    for (int i = 0; i < 3; ++i) {
      const Vec3& p = mesh.vertices[face[i]];
      u[i] = (p.x() + 1.0) * 0.5 * width;
      v[i] = (p.y() + 1.0) * 0.5 * height;
      z[i] = p.z();
    }
    // Sign of the normal's z component.
    const double area = (u[1] - u[0]) * (v[2] - v[0]) - (v[1] - v[0]) * (u[2] - u[0]);
    ScreenTriangle t;
    if (setup_triangle(u, v, z, f, width, height, t)) {
      tris.push_back(t);
      tri_facing.push_back(area < 0.0 ? 1 : -1);
    }
  }
  const int bands = (height + kBandRows - 1) / kBandRows;
  const Bins bins = bin_triangles(tris, bands);
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  std::vector<std::uint32_t> offsets(pixels + 1, 0);

#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < bands; ++b) {
    const int row_begin = b * kBandRows;
    const int row_end = std::min(height, row_begin + kBandRows);
    for (std::uint32_t k = bins.offsets[b]; k < bins.offsets[b + 1]; ++k) {
      scan_triangle(tris[bins.items[k]], row_begin, row_end,
                    [&](int x, int y, double) { ++offsets[static_cast<std::size_t>(y) * width + x + 1]; });
    }
  }
  for (std::size_t i = 0; i < pixels; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::pair<float, std::int8_t>> crossings(offsets.back());
  std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);

#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < bands; ++b) {
    const int row_begin = b * kBandRows;
    const int row_end = std::min(height, row_begin + kBandRows);
    for (std::uint32_t k = bins.offsets[b]; k < bins.offsets[b + 1]; ++k) {
      const std::int8_t facing = tri_facing[bins.items[k]];
      scan_triangle(tris[bins.items[k]], row_begin, row_end, [&](int x, int y, double z) {
        crossings[cursor[static_cast<std::size_t>(y) * width + x]++] = {static_cast<float>(z), facing};
      });
    }
    // Ties put exits before entries.
    for (int y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        std::sort(crossings.begin() + offsets[i], crossings.begin() + offsets[i + 1]);
      }
    }
  }
  std::vector<float> depths(crossings.size());
  std::vector<std::int8_t> facing(crossings.size());
  for (std::size_t i = 0; i < crossings.size(); ++i) {
    depths[i] = crossings[i].first;
    facing[i] = crossings[i].second;
  }
  return DepthLayers(width, height, std::move(offsets), std::move(depths), std::move(facing));
}

}  // namespace nvs
