#include "nvs/raster.h"
#include "nvs/shapes.h"

#include "support/ray_oracle.h"

#include <doctest.h>
#include <omp.h>

#include <Eigen/Geometry>

#include <cmath>
#include <random>

using namespace nvs;

namespace {

// Quad in the plane z = d of the identity camera, wound to face the camera.
TriangleMesh facing_quad(double half, double d, Vec3 offset = Vec3::Zero()) {
  return shapes::quad(offset + Vec3(-half, -half, d), offset + Vec3(-half, half, d), offset + Vec3(half, half, d),
                      offset + Vec3(half, -half, d));
}

Camera identity_camera(int w, int h, double near = 0.1, double far = 100.0) {
  return Camera(w, w, 0.5 * w, 0.5 * h, Mat3::Identity(), Vec3::Zero(), w, h, near, far);
}

double analytic_sphere_depth(const Camera& cam, double u, double v, const Vec3& center, double radius) {
  const Vec3 d((u - cam.cx()) / cam.fx(), (v - cam.cy()) / cam.fy(), 1.0);
  // |t d - c|^2 = r^2, camera at the origin.
  const double a = d.squaredNorm(), b = -2.0 * d.dot(center), c = center.squaredNorm() - radius * radius;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return std::nan("");
  return (-b - std::sqrt(disc)) / (2 * a);
}

}  // namespace

TEST_CASE("full-frame fronto-parallel quad") {
  const Camera cam = identity_camera(64, 48);
  const RasterOutput r = rasterize(facing_quad(10.0, 2.5), cam);
  CHECK(r.mask.count() == 64u * 48u);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      CHECK(r.depth(x, y) == doctest::Approx(2.5).epsilon(1e-6));
      CHECK((r.normals(x, y) - Eigen::Vector3f(0, 0, -1)).norm() < 1e-6f);
    }
  }
}

TEST_CASE("z-buffer keeps the nearer of two overlapping quads") {
  const Camera cam = identity_camera(64, 64);
  const TriangleMesh both = merge_meshes({facing_quad(10.0, 2.0), facing_quad(0.5, 1.0)});
  const RasterOutput r = rasterize(both, cam);
  // The small quad spans u in 32 +- 64 * 0.5 -> whole frame width at d = 1.
  int near_count = 0;
  for (float z : r.depth.data()) {
    CHECK((std::abs(z - 1.0f) < 1e-5f || std::abs(z - 2.0f) < 1e-5f));
    near_count += std::abs(z - 1.0f) < 1e-5f;
  }
  CHECK(near_count == 64 * 64);
  const TriangleMesh side = merge_meshes({facing_quad(10.0, 2.0), facing_quad(0.25, 1.0, Vec3(0.25, 0, 0))});
  const RasterOutput s = rasterize(side, cam);
  // Small quad covers u in [32, 64) and v in [16, 48) at d = 1.
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool inside = x >= 32 && y >= 16 && y < 48;
      CHECK(s.depth(x, y) == doctest::Approx(inside ? 1.0 : 2.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("sphere depth matches the analytic ray intersection") {
  const Camera cam = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, 1, 0), 0.9, 256, 256, 0.1, 10);
  const RasterOutput r = rasterize(shapes::icosphere(5), cam);
  const Vec3 center = cam.world_to_camera(Vec3::Zero());
  int total = 0, good = 0;
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 256; ++x) {
      if (!r.mask(x, y)) continue;
      ++total;
      const double z = analytic_sphere_depth(cam, x + 0.5, y + 0.5, center, 1.0);
      // One pixel of quantization: the analytic depth range over the pixel footprint.
      double spread = 0.0;
      for (double du : {0.0, 1.0}) {
        for (double dv : {0.0, 1.0}) {
          const double zc = analytic_sphere_depth(cam, x + du, y + dv, center, 1.0);
          spread = std::isnan(zc) ? 1.0 : std::max(spread, std::abs(zc - z));
        }
      }
      if (!std::isnan(z) && std::abs(r.depth(x, y) - z) <= spread + 1e-3) ++good;
    }
  }
  CHECK(total > 10000);
  CHECK(static_cast<double>(good) / total >= 0.99);
}

TEST_CASE("silhouettes agree with the ray-cast oracle on random convex meshes") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t agree = 0, pixels = 0;
  for (int i = 0; i < 8; ++i) {
    Mat3 a = Mat3::Identity();
    for (int k = 0; k < 9; ++k) a(k / 3, k % 3) += 0.4 * u(rng);
    TriangleMesh m = shapes::icosphere(3);
    for (Vec3& v : m.vertices) v = a * v;
    m.vertex_normals = compute_vertex_normals(m);
    const Vec3 eye = 4.0 * Vec3(u(rng), u(rng), u(rng)).normalized();
    const Camera cam = Camera::look_at(eye, Vec3::Zero(), Vec3(0, 1, 0), 0.8, 128, 128, 0.1, 20);
    const RasterOutput r = rasterize(m, cam);
    const DepthMap ref = test::raycast_depth(test::RayOracle(m), cam);
    for (std::size_t p = 0; p < ref.size(); ++p) {
      agree += (r.mask[p] != 0) == has_depth(ref[p]);
      ++pixels;
    }
  }
  CHECK(static_cast<double>(agree) / pixels >= 0.995);
}

TEST_CASE("foreground depth lies strictly inside the clip range and normals are unit") {
  const Camera cam = Camera::look_at(Vec3(0.3, 0.2, -2.2), Vec3::Zero(), Vec3(0, 1, 0), 1.0, 128, 96, 1.5, 2.6);
  const RasterOutput r = rasterize(shapes::torus(0.8, 0.35, 48, 24), cam);
  REQUIRE(r.mask.count() > 0);
  for (std::size_t p = 0; p < r.depth.size(); ++p) {
    if (!r.mask[p]) {
      CHECK(r.depth[p] == kNoDepth);
      CHECK(r.normals[p] == Eigen::Vector3f::Zero());
      continue;
    }
    CHECK(r.depth[p] > 1.5f);
    CHECK(r.depth[p] < 2.6f);
    CHECK(std::abs(r.normals[p].norm() - 1.0f) < 1e-3f);
  }
  CHECK(mask_from_depth(r.depth) == r.mask);
}

TEST_CASE("near plane clips geometry crossing it") {
  const Camera cam = identity_camera(32, 32, 1.0, 10.0);
  // Floor plane y = 0.5 running from z = 0.2 to z = 5, facing -y (up in the image).
  const TriangleMesh floor = shapes::quad(Vec3(-2, 0.5, 0.2), Vec3(-2, 0.5, 5), Vec3(2, 0.5, 5), Vec3(2, 0.5, 0.2));
  const RasterOutput r = rasterize(floor, cam);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const double v = (y + 0.5 - 16) / 32.0;  // ray slope
      const double z = v > 0 ? 0.5 / v : INFINITY;
      const bool expect = z > 1.0 && z < 5.0 && std::abs((x + 0.5 - 16) / 32.0 * z) < 2.0;
      CHECK(static_cast<bool>(r.mask(x, y)) == expect);
      if (expect) CHECK(r.depth(x, y) == doctest::Approx(z).epsilon(1e-5));
    }
  }
}

TEST_CASE("behind the camera and beyond far yield nothing; empty mesh is background") {
  const Camera cam = identity_camera(16, 16, 0.1, 5.0);
  CHECK(rasterize(facing_quad(10.0, -2.0), cam).mask.count() == 0);
  CHECK(rasterize(facing_quad(10.0, 6.0), cam).mask.count() == 0);
  CHECK(rasterize(TriangleMesh{}, cam).mask.count() == 0);
}

TEST_CASE("top-left rule covers shared edges exactly once") {
  // A fan of triangles around the frame center whose edges pass through pixel
  // centers; the ortho layer count is exactly one everywhere inside.
  TriangleMesh fan;
  fan.vertices.push_back(Vec3(0, 0, 0));
  const int spokes = 16;
  for (int i = 0; i < spokes; ++i) {
    const double a = 2.0 * M_PI * i / spokes;
    fan.vertices.push_back(Vec3(3 * std::cos(a), 3 * std::sin(a), 0));
  }
  for (int i = 0; i < spokes; ++i) {
    fan.faces.push_back({0, static_cast<std::uint32_t>(1 + i), static_cast<std::uint32_t>(1 + (i + 1) % spokes)});
  }
  // Axis-aligned split through a grid of pixel centers as well.
  TriangleMesh grid;
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) grid.vertices.push_back(Vec3(-1 + 0.5 * i, -1 + 0.5 * j, 0));
  }
  for (std::uint32_t i = 0; i < 4; ++i) {
    for (std::uint32_t j = 0; j < 4; ++j) {
      const std::uint32_t a = i * 5 + j, b = (i + 1) * 5 + j;
      grid.faces.push_back({a, b, b + 1});
      grid.faces.push_back({a, b + 1, a + 1});
    }
  }
  for (int res : {7, 16, 33}) {
    const DepthLayers fl = rasterize_layers_ortho(fan, res, res);
    const DepthLayers gl = rasterize_layers_ortho(grid, res, res);
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        CHECK(gl.at(x, y).size() == 1);
        const double px = -1 + (x + 0.5) * 2.0 / res, py = -1 + (y + 0.5) * 2.0 / res;
        if (std::hypot(px, py) < 0.9) CHECK(fl.at(x, y).size() == 1);
      }
    }
  }
}

TEST_CASE("ortho layers of a sphere give the analytic entry and exit") {
  const DepthLayers layers = rasterize_layers_ortho(shapes::icosphere(5, 0.8), 64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double px = -1 + (x + 0.5) / 32.0, py = -1 + (y + 0.5) / 32.0;
      const double r2 = 0.64 - px * px - py * py;
      if (r2 > 0.01) {
        REQUIRE(layers.at(x, y).size() == 2);
        CHECK(layers.at(x, y)[0] == doctest::Approx(-std::sqrt(r2)).epsilon(3e-3));
        CHECK(layers.at(x, y)[1] == doctest::Approx(std::sqrt(r2)).epsilon(3e-3));
      } else if (r2 < -0.01) {
        CHECK(layers.at(x, y).empty());
      }
    }
  }
}

TEST_CASE("adding geometry never increases depth") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Camera cam = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, 1, 0), 0.9, 96, 96, 0.1, 10);
  TriangleMesh scene = shapes::icosphere(2);
  RasterOutput prev = rasterize(scene, cam);
  for (int i = 0; i < 5; ++i) {
    scene = merge_meshes({scene, shapes::box(Vec3(u(rng), u(rng), u(rng)) - Vec3::Constant(0.3),
                                             Vec3(u(rng), u(rng), u(rng)) + Vec3::Constant(0.6))});
    const RasterOutput next = rasterize(scene, cam);
    for (std::size_t p = 0; p < next.depth.size(); ++p) CHECK(next.depth[p] <= prev.depth[p]);
    prev = next;
  }
}

TEST_CASE("output is bit-identical regardless of thread count") {
  const Camera cam = Camera::look_at(Vec3(1, 0.5, -2.5), Vec3::Zero(), Vec3(0, 1, 0), 0.9, 200, 150, 0.1, 10);
  const TriangleMesh m = shapes::sphere_box_union();
  omp_set_num_threads(1);
  const RasterOutput a = rasterize(m, cam);
  omp_set_num_threads(4);
  const RasterOutput b = rasterize(m, cam);
  const RasterOutput c = rasterize(m, cam);
  CHECK(a.depth == b.depth);
  CHECK(a.normals == b.normals);
  CHECK(b.depth == c.depth);
  CHECK(a.mask == b.mask);
}
