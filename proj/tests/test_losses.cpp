#include "nvs/losses.h"
#include "nvs/mesh.h"
#include "nvs/raster.h"
#include "nvs/shapes.h"
#include "nvs/synthetic.h"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nvs;

namespace {

Image random_image(std::mt19937& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h);
  for (float& v : img.data()) v = u(rng);
  return img;
}

Mask random_mask(std::mt19937& rng, int w, int h) {
  std::bernoulli_distribution b(0.4);
  Mask m(w, h);
  for (auto& v : m.data()) v = b(rng);
  return m;
}

Camera yaw_camera(double yaw, int res) {
  return Camera::look_at(Vec3(3.0 * std::sin(yaw), 0.4, -3.0 * std::cos(yaw)), Vec3::Zero(), Vec3(0, -1, 0), 0.8,
                         res, res, 0.1, 10.0);
}

// Scaled-down 2x2 average of the pixels: a second, coarser grid.
class PyramidEmbedder final : public Embedder {
 public:
  std::vector<FeatureMap> embed(const Image& image) const override {
    FeatureMap full(image.width(), image.height(), 3);
    std::copy(image.data().begin(), image.data().end(), full.data().begin());
    FeatureMap half(image.width() / 2, image.height() / 2, 3);
    for (int y = 0; y < half.height(); ++y) {
      for (int x = 0; x < half.width(); ++x) {
        for (int c = 0; c < 3; ++c) {
          half.at(x, y, c) = 0.25f * (image.at(2 * x, 2 * y, c) + image.at(2 * x + 1, 2 * y, c) +
                                      image.at(2 * x, 2 * y + 1, c) + image.at(2 * x + 1, 2 * y + 1, c));
        }
      }
    }
    return {full, half};
  }
};

}  // namespace

TEST_CASE("pixel loss arithmetic") {
  Image a(3, 2, 0.25f);
  CHECK(pixel_loss(a, a, Mask(3, 2, true)) == 0.0);
  Image b = a;
  b.set_rgb(1, 1, Eigen::Vector3f(0.75f, 0.25f, 0.25f));
  Mask m(3, 2);
  m(1, 1) = 1;
  CHECK(pixel_loss(a, b, m) == 0.5);
  try {
    pixel_loss(a, b, Mask(3, 2));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMask);
  }
}

TEST_CASE("pixel loss matches a double loop and is symmetric") {
  std::mt19937 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Image a = random_image(rng, 17, 13);
    const Image b = random_image(rng, 17, 13);
    Mask m = random_mask(rng, 17, 13);
    m(0, 0) = 1;
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y < 13; ++y) {
      for (int x = 0; x < 17; ++x) {
        if (!m(x, y)) continue;
        ++n;
        for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<double>(a.at(x, y, c)) - b.at(x, y, c));
      }
    }
    CHECK(std::abs(pixel_loss(a, b, m) - sum / n) <= 1e-9);
    CHECK(pixel_loss(a, b, m) == pixel_loss(b, a, m));
    CHECK(pixel_loss(a, b, m) >= 0.0);
  }
}

TEST_CASE("consistency loss: same view and exact warps give zero") {
  const TriangleMesh mesh = normalize_to_unit_box(shapes::torus(1.0, 0.35, 64, 32), 0.1).first;
  const Camera ref = yaw_camera(0.2, 96);
  const TexturedRender r = render_textured(mesh, ref, wave_texture());
  const ConsistencyResult same = consistency_loss(r.image, r.image, r.geometry.depth, r.geometry.depth, ref, ref);
  CHECK(same.value == 0.0);
  CHECK_FALSE(same.empty_visibility);
  CHECK(same.count == r.geometry.mask.count());

  const Camera mv = yaw_camera(0.7, 96);
  const RasterOutput g = rasterize(mesh, mv);
  const FlowZ fz = compute_flow_zmap(g.depth, mv, ref);
  const Image warped = warp(r.image, r.geometry.mask, fz.flow);
  const ConsistencyResult exact = consistency_loss(r.image, warped, r.geometry.depth, g.depth, ref, mv);
  CHECK(exact.count > 0);
  CHECK(exact.value == 0.0);
}

TEST_CASE("consistency loss matches a brute-force mean over the visibility mask") {
  const TriangleMesh mesh = normalize_to_unit_box(shapes::sphere_box_union(), 0.1).first;
  std::mt19937 rng(4);
  for (int t = 0; t < 4; ++t) {
    const Camera ref = yaw_camera(0.5 * t, 64);
    const Camera mv = yaw_camera(0.5 * t + 0.4, 64);
    const RasterOutput gr = rasterize(mesh, ref);
    const RasterOutput gm = rasterize(mesh, mv);
    const Image a = random_image(rng, 64, 64);
    const Image b = random_image(rng, 64, 64);
    const ConsistencyResult r = consistency_loss(a, b, gr.depth, gm.depth, ref, mv);
    const FlowZ fz = compute_flow_zmap(gm.depth, mv, ref);
    const Mask vis = visibility_mask(fz.zmap, fz.flow, gr.depth);
    const Image w = warp(a, gr.mask, fz.flow);
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (!vis(x, y)) continue;
        ++n;
        for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<double>(w.at(x, y, c)) - b.at(x, y, c));
      }
    }
    REQUIRE(n > 0);
    CHECK(r.count == n);
    CHECK(std::abs(r.value - sum / static_cast<double>(n)) <= 1e-9);
    CHECK(r.value >= 0.0);
  }
}

TEST_CASE("consistency loss flags an empty mutual visibility") {
  const TriangleMesh slab = shapes::box(Vec3(-0.8, -0.8, -0.05), Vec3(0.8, 0.8, 0.05));
  const Camera ref = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, -1, 0), 0.8, 48, 48, 0.1, 10);
  const Camera mv = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, -1, 0), 0.8, 48, 48, 0.1, 10);
  const RasterOutput gr = rasterize(slab, ref);
  const RasterOutput gm = rasterize(slab, mv);
  const ConsistencyResult r = consistency_loss(Image(48, 48, 0.2f), Image(48, 48, 0.9f), gr.depth, gm.depth, ref, mv);
  CHECK(r.empty_visibility);
  CHECK(r.value == 0.0);
  CHECK(r.count == 0);
}

TEST_CASE("ground-truth renders 30 degrees apart agree on the mutually visible surface") {
  const TriangleMesh sphere = shapes::icosphere(5, 0.8);
  const Camera ref = yaw_camera(0.0, 256);
  const Camera mv = yaw_camera(std::numbers::pi / 6.0, 256);
  const TexturedRender a = render_textured(sphere, ref, wave_texture());
  const TexturedRender b = render_textured(sphere, mv, wave_texture());
  const ConsistencyResult r = consistency_loss(a.image, b.image, a.geometry.depth, b.geometry.depth, ref, mv);
  MESSAGE("30 degree ground-truth consistency ", r.value);
  CHECK(r.count > 10000);
  CHECK(r.value <= 0.02);
}

TEST_CASE("consistency loss is nearly symmetric in the roles of the two views") {
  // The discrepancy is a constant offset on the surface, so both roles
  // average the same quantity and differ only by resampling and visibility.
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> yaw(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> axis(0.6, 1.0);
  const Texture ta = wave_texture(5.0);
  const Texture tb = [ta](const Vec3& p) { return Eigen::Vector3f(ta(p).array() + 0.1f); };
  std::vector<TriangleMesh> meshes = {shapes::icosphere(4, 0.8),
                                      normalize_to_unit_box(shapes::capsule(0.5, 0.6, 48), 0.1).first};
  for (int k = 0; k < 2; ++k) {
    TriangleMesh e = shapes::icosphere(4);
    const Vec3 s(axis(rng), axis(rng), axis(rng));
    for (Vec3& v : e.vertices) v = v.cwiseProduct(s);
    e.vertex_normals = compute_vertex_normals(e);
    meshes.push_back(e);
  }
  for (const TriangleMesh& mesh : meshes) {
    for (int t = 0; t < 3; ++t) {
      const double y0 = yaw(rng);
      const Camera c0 = yaw_camera(y0, 192);
      const Camera c1 = yaw_camera(y0 + 0.35, 192);
      const TexturedRender a = render_textured(mesh, c0, ta);
      const TexturedRender b = render_textured(mesh, c1, tb);
      const double ab = consistency_loss(a.image, b.image, a.geometry.depth, b.geometry.depth, c0, c1).value;
      const double ba = consistency_loss(b.image, a.image, b.geometry.depth, a.geometry.depth, c1, c0).value;
      CHECK(std::abs(ab - ba) <= 0.02 * std::max(ab, ba));
    }
  }
}

TEST_CASE("identity embedder reduces LPIPS to a masked MSE") {
  std::mt19937 rng(12);
  const IdentityEmbedder id;
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(rng, 12, 10);
    const Image b = random_image(rng, 12, 10);
    Mask m = random_mask(rng, 12, 10);
    m(3, 3) = 1;
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 12; ++x) {
        if (!m(x, y)) continue;
        for (int c = 0; c < 3; ++c) {
          const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
          sum += d * d;
          ++n;
        }
      }
    }
    CHECK(std::abs(lpips_loss(a, b, m, &id) - sum / n) <= 1e-9);
    CHECK(lpips_loss(a, a, m, &id) == 0.0);
  }
}

TEST_CASE("LPIPS is nonnegative for any embedder and needs one") {
  std::mt19937 rng(13);
  const PyramidEmbedder pyr;
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(rng, 16, 12);
    const Image b = random_image(rng, 16, 12);
    Mask m = random_mask(rng, 16, 12);
    m(0, 0) = 1;
    CHECK(lpips_loss(a, b, m, &pyr) >= 0.0);
    CHECK(lpips_loss(a, a, m, &pyr) == 0.0);
  }
  try {
    lpips_loss(Image(4, 4), Image(4, 4), Mask(4, 4, true), nullptr);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmbedderUnavailable);
  }
}

TEST_CASE("total loss weights and linearity") {
  CHECK(LossWeights{}.consistency == 100.0);
  CHECK(LossWeights{}.pixel == 1.0);
  CHECK(LossWeights{}.lpips == 0.5);
  CHECK(total_loss({0.01, 0.2, 0.1}) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(total_loss({0.0, 0.0, 0.0}) == 0.0);
  CHECK(total_loss({3.0, 4.0, 5.0}, {0.0, 0.0, 0.0}) == 0.0);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const LossParts p{u(rng), u(rng), u(rng)};
    const double k = u(rng) * 4.0;
    const double brute = 100.0 * p.consistency + 1.0 * p.pixel + 0.5 * p.lpips;
    CHECK(std::abs(total_loss(p) - brute) <= 1e-9);
    CHECK(std::abs(total_loss({k * p.consistency, p.pixel, p.lpips}) - total_loss(p) -
                   100.0 * (k - 1.0) * p.consistency) <= 1e-9);
  }
  CHECK_THROWS_AS(total_loss({}, {-1.0, 1.0, 1.0}), Error);
}
