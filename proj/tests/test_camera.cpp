#include "nvs/camera.h"
#include "nvs/error.h"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

using namespace nvs;

namespace {

Camera identity_camera(int w = 512, int h = 512) {
  return Camera(500, 500, 256, 256, Mat3::Identity(), Vec3::Zero(), w, h, 0.01, 100.0);
}

Mat3 random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

Camera random_camera(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Camera(300 + 200 * std::abs(u(rng)), 300 + 200 * std::abs(u(rng)), 128 + 10 * u(rng), 128 + 10 * u(rng),
                random_rotation(rng), Vec3(u(rng), u(rng), u(rng)), 256, 256, 0.01, 100.0);
}

}  // namespace

TEST_CASE("project: principal point and pinhole arithmetic") {
  const Camera cam = identity_camera();
  for (double z : {0.5, 1.0, 7.0}) {
    const auto [px, depth] = project(cam, Vec3(0, 0, z));
    CHECK(px.u == 256.0);
    CHECK(px.v == 256.0);
    CHECK(depth == z);
  }
  const auto [px, z] = project(cam, Vec3(0.1, 0, 1));
  CHECK(px.u == doctest::Approx(306.0).epsilon(1e-12));
  CHECK(px.v == 256.0);
  CHECK(z == 1.0);
}

TEST_CASE("project: points at or behind the center are rejected") {
  const Camera cam = identity_camera();
  CHECK_THROWS_AS(project(cam, Vec3(0, 0, 0)), Error);
  CHECK_THROWS_AS(project(cam, Vec3(1, 0, -1)), Error);
  try {
    project(cam, Vec3(0, 0, 1e-10));
    FAIL("expected DegeneratePoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePoint);
  }
}

TEST_CASE("unproject: axis case and invalid depth") {
  std::mt19937 rng(3);
  const Camera cam = random_camera(rng);
  const Vec3 p = unproject(cam, {cam.cx(), cam.cy()}, 2.5);
  CHECK((p - (cam.center() + 2.5 * cam.optical_axis())).norm() < 1e-9);
  try {
    unproject(cam, {1, 1}, 0.0);
    FAIL("expected InvalidDepth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidDepth);
  }
}

TEST_CASE("project and unproject are mutual inverses") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Camera cam = random_camera(rng);
    const PixelCoord px{128 + 200 * u(rng), 128 + 200 * u(rng)};
    const double z = 0.1 + 10.0 * std::abs(u(rng));
    const Vec3 p = unproject(cam, px, z);
    const auto [back, back_z] = project(cam, p);
    CHECK(std::abs(back.u - px.u) <= 1e-6 * std::max(1.0, std::abs(px.u)));
    CHECK(std::abs(back.v - px.v) <= 1e-6 * std::max(1.0, std::abs(px.v)));
    CHECK(std::abs(back_z - z) <= 1e-6 * z);
    const Vec3 again = unproject(cam, back, back_z);
    CHECK((again - p).norm() <= 1e-6 * std::max(1.0, p.norm()));
  }
}

TEST_CASE("project is invariant to scaling along the ray") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Camera cam = random_camera(rng);
    const Vec3 pc(u(rng), u(rng), 1.0 + std::abs(u(rng)));
    const double s = 0.1 + 5.0 * std::abs(u(rng));
    const auto [a, za] = project(cam, cam.camera_to_world(pc));
    const auto [b, zb] = project(cam, cam.camera_to_world(s * pc));
    CHECK(a.u == doctest::Approx(b.u).epsilon(1e-9));
    CHECK(a.v == doctest::Approx(b.v).epsilon(1e-9));
    CHECK(zb == doctest::Approx(s * za).epsilon(1e-9));
  }
}

TEST_CASE("horizontal disparity between x-translated cameras") {
  // Reference: for a point on the plane z = d seen by A, search B's image row
  // for the pixel whose ray hits that point (bisection on ray/plane hits).
  const double f = 400.0, t = 0.3;
  const Camera a(f, f, 200, 150, Mat3::Identity(), Vec3::Zero(), 400, 300, 0.01, 100);
  // B's center sits at world x = t.
  const Camera b(f, f, 200, 150, Mat3::Identity(), Vec3(-t, 0, 0), 400, 300, 0.01, 100);
  for (double d : {1.0, 2.0, 5.0}) {
    for (double u : {10.5, 200.0, 377.25}) {
      const Vec3 p = unproject(a, {u, 80.0}, d);
      const auto [pb, zb] = project(b, p);
      auto hit_x = [&](double ub) {
        const Vec3 dir((ub - b.cx()) / b.fx(), (80.0 - b.cy()) / b.fy(), 1.0);
        return b.center().x() + dir.x() * (d - b.center().z());
      };
      double lo = -1000.0, hi = 1000.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (hit_x(mid) < p.x() ? lo : hi) = mid;
      }
      CHECK(pb.u == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
      CHECK(u - pb.u == doctest::Approx(f * t / d).epsilon(1e-9));
      CHECK(zb == doctest::Approx(d));
    }
  }
}

TEST_CASE("relative_angle") {
  const Camera a = identity_camera();
  CHECK(relative_angle(a, a) == 0.0);
  const Camera back(500, 500, 256, 256, Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitY()).toRotationMatrix(),
                    Vec3::Zero(), 512, 512, 0.01, 100);
  CHECK(relative_angle(a, back) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  const Camera yaw(500, 500, 256, 256, Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()).toRotationMatrix(),
                   Vec3::Zero(), 512, 512, 0.01, 100);
  CHECK(relative_angle(a, yaw) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));

  std::mt19937 rng(17);
  for (int i = 0; i < 200; ++i) {
    const Camera x = random_camera(rng), y = random_camera(rng), z = random_camera(rng);
    CHECK(std::abs(relative_angle(x, y) - relative_angle(y, x)) <= 1e-9);
    CHECK(relative_angle(x, z) <= relative_angle(x, y) + relative_angle(y, z) + 1e-9);
    const double ang = relative_angle(x, y);
    CHECK(ang >= 0.0);
    CHECK(ang <= std::numbers::pi);
  }
}

TEST_CASE("constructor invariants") {
  const Mat3 r = Mat3::Identity();
  CHECK_THROWS_AS(Camera(0, 1, 0, 0, r, Vec3::Zero(), 4, 4, 0.1, 1), Error);
  CHECK_THROWS_AS(Camera(1, -1, 0, 0, r, Vec3::Zero(), 4, 4, 0.1, 1), Error);
  CHECK_THROWS_AS(Camera(1, 1, 0, 0, r, Vec3::Zero(), 0, 4, 0.1, 1), Error);
  CHECK_THROWS_AS(Camera(1, 1, 0, 0, r, Vec3::Zero(), 4, 4, 0.0, 1), Error);
  CHECK_THROWS_AS(Camera(1, 1, 0, 0, r, Vec3::Zero(), 4, 4, 1.0, 1.0), Error);
  CHECK_THROWS_AS(Camera(1, 1, 0, 0, 2.0 * r, Vec3::Zero(), 4, 4, 0.1, 1), Error);
  CHECK_THROWS_AS(Camera(1, 1, 0, 0, -r, Vec3::Zero(), 4, 4, 0.1, 1), Error);
  Mat3 nearly = r;
  nearly(0, 1) = 1e-8;
  CHECK_NOTHROW(Camera(1, 1, 0, 0, nearly, Vec3::Zero(), 4, 4, 0.1, 1));
}

TEST_CASE("JSON round trip is lossless") {
  std::mt19937 rng(23);
  for (int i = 0; i < 20; ++i) {
    const Camera cam = random_camera(rng);
    const Camera back = camera_from_json(nlohmann::json::parse(to_json(cam).dump()));
    CHECK(back == cam);
  }
  CHECK_THROWS_AS(camera_from_json(nlohmann::json::parse(R"({"fx":1})")), Error);
  auto j = to_json(identity_camera());
  j["R"] = {1, 0, 0};
  CHECK_THROWS_AS(camera_from_json(j), Error);
}

TEST_CASE("look_at frames the target on the principal point") {
  const Camera cam = Camera::look_at(Vec3(1, 2, 3), Vec3(0, 0, 0), Vec3(0, 1, 0), 0.8, 64, 48, 0.1, 10);
  const auto [px, z] = project(cam, Vec3::Zero());
  CHECK(px.u == doctest::Approx(32.0));
  CHECK(px.v == doctest::Approx(24.0));
  CHECK(z == doctest::Approx(std::sqrt(14.0)));
  // World up appears toward smaller v.
  const auto [above, za] = project(cam, Vec3(0, 0.1, 0));
  CHECK(above.v < 24.0);
}

TEST_CASE("transformed camera sees the transformed scene identically") {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Similarity sim{0.37, Vec3(0.2, -1.1, 0.5)};
  for (int i = 0; i < 50; ++i) {
    const Camera cam = random_camera(rng);
    const Camera moved = cam.transformed(sim);
    const Vec3 p = cam.camera_to_world(Vec3(u(rng), u(rng), 2.0 + u(rng)));
    const auto [a, za] = project(cam, p);
    const auto [b, zb] = project(moved, sim.apply(p));
    CHECK(a.u == doctest::Approx(b.u).epsilon(1e-9));
    CHECK(a.v == doctest::Approx(b.v).epsilon(1e-9));
    CHECK(zb == doctest::Approx(sim.scale * za).epsilon(1e-9));
  }
}

TEST_CASE("orbited camera keeps the pivot distance and turns by the angle") {
  const Camera cam = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, 1, 0), 0.8, 64, 64, 0.1, 10);
  const Camera turned = cam.orbited(Vec3::Zero(), Vec3::UnitY(), std::numbers::pi / 2);
  CHECK(turned.center().norm() == doctest::Approx(3.0));
  CHECK(relative_angle(cam, turned) == doctest::Approx(std::numbers::pi / 2));
  const auto [px, z] = project(turned, Vec3::Zero());
  CHECK(px.u == doctest::Approx(32.0));
  CHECK(z == doctest::Approx(3.0));
}

TEST_CASE("resized keeps the view") {
  const Camera cam = identity_camera();
  const Camera half = cam.resized(256, 256);
  const auto [a, za] = project(cam, Vec3(0.2, -0.1, 2));
  const auto [b, zb] = project(half, Vec3(0.2, -0.1, 2));
  CHECK(b.u == doctest::Approx(a.u / 2));
  CHECK(b.v == doctest::Approx(a.v / 2));
}
