#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <utility>

namespace nvs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Continuous pixel coordinates: u runs along the width, v along the height.
/// Pixel (i, j) covers [i, i+1) x [j, j+1) and is sampled at its center.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Offset from a pixel's integer index to the point where it is sampled.
/// Shared by the rasterizer and every resampling routine.
inline constexpr double kPixelCenter = 0.5;

/// Uniform scale followed by a translation: p' = scale * p + translation.
struct Similarity {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * p + translation; }
  Vec3 apply_inverse(const Vec3& p) const { return (p - translation) / scale; }
  Similarity inverse() const { return {1.0 / scale, -translation / scale}; }
  // (this o other)(p) = this(other(p))
  Similarity compose(const Similarity& other) const {
    return {scale * other.scale, scale * other.translation + translation};
  }
};

/// Pinhole camera. World points map to camera space by x_c = R x_w + t; the
/// camera looks down +z, x to the right and y down (right-handed). Depth is
/// the camera-space z coordinate, not the ray length.
class Camera {
 public:
  Camera(double fx, double fy, double cx, double cy, const Mat3& rotation,
         const Vec3& translation, int width, int height, double near, double far);

  /// Camera at `eye` looking at `target`; `up` is the world direction that
  /// should appear upward in the image. Vertical field of view in radians.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y,
                        int width, int height, double near, double far);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double near() const { return near_; }
  double far() const { return far_; }

  Vec3 world_to_camera(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 camera_to_world(const Vec3& p) const { return rotation_.transpose() * (p - translation_); }
  Vec3 center() const { return -(rotation_.transpose() * translation_); }
  /// Viewing direction (+z of the camera) in world coordinates.
  Vec3 optical_axis() const { return rotation_.row(2).transpose(); }

  /// Same camera expressed in the frame p' = sim(p). Pixel projections are
  /// unchanged; depths and the clip range scale with sim.scale.
  Camera transformed(const Similarity& sim) const;

  /// Same view at a different image size (intrinsics rescaled).
  Camera resized(int width, int height) const;

  /// Camera rotated about `axis` (through `pivot`) by `angle` radians, e.g.
  /// one step of an orbit around a subject.
  Camera orbited(const Vec3& pivot, const Vec3& axis, double angle) const;

  bool operator==(const Camera& other) const;
  bool operator!=(const Camera& other) const { return !(*this == other); }

 private:
  double fx_, fy_, cx_, cy_;
  Mat3 rotation_;
  Vec3 translation_;
  int width_, height_;
  double near_, far_;
};

/// Pixel position and camera-space depth of a world point. The depth may lie
/// outside [near, far]; clipping is the caller's decision.
/// Throws DegeneratePoint when the point is at or behind the camera center.
std::pair<PixelCoord, double> project(const Camera& cam, const Vec3& p_world);

/// World point seen at pixel `px` with camera-space depth `z`.
/// Throws InvalidDepth for z <= 0.
Vec3 unproject(const Camera& cam, const PixelCoord& px, double z);

/// Angle in [0, pi] between the optical axes of two cameras.
double relative_angle(const Camera& a, const Camera& b);

// JSON: {fx, fy, cx, cy, R: [9 row-major], t: [3], width, height, near, far}
nlohmann::json to_json(const Camera& cam);
Camera camera_from_json(const nlohmann::json& j);
Camera load_camera(const std::string& path);
void save_camera(const Camera& cam, const std::string& path);

}  // namespace nvs
