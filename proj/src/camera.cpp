#include "nvs/camera.h"

#include "nvs/error.h"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nvs {

namespace {

constexpr double kMinDepth = 1e-9;

void validate(double fx, double fy, const Mat3& r, int width, int height, double near,
              double far) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "camera focal lengths must be positive");
  }
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "camera image size must be at least 1x1");
  }
  if (!(near > 0.0) || !(far > near)) {
    throw Error(ErrorCode::InvalidArgument, "camera clip range must satisfy 0 < near < far");
  }
  const Mat3 gram = r.transpose() * r;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "camera rotation is not orthonormal");
  }
  if (r.determinant() < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "camera rotation must be right-handed");
  }
}

}  // namespace

Camera::Camera(double fx, double fy, double cx, double cy, const Mat3& rotation,
               const Vec3& translation, int width, int height, double near, double far)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), rotation_(rotation), translation_(translation),
      width_(width), height_(height), near_(near), far_(far) {
  validate(fx, fy, rotation, width, height, near, far);
  if (!translation.allFinite() || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::InvalidArgument, "camera parameters must be finite");
  }
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y,
                       int width, int height, double near, double far) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "look_at: up vector parallel to view direction");
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  const double f = 0.5 * height / std::tan(0.5 * fov_y);
  return Camera(f, f, 0.5 * width, 0.5 * height, r, -(r * eye), width, height, near, far);
}

Camera Camera::transformed(const Similarity& sim) const {
  // x_c' = s * x_c = R x' - R T + s t  for x' = s x + T.
  return Camera(fx_, fy_, cx_, cy_, rotation_, sim.scale * translation_ - rotation_ * sim.translation,
                width_, height_, near_ * sim.scale, far_ * sim.scale);
}

Camera Camera::resized(int width, int height) const {
  const double sx = static_cast<double>(width) / width_;
  const double sy = static_cast<double>(height) / height_;
  return Camera(fx_ * sx, fy_ * sy, cx_ * sx, cy_ * sy, rotation_, translation_, width, height,
                near_, far_);
}

Camera Camera::orbited(const Vec3& pivot, const Vec3& axis, double angle) const {
  const Mat3 rot = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  // Moving the camera by rot about the pivot is the same as moving the world
  // by rot^T: x_c = R rot^T (x - pivot) + R pivot + t.
  const Mat3 r = rotation_ * rot.transpose();
  const Vec3 t = translation_ + rotation_ * pivot - r * pivot;
  return Camera(fx_, fy_, cx_, cy_, r, t, width_, height_, near_, far_);
}

bool Camera::operator==(const Camera& o) const {
  return fx_ == o.fx_ && fy_ == o.fy_ && cx_ == o.cx_ && cy_ == o.cy_ && rotation_ == o.rotation_ &&
         translation_ == o.translation_ && width_ == o.width_ && height_ == o.height_ &&
         near_ == o.near_ && far_ == o.far_;
}

std::pair<PixelCoord, double> project(const Camera& cam, const Vec3& p_world) {
  const Vec3 pc = cam.world_to_camera(p_world);
  if (!(pc.z() > kMinDepth)) {
    throw Error(ErrorCode::DegeneratePoint, "point at or behind the center of projection");
  }
  const PixelCoord px{cam.fx() * pc.x() / pc.z() + cam.cx(), cam.fy() * pc.y() / pc.z() + cam.cy()};
  return {px, pc.z()};
}

Vec3 unproject(const Camera& cam, const PixelCoord& px, double z) {
  if (!(z > 0.0)) {
    throw Error(ErrorCode::InvalidDepth, "unproject requires positive depth");
  }
  const Vec3 pc((px.u - cam.cx()) / cam.fx() * z, (px.v - cam.cy()) / cam.fy() * z, z);
  return cam.camera_to_world(pc);
}

double relative_angle(const Camera& a, const Camera& b) {
  const Vec3 da = a.optical_axis();
  const Vec3 db = b.optical_axis();
  // atan2 of |cross| and dot stays accurate near 0 and pi, unlike acos.
  return std::atan2(da.cross(db).norm(), da.dot(db));
}

nlohmann::json to_json(const Camera& cam) {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r.push_back(cam.rotation()(i, j));
  }
  const Vec3& t = cam.translation();
  return {{"fx", cam.fx()},         {"fy", cam.fy()},         {"cx", cam.cx()},
          {"cy", cam.cy()},         {"R", r},                 {"t", {t.x(), t.y(), t.z()}},
          {"width", cam.width()},   {"height", cam.height()}, {"near", cam.near()},
          {"far", cam.far()}};
}

Camera camera_from_json(const nlohmann::json& j) {
  try {
    const auto& rj = j.at("R");
    const auto& tj = j.at("t");
    if (!rj.is_array() || rj.size() != 9 || !tj.is_array() || tj.size() != 3) {
      throw Error(ErrorCode::ParseError, "camera JSON: R must have 9 and t 3 entries");
    }
    Mat3 r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rj.at(i).get<double>();
    const Vec3 t(tj.at(0).get<double>(), tj.at(1).get<double>(), tj.at(2).get<double>());
    return Camera(j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                  j.at("cy").get<double>(), r, t, j.at("width").get<int>(),
                  j.at("height").get<int>(), j.at("near").get<double>(),
                  j.at("far").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("camera JSON: ") + e.what());
  }
}

Camera load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open camera file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return camera_from_json(j);
}

void save_camera(const Camera& cam, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write camera file " + path);
  out << to_json(cam).dump(2) << '\n';
}

}  // namespace nvs
