#include "nvs/synthetic.h"

#include <cmath>

namespace nvs {

Texture hemisphere_texture(const Vec3& center, const Vec3& axis, const Eigen::Vector3f& upper,
                           const Eigen::Vector3f& lower) {
  return [=](const Vec3& p) { return (p - center).dot(axis) >= 0.0 ? upper : lower; };
}

Texture wave_texture(double frequency) {
  return [=](const Vec3& p) {
    const double k = frequency;
    return Eigen::Vector3f(static_cast<float>(0.5 + 0.4 * std::sin(k * p.x() + 0.3)),
                           static_cast<float>(0.5 + 0.4 * std::sin(k * p.y() + 1.1)),
                           static_cast<float>(0.5 + 0.4 * std::sin(k * p.z() + 2.0)));
  };
}

TexturedRender render_textured(const TriangleMesh& mesh, const Camera& cam, const Texture& texture,
                               const Eigen::Vector3f& background) {
  TexturedRender out{Image(cam.width(), cam.height(), background), rasterize(mesh, cam)};
  const DepthMap& depth = out.geometry.depth;
  for (int y = 0; y < cam.height(); ++y) {
    for (int x = 0; x < cam.width(); ++x) {
      const float z = depth(x, y);
      if (!has_depth(z)) continue;
      const Vec3 p = unproject(cam, {x + kPixelCenter, y + kPixelCenter}, z);
      out.image.set_rgb(x, y, texture(p));
    }
  }
  return out;
}

}  // namespace nvs
