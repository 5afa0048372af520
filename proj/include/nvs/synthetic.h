#pragma once

#include "nvs/camera.h"
#include "nvs/maps.h"
#include "nvs/mesh.h"
#include "nvs/raster.h"

#include <functional>

namespace nvs {

/// Color of a surface point in world coordinates.
using Texture = std::function<Eigen::Vector3f(const Vec3&)>;

/// `upper` where (p - center) . axis >= 0, `lower` elsewhere.
Texture hemisphere_texture(const Vec3& center, const Vec3& axis, const Eigen::Vector3f& upper,
                           const Eigen::Vector3f& lower);

/// Smooth sinusoidal pattern in [0.1, 0.9] per channel with spatial
/// frequency `frequency` (radians per scene unit).
Texture wave_texture(double frequency = 6.0);

/// Ground-truth textured render: the texture is evaluated at the exact
/// surface point behind every foreground pixel center.
struct TexturedRender {
  Image image;
  RasterOutput geometry;
};

TexturedRender render_textured(const TriangleMesh& mesh, const Camera& cam, const Texture& texture,
                               const Eigen::Vector3f& background = Eigen::Vector3f::Zero());

}  // namespace nvs
