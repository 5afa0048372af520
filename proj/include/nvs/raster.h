#pragma once

#include "nvs/camera.h"
#include "nvs/maps.h"
#include "nvs/mesh.h"

#include <cstdint>
#include <span>
#include <vector>

namespace nvs {

struct RasterOutput {
  DepthMap depth;      // nearest surface z per pixel
  NormalMap normals;   // camera-space unit normals
  Mask mask;           // pixels with a valid depth
};

/// Z-buffer rasterization of `mesh` seen by `cam`. Pixel (i, j) is sampled at
/// (i + 0.5, j + 0.5); coverage uses a top-left fill rule on 1/256-pixel
/// fixed-point coordinates so shared edges are covered exactly once.
/// Geometry in front of the near plane is clipped; fragments beyond the far
/// plane are discarded. Depth is exact on each planar facet and normals are
/// perspective-correct barycentric blends of the vertex normals.
RasterOutput rasterize(const TriangleMesh& mesh, const Camera& cam);

/// All surface crossings along +z for every pixel of an orthographic view of
/// the normalized box [-1, 1]^2 (pixel (i, j) samples x = -1 + (i + 0.5) * 2 / width,
/// y = -1 + (j + 0.5) * 2 / height). Depths per pixel are sorted ascending;
/// each carries the facing of its triangle: +1 where a ray travelling +z
/// enters an outward-wound surface, -1 where it leaves.
class DepthLayers {
 public:
  DepthLayers(int width, int height, std::vector<std::uint32_t> offsets, std::vector<float> depths,
              std::vector<std::int8_t> facing)
      : width_(width),
        height_(height),
        offsets_(std::move(offsets)),
        depths_(std::move(depths)),
        facing_(std::move(facing)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const float> at(int x, int y) const {
    const std::size_t i = pixel(x, y);
    return std::span<const float>(depths_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  std::span<const std::int8_t> facing(int x, int y) const {
    const std::size_t i = pixel(x, y);
    return std::span<const std::int8_t>(facing_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  std::size_t total() const { return depths_.size(); }

 private:
  std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint32_t> offsets_;
  std::vector<float> depths_;
  std::vector<std::int8_t> facing_;
};

DepthLayers rasterize_layers_ortho(const TriangleMesh& mesh, int width, int height);

}  // namespace nvs
