#include "nvs/maps.h"

#include <algorithm>
#include <numeric>

namespace nvs {

std::size_t Mask::count() const {
  const auto d = data();
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](std::uint8_t v) { return v != 0; }));
}

Mask mask_from_depth(const DepthMap& depth) {
  Mask mask(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i) mask[i] = has_depth(depth[i]) ? 1 : 0;
  return mask;
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (!a.same_size(b)) throw Error(ErrorCode::SizeMismatch, "mask_and: size mismatch");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

MultiChannelMap::MultiChannelMap(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative map dimensions");
  }
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               fill);
}

Image::Image(int width, int height, const Eigen::Vector3f& color) : Image(width, height) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) set_rgb(x, y, color);
  }
}

void Image::clamp() {
  for (float& v : data()) v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
}

}  // namespace nvs
