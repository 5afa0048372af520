#include "nvs/image_io.h"

#include "binary_io.h"
#include "nvs/error.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace nvs {
namespace {

std::uint8_t to_u8(float v) {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

png_image make_header(int w, int h, png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  return img;
}

void write_file(png_image& img, const std::string& path, const void* buffer) {
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer, 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::IoError, "cannot write PNG " + path + ": " + msg);
  }
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Decodes into `format`; returns the raw buffer and fills width/height.
template <typename T>
std::vector<T> decode(const std::vector<std::uint8_t>& bytes, png_uint_32 format, int& w, int& h,
                      const std::string& what) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::IoError, what + ": " + img.message);
  }
  detail::check_dims(img.width, img.height, 4, what);
  img.format = format;
  std::vector<T> buffer(PNG_IMAGE_SIZE(img) / sizeof(T));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::IoError, what + ": " + msg);
  }
  w = static_cast<int>(img.width);
  h = static_cast<int>(img.height);
  return buffer;
}

template <typename Grid>
void save_grid(const Grid& g, const std::string& path, const char* magic, int per_cell) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(magic, 4);
  detail::write_u32(out, static_cast<std::uint32_t>(g.width()));
  detail::write_u32(out, static_cast<std::uint32_t>(g.height()));
  const auto* p = reinterpret_cast<const float*>(g.data().data());
  detail::write_f32s(out, std::span<const float>(p, g.size() * static_cast<std::size_t>(per_cell)));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

template <typename Grid>
Grid load_grid(const std::string& path, const char* magic, int per_cell) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  detail::expect_magic(in, magic, path);
  const std::uint32_t w = detail::read_u32(in, path);
  const std::uint32_t h = detail::read_u32(in, path);
  detail::check_dims(w, h, static_cast<std::uint64_t>(per_cell), path);
  Grid g(static_cast<int>(w), static_cast<int>(h));
  auto* p = reinterpret_cast<float*>(g.data().data());
  detail::read_f32s(in, std::span<float>(p, g.size() * static_cast<std::size_t>(per_cell)), path);
  return g;
}

static_assert(sizeof(Eigen::Vector2f) == 2 * sizeof(float));

}  // namespace

std::vector<std::uint8_t> encode_rgb8(const Image& image) {
  std::vector<std::uint8_t> out(image.data().size());
  std::transform(image.data().begin(), image.data().end(), out.begin(), to_u8);
  return out;
}

void save_png(const Image& image, const std::string& path) {
  const auto rgb = encode_rgb8(image);
  png_image img = make_header(image.width(), image.height(), PNG_FORMAT_RGB);
  write_file(img, path, rgb.data());
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  const auto rgb = encode_rgb8(image);
  png_image img = make_header(image.width(), image.height(), PNG_FORMAT_RGB);
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("PNG encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("PNG encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  int w = 0, h = 0;
  const auto rgb = decode<std::uint8_t>(bytes, PNG_FORMAT_RGB, w, h, "PNG");
  Image out(w, h);
  std::transform(rgb.begin(), rgb.end(), out.data().begin(), [](std::uint8_t v) { return v / 255.0f; });
  return out;
}

Image load_png(const std::string& path) { return decode_png(read_bytes(path)); }

void save_depth_png16(const DepthMap& depth, const std::string& path, double scale) {
  std::vector<std::uint16_t> buf(depth.size(), 0);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const float z = depth[i];
    if (!has_depth(z) || !(z > 0.0f)) continue;
    buf[i] = static_cast<std::uint16_t>(std::clamp(std::llround(z * scale), 1LL, 65535LL));
  }
  png_image img = make_header(depth.width(), depth.height(), PNG_FORMAT_LINEAR_Y);
  write_file(img, path, buf.data());
}

DepthMap load_depth_png16(const std::string& path, double scale) {
  int w = 0, h = 0;
  const auto buf = decode<std::uint16_t>(read_bytes(path), PNG_FORMAT_LINEAR_Y, w, h, path);
  DepthMap d(w, h);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (buf[i] != 0) d[i] = static_cast<float>(buf[i] / scale);
  }
  return d;
}

void save_normals_png(const NormalMap& normals, const std::string& path) {
  Image img(normals.width(), normals.height());
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      const Eigen::Vector3f& n = normals(x, y);
      if (n.isZero()) continue;
      img.set_rgb(x, y, 0.5f * (n + Eigen::Vector3f::Ones()));
    }
  }
  save_png(img, path);
}

void save_mask_png(const Mask& mask, const std::string& path) {
  std::vector<std::uint8_t> buf(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) buf[i] = mask[i] ? 255 : 0;
  png_image img = make_header(mask.width(), mask.height(), PNG_FORMAT_GRAY);
  write_file(img, path, buf.data());
}

Image false_color_depth(const DepthMap& depth) {
  float lo = kNoDepth, hi = 0.0f;
  for (float z : depth.data()) {
    if (!has_depth(z)) continue;
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  Image img(depth.width(), depth.height());
  const float span = hi > lo ? hi - lo : 1.0f;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const float z = depth(x, y);
      if (!has_depth(z)) continue;
      const float t = (z - lo) / span;
      // Warm near, cool far.
      img.set_rgb(x, y, Eigen::Vector3f(1.0f - t, 0.25f + 0.5f * (1.0f - std::abs(2.0f * t - 1.0f)), t));
    }
  }
  return img;
}

void save_depth(const DepthMap& depth, const std::string& path) { save_grid(depth, path, "DPT1", 1); }
DepthMap load_depth(const std::string& path) { return load_grid<DepthMap>(path, "DPT1", 1); }
void save_zmap(const ZMap& zmap, const std::string& path) { save_grid(zmap, path, "ZMP1", 1); }
ZMap load_zmap(const std::string& path) { return load_grid<ZMap>(path, "ZMP1", 1); }
void save_flow(const FlowMap& flow, const std::string& path) { save_grid(flow, path, "FLW1", 2); }
FlowMap load_flow(const std::string& path) { return load_grid<FlowMap>(path, "FLW1", 2); }

}  // namespace nvs
