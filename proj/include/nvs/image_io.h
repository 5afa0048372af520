#pragma once

#include "nvs/maps.h"
#include "nvs/reproject.h"

#include <cstdint>
#include <string>
#include <vector>

namespace nvs {

/// 8-bit sRGB-agnostic PNG: values are quantized as round(255 v) after
/// clamping to [0, 1]. Throws IoError.
void save_png(const Image& image, const std::string& path);
std::vector<std::uint8_t> encode_png(const Image& image);
/// Any PNG color type is converted to RGB. Throws IoError.
Image load_png(const std::string& path);
Image decode_png(const std::vector<std::uint8_t>& bytes);

/// Raw interleaved 8-bit RGB, row-major.
std::vector<std::uint8_t> encode_rgb8(const Image& image);

/// 16-bit grayscale PNG holding round(z * scale); background and
/// non-positive depths are stored as 0, values clamp at 65535.
void save_depth_png16(const DepthMap& depth, const std::string& path, double scale = 1000.0);
DepthMap load_depth_png16(const std::string& path, double scale = 1000.0);

/// Normals mapped to (n + 1) / 2, background black.
void save_normals_png(const NormalMap& normals, const std::string& path);
void save_mask_png(const Mask& mask, const std::string& path);

/// Near-to-far colormap over the foreground depth range; background black.
Image false_color_depth(const DepthMap& depth);

// Lossless little-endian grids: magic, u32 width, u32 height, then float32
// values row-major ("DPT1" depth, "ZMP1" Z-map, "FLW1" flow as u, v pairs).
void save_depth(const DepthMap& depth, const std::string& path);
DepthMap load_depth(const std::string& path);
void save_zmap(const ZMap& zmap, const std::string& path);
ZMap load_zmap(const std::string& path);
void save_flow(const FlowMap& flow, const std::string& path);
FlowMap load_flow(const std::string& path);

}  // namespace nvs
