#pragma once

#include "nvs/camera.h"
#include "nvs/maps.h"

#include <Eigen/Core>

#include <cmath>
#include <limits>

namespace nvs {

/// Absolute source-pixel coordinates (u, v) per target pixel. Invalid cells
/// hold NaN in both components. Valid coordinates may lie outside the source
/// frame.
struct FlowMap : Grid<Eigen::Vector2f> {
  FlowMap() = default;
  FlowMap(int width, int height)
      : Grid<Eigen::Vector2f>(width, height, Eigen::Vector2f::Constant(std::numeric_limits<float>::quiet_NaN())) {}

  bool valid(std::size_t i) const { return !std::isnan((*this)[i].x()); }
  bool valid(int x, int y) const { return !std::isnan((*this)(x, y).x()); }
};

/// Source-camera z of the surface point seen at each target pixel; cells
/// without one hold kNoDepth. Valid exactly where the paired FlowMap is.
struct ZMap : Grid<float> {
  ZMap() = default;
  ZMap(int width, int height) : Grid<float>(width, height, kNoDepth) {}
};

struct FlowZ {
  FlowMap flow;
  ZMap zmap;
  /// Foreground target pixels whose surface point lands at or behind the
  /// source camera center; they are left invalid.
  std::size_t degenerate = 0;
};

/// Unprojects every foreground target pixel with its depth and projects the
/// world point into the source camera. Equal cameras give the identity grid
/// and zmap == depth exactly.
/// Throws SizeMismatch when the depth map does not match cam_target.
FlowZ compute_flow_zmap(const DepthMap& d_target, const Camera& cam_target, const Camera& cam_source);

/// Depth at continuous pixel coordinates by bilinear interpolation of 1/z.
/// Background or out-of-frame taps are replaced by a linear continuation of
/// the adjacent foreground along their row/column; taps that cannot be
/// continued are dropped and the weights renormalized. Returns kNoDepth when
/// none of the four taps with positive weight is foreground.
float sample_depth(const DepthMap& depth, double u, double v);

inline constexpr double kDefaultVisibilityLambda = 0.02;

/// A target pixel is visible from the source when its flow lands inside the
/// source frame and |z - s| < lambda * min(z, s), with z from the Z-map and
/// s = sample_depth(d_source, flow).
/// Throws InvalidArgument for lambda <= 0, SizeMismatch for unaligned maps.
Mask visibility_mask(const ZMap& zmap, const FlowMap& flow, const DepthMap& d_source,
                     double lambda = kDefaultVisibilityLambda);

/// Bilinear resampling of `source` at the flow coordinates (edge taps are
/// clamped). Cells with invalid or out-of-frame flow become zero. When a
/// target size is given it must match the flow (SizeMismatch otherwise).
Image warp(const Image& source, const FlowMap& flow, int target_width = -1, int target_height = -1);
FeatureMap warp(const FeatureMap& source, const FlowMap& flow, int target_width = -1, int target_height = -1);
/// Bilinear resampling restricted to source pixels inside `source_mask`:
/// outside taps are dropped and the weights renormalized, so background never
/// bleeds into foreground. Cells with no usable tap become zero.
Image warp(const Image& source, const Mask& source_mask, const FlowMap& flow);
FeatureMap warp(const FeatureMap& source, const Mask& source_mask, const FlowMap& flow);
/// Depth is resampled with sample_depth; unusable cells become kNoDepth.
DepthMap warp(const DepthMap& source, const FlowMap& flow, int target_width = -1, int target_height = -1);

}  // namespace nvs
