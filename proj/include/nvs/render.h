#pragma once

#include "nvs/camera.h"
#include "nvs/fof.h"
#include "nvs/maps.h"
#include "nvs/reproject.h"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nvs {

/// Source image, FOF and source normals, concatenated channel-wise into
/// 3 + C + 3 channels in that order.
struct EncoderInput {
  const Image& image;
  const FofImage& fof;
  const NormalMap& normals;

  /// Throws SizeMismatch unless all three share width and height.
  MultiChannelMap concat() const;
};

/// Warped features, Z-map (sentinels as 0) and target normals, concatenated
/// into F + 1 + 3 channels. `foreground` is the target mask.
struct DecoderInput {
  FeatureMap warped_features;
  ZMap z_map;
  NormalMap normals;
  Mask foreground;

  MultiChannelMap concat() const;
};

/// Fixed, seeded weights for the encoder stand-in: a 1x1 convolution from
/// in_channels to out_channels followed by a 3x3 depthwise convolution, both
/// with ReLU.
struct EncoderWeights {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<float> pointwise;       // out x in
  std::vector<float> pointwise_bias;  // out
  std::vector<float> depthwise;       // out x 9, row-major 3x3 taps
  std::vector<float> depthwise_bias;  // out

  static EncoderWeights from_seed(int in_channels, int out_channels, std::uint64_t seed, bool zero_bias = false);
};

/// Seeded weights for the decoder stand-in: 1x1 convolution to RGB, sigmoid.
struct DecoderWeights {
  int in_channels = 0;
  std::vector<float> pointwise;  // 3 x in
  std::vector<float> bias;       // 3

  static DecoderWeights from_seed(int in_channels, std::uint64_t seed);
};

// Weight files: magic "NVW1", u32 kind (1 encoder, 2 decoder), u32 in,
// u32 out, then every array above in declaration order as float32 LE.
void save_weights(const EncoderWeights& w, const std::string& path);
void save_weights(const DecoderWeights& w, const std::string& path);
EncoderWeights load_encoder_weights(const std::string& path);
DecoderWeights load_decoder_weights(const std::string& path);

/// Deterministic stand-in for the learned encoder. Shapes and data flow only.
/// Throws ChannelMismatch when input.channels() != weights.in_channels.
FeatureMap encoder_stub(const MultiChannelMap& input, const EncoderWeights& weights);

/// Deterministic stand-in for the learned decoder; background pixels get
/// `background`. Throws ChannelMismatch on a channel count mismatch.
Image decoder_stub(const DecoderInput& input, const DecoderWeights& weights, const Eigen::Vector3f& background);

inline constexpr int kFillIterations = 64;

/// Neural-free decoder. Visible pixels take the source color warped with
/// taps restricted to `source_mask`; occluded foreground is filled by
/// normal-weighted diffusion from visible pixels (kFillIterations Jacobi sweeps over 4-neighbors, weight
/// 0.05 + max(0, n . n')); foreground still unreached afterwards takes the
/// mean visible color (mid gray if nothing is visible); background takes
/// `background`. Throws SizeMismatch for unaligned inputs.
Image baseline_decode(const DecoderInput& input, const Image& source_image, const Mask& source_mask,
                      const FlowMap& flow, const Mask& visible,
                      const Eigen::Vector3f& background = Eigen::Vector3f::Zero());

/// baseline_decode after the warp: `warped_source` already holds the source
/// color on visible pixels.
Image baseline_fill(const DecoderInput& input, const Image& warped_source, const Mask& visible,
                    const Eigen::Vector3f& background = Eigen::Vector3f::Zero());

inline constexpr double kDefaultFusionBeta = 0.8;

/// alpha = beta * |sin(phi / 2)|.
double fusion_alpha(double phi, double beta);

struct FusionState {
  Image prev_image;
  Camera prev_camera;
  DepthMap prev_depth;
  double beta = kDefaultFusionBeta;
  Camera input_camera;
  /// Swap the roles of the current and previous frame in the blend.
  bool invert_alpha = false;
  double lambda = kDefaultVisibilityLambda;
};

/// State after the first frame of a sequence, which passes through unchanged.
/// Throws InvalidArgument unless beta is in [0, 1].
FusionState seed_fusion(const Image& first, const Camera& camera, const DepthMap& depth, const Camera& input_camera,
                        double beta = kDefaultFusionBeta, bool invert_alpha = false,
                        double lambda = kDefaultVisibilityLambda);

struct FuseResult {
  Image image;
  FusionState state;
  Mask blended;  // pixels visible in both views
  double alpha = 0.0;
};

/// Warps the previous frame into the current view and, on pixels visible in
/// both views, returns alpha * current + (1 - alpha) * previous (roles
/// swapped with invert_alpha); other pixels keep `current`. The returned
/// state holds the fused frame.
FuseResult spatial_fuse(const Image& current, const FusionState& state, const Camera& cam_current,
                        const DepthMap& depth_current);

}  // namespace nvs
