#include "nvs/render.h"

#include "binary_io.h"
#include "nvs/error.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>

namespace nvs {
namespace {

// Uniform in [-1, 1) from the top 24 bits of one engine draw; independent of
// the standard library's distribution implementations.
float signed_unit(std::mt19937_64& rng) {
  return static_cast<float>(rng() >> 40) * (2.0f / 16777216.0f) - 1.0f;
}

std::vector<float> draw(std::mt19937_64& rng, std::size_t n, float scale) {
  std::vector<float> v(n);
  for (float& x : v) x = scale * signed_unit(rng);
  return v;
}

void require_size(int w, int h, int ew, int eh, const char* what) {
  if (w != ew || h != eh) {
    throw Error(ErrorCode::SizeMismatch, std::string(what) + " is " + std::to_string(w) + "x" + std::to_string(h) +
                                             ", expected " + std::to_string(ew) + "x" + std::to_string(eh));
  }
}

void require_length(const std::vector<float>& v, std::size_t n, const char* what) {
  if (v.size() != n) throw Error(ErrorCode::InvalidArgument, std::string("weights: bad length for ") + what);
}

void validate(const EncoderWeights& w) {
  if (w.in_channels <= 0 || w.out_channels <= 0) throw Error(ErrorCode::InvalidArgument, "weights: empty encoder");
  const auto in = static_cast<std::size_t>(w.in_channels);
  const auto out = static_cast<std::size_t>(w.out_channels);
  require_length(w.pointwise, out * in, "pointwise");
  require_length(w.pointwise_bias, out, "pointwise_bias");
  require_length(w.depthwise, out * 9, "depthwise");
  require_length(w.depthwise_bias, out, "depthwise_bias");
}

void validate(const DecoderWeights& w) {
  if (w.in_channels <= 0) throw Error(ErrorCode::InvalidArgument, "weights: empty decoder");
  require_length(w.pointwise, 3 * static_cast<std::size_t>(w.in_channels), "pointwise");
  require_length(w.bias, 3, "bias");
}

constexpr std::uint32_t kEncoderKind = 1;
constexpr std::uint32_t kDecoderKind = 2;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return in;
}

void read_into(std::istream& in, std::vector<float>& v, std::size_t n) {
  v.resize(n);
  detail::read_f32s(in, v, "weights");
  for (float x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::ParseError, "weights: non-finite value");
  }
}

}  // namespace

MultiChannelMap EncoderInput::concat() const {
  const int w = image.width();
  const int h = image.height();
  require_size(fof.width(), fof.height(), w, h, "FOF");
  require_size(normals.width(), normals.height(), w, h, "normal map");
  const int c = fof.channels();
  MultiChannelMap out(w, h, 3 + c + 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float* p = out.pixel(x, y);
      std::copy_n(image.pixel(x, y), 3, p);
      std::copy_n(fof.pixel(x, y), c, p + 3);
      const Eigen::Vector3f& n = normals(x, y);
      p[3 + c] = n.x();
      p[4 + c] = n.y();
      p[5 + c] = n.z();
    }
  }
  return out;
}

MultiChannelMap DecoderInput::concat() const {
  const int w = warped_features.width();
  const int h = warped_features.height();
  require_size(z_map.width(), z_map.height(), w, h, "Z-map");
  require_size(normals.width(), normals.height(), w, h, "normal map");
  const int f = warped_features.channels();
  MultiChannelMap out(w, h, f + 1 + 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float* p = out.pixel(x, y);
      std::copy_n(warped_features.pixel(x, y), f, p);
      const float z = z_map(x, y);
      p[f] = has_depth(z) ? z : 0.0f;
      const Eigen::Vector3f& n = normals(x, y);
      p[f + 1] = n.x();
      p[f + 2] = n.y();
      p[f + 3] = n.z();
    }
  }
  return out;
}

EncoderWeights EncoderWeights::from_seed(int in_channels, int out_channels, std::uint64_t seed, bool zero_bias) {
  if (in_channels <= 0 || out_channels <= 0) throw Error(ErrorCode::InvalidArgument, "channel counts must be positive");
  std::mt19937_64 rng(seed);
  EncoderWeights w;
  w.in_channels = in_channels;
  w.out_channels = out_channels;
  const auto in = static_cast<std::size_t>(in_channels);
  const auto out = static_cast<std::size_t>(out_channels);
  w.pointwise = draw(rng, out * in, 1.0f / std::sqrt(static_cast<float>(in_channels)));
  w.pointwise_bias = draw(rng, out, 0.1f);
  w.depthwise = draw(rng, out * 9, 1.0f / 3.0f);
  w.depthwise_bias = draw(rng, out, 0.1f);
  if (zero_bias) {
    std::fill(w.pointwise_bias.begin(), w.pointwise_bias.end(), 0.0f);
    std::fill(w.depthwise_bias.begin(), w.depthwise_bias.end(), 0.0f);
  }
  return w;
}

DecoderWeights DecoderWeights::from_seed(int in_channels, std::uint64_t seed) {
  if (in_channels <= 0) throw Error(ErrorCode::InvalidArgument, "channel count must be positive");
  std::mt19937_64 rng(seed);
  DecoderWeights w;
  w.in_channels = in_channels;
  w.pointwise = draw(rng, 3 * static_cast<std::size_t>(in_channels), 1.0f / std::sqrt(static_cast<float>(in_channels)));
  w.bias = draw(rng, 3, 0.1f);
  return w;
}

void save_weights(const EncoderWeights& w, const std::string& path) {
  validate(w);
  auto out = open_out(path);
  out.write("NVW1", 4);
  detail::write_u32(out, kEncoderKind);
  detail::write_u32(out, static_cast<std::uint32_t>(w.in_channels));
  detail::write_u32(out, static_cast<std::uint32_t>(w.out_channels));
  detail::write_f32s(out, w.pointwise);
  detail::write_f32s(out, w.pointwise_bias);
  detail::write_f32s(out, w.depthwise);
  detail::write_f32s(out, w.depthwise_bias);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

void save_weights(const DecoderWeights& w, const std::string& path) {
  validate(w);
  auto out = open_out(path);
  out.write("NVW1", 4);
  detail::write_u32(out, kDecoderKind);
  detail::write_u32(out, static_cast<std::uint32_t>(w.in_channels));
  detail::write_u32(out, 3);
  detail::write_f32s(out, w.pointwise);
  detail::write_f32s(out, w.bias);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

EncoderWeights load_encoder_weights(const std::string& path) {
  auto in = open_in(path);
  detail::expect_magic(in, "NVW1", "weights");
  if (detail::read_u32(in, "weights") != kEncoderKind) throw Error(ErrorCode::ParseError, "weights: not an encoder");
  const std::uint32_t ci = detail::read_u32(in, "weights");
  const std::uint32_t co = detail::read_u32(in, "weights");
  detail::check_dims(ci, co, 9, "weights");
  EncoderWeights w;
  w.in_channels = static_cast<int>(ci);
  w.out_channels = static_cast<int>(co);
  read_into(in, w.pointwise, std::size_t{ci} * co);
  read_into(in, w.pointwise_bias, co);
  read_into(in, w.depthwise, std::size_t{co} * 9);
  read_into(in, w.depthwise_bias, co);
  return w;
}

DecoderWeights load_decoder_weights(const std::string& path) {
  auto in = open_in(path);
  detail::expect_magic(in, "NVW1", "weights");
  if (detail::read_u32(in, "weights") != kDecoderKind) throw Error(ErrorCode::ParseError, "weights: not a decoder");
  const std::uint32_t ci = detail::read_u32(in, "weights");
  if (detail::read_u32(in, "weights") != 3) throw Error(ErrorCode::ParseError, "weights: decoder must output RGB");
  detail::check_dims(ci, 3, 1, "weights");
  DecoderWeights w;
  w.in_channels = static_cast<int>(ci);
  read_into(in, w.pointwise, 3 * std::size_t{ci});
  read_into(in, w.bias, 3);
  return w;
}

FeatureMap encoder_stub(const MultiChannelMap& input, const EncoderWeights& weights) {
  validate(weights);
  if (input.channels() != weights.in_channels) {
    throw Error(ErrorCode::ChannelMismatch, "encoder expects " + std::to_string(weights.in_channels) +
                                                " channels, got " + std::to_string(input.channels()));
  }
  const int w = input.width();
  const int h = input.height();
  const int ci = weights.in_channels;
  const int co = weights.out_channels;
  FeatureMap hidden(w, h, co);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float* in = input.pixel(x, y);
      float* out = hidden.pixel(x, y);
      for (int o = 0; o < co; ++o) {
        const float* row = weights.pointwise.data() + static_cast<std::size_t>(o) * ci;
        float acc = weights.pointwise_bias[o];
        for (int i = 0; i < ci; ++i) acc += row[i] * in[i];
        out[o] = std::max(acc, 0.0f);
      }
    }
  }
  // 3x3 depthwise with zero padding.
  FeatureMap features(w, h, co);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float* out = features.pixel(x, y);
      for (int o = 0; o < co; ++o) out[o] = weights.depthwise_bias[o];
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          const float* in = hidden.pixel(xx, yy);
          const int tap = (dy + 1) * 3 + (dx + 1);
          for (int o = 0; o < co; ++o) out[o] += weights.depthwise[static_cast<std::size_t>(o) * 9 + tap] * in[o];
        }
      }
      for (int o = 0; o < co; ++o) out[o] = std::max(out[o], 0.0f);
    }
  }
  return features;
}

Image decoder_stub(const DecoderInput& input, const DecoderWeights& weights, const Eigen::Vector3f& background) {
  validate(weights);
  const MultiChannelMap x = input.concat();
  if (x.channels() != weights.in_channels) {
    throw Error(ErrorCode::ChannelMismatch, "decoder expects " + std::to_string(weights.in_channels) +
                                                " channels, got " + std::to_string(x.channels()));
  }
  const int w = x.width();
  const int h = x.height();
  require_size(input.foreground.width(), input.foreground.height(), w, h, "foreground mask");
  const int ci = weights.in_channels;
  Image out(w, h, background);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int px = 0; px < w; ++px) {
      if (!input.foreground(px, y)) continue;
      const float* in = x.pixel(px, y);
      float* o = out.pixel(px, y);
      for (int c = 0; c < 3; ++c) {
        const float* row = weights.pointwise.data() + static_cast<std::size_t>(c) * ci;
        float acc = weights.bias[c];
        for (int i = 0; i < ci; ++i) acc += row[i] * in[i];
        o[c] = 1.0f / (1.0f + std::exp(-acc));
      }
    }
  }
  return out;
}

Image baseline_decode(const DecoderInput& input, const Image& source_image, const Mask& source_mask,
                      const FlowMap& flow, const Mask& visible,
                      const Eigen::Vector3f& background) {
  return baseline_fill(input, warp(source_image, source_mask, flow), visible, background);
}

Image baseline_fill(const DecoderInput& input, const Image& warped, const Mask& visible,
                    const Eigen::Vector3f& background) {
  const int w = warped.width();
  const int h = warped.height();
  require_size(visible.width(), visible.height(), w, h, "visibility mask");
  require_size(input.foreground.width(), input.foreground.height(), w, h, "foreground mask");
  require_size(input.normals.width(), input.normals.height(), w, h, "normal map");

  Image out(w, h, background);
  // 1 where a color is known; visible pixels are fixed sources.
  std::vector<std::uint8_t> known(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> holes;
  Eigen::Vector3d visible_sum = Eigen::Vector3d::Zero();
  std::size_t visible_count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!input.foreground(x, y)) continue;
      const int i = y * w + x;
      if (visible(x, y)) {
        const Eigen::Vector3f c = warped.rgb(x, y);
        out.set_rgb(x, y, c);
        known[static_cast<std::size_t>(i)] = 1;
        visible_sum += c.cast<double>();
        ++visible_count;
      } else {
        holes.push_back(i);
      }
    }
  }

  // Per hole: its foreground 4-neighbors and their fixed normal weights.
  struct Link {
    std::array<int, 4> index;
    std::array<float, 4> weight;
    int count = 0;
  };
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  std::vector<Link> links(holes.size());
  for (std::size_t k = 0; k < holes.size(); ++k) {
    const int x = holes[k] % w;
    const int y = holes[k] / w;
    const Eigen::Vector3f& n = input.normals(x, y);
    for (int d = 0; d < 4; ++d) {
      const int xx = x + kDx[d];
      const int yy = y + kDy[d];
      if (xx < 0 || yy < 0 || xx >= w || yy >= h || !input.foreground(xx, yy)) continue;
      Link& l = links[k];
      l.index[l.count] = yy * w + xx;
      l.weight[l.count] = 0.05f + std::max(0.0f, n.dot(input.normals(xx, yy)));
      ++l.count;
    }
  }
  float* color = out.data().data();
  std::vector<float> next(3 * holes.size());
  std::vector<std::uint8_t> next_known(holes.size());
  for (int it = 0; it < kFillIterations && !holes.empty(); ++it) {
    for (std::size_t k = 0; k < holes.size(); ++k) {
      const Link& l = links[k];
      float acc[3] = {0.0f, 0.0f, 0.0f};
      float wsum = 0.0f;
      for (int e = 0; e < l.count; ++e) {
        const auto j = static_cast<std::size_t>(l.index[e]);
        if (!known[j]) continue;
        const float wt = l.weight[e];
        acc[0] += wt * color[3 * j];
        acc[1] += wt * color[3 * j + 1];
        acc[2] += wt * color[3 * j + 2];
        wsum += wt;
      }
      next_known[k] = wsum > 0.0f;
      if (wsum > 0.0f) {
        for (int c = 0; c < 3; ++c) next[3 * k + c] = acc[c] / wsum;
      }
    }
    for (std::size_t k = 0; k < holes.size(); ++k) {
      if (!next_known[k]) continue;
      const auto i = static_cast<std::size_t>(holes[k]);
      std::copy_n(&next[3 * k], 3, color + 3 * i);
      known[i] = 1;
    }
  }

  const Eigen::Vector3f fallback = visible_count > 0
                                       ? Eigen::Vector3f((visible_sum / static_cast<double>(visible_count)).cast<float>())
                                       : Eigen::Vector3f::Constant(0.5f);
  for (int i : holes) {
    if (!known[static_cast<std::size_t>(i)]) out.set_rgb(i % w, i / w, fallback);
  }
  out.clamp();
  return out;
}

double fusion_alpha(double phi, double beta) { return beta * std::abs(std::sin(0.5 * phi)); }

FusionState seed_fusion(const Image& first, const Camera& camera, const DepthMap& depth, const Camera& input_camera,
                        double beta, bool invert_alpha, double lambda) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fusion beta must lie in [0, 1]");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "visibility lambda must be positive");
  require_size(first.width(), first.height(), camera.width(), camera.height(), "first frame");
  require_size(depth.width(), depth.height(), camera.width(), camera.height(), "first depth");
  return FusionState{first, camera, depth, beta, input_camera, invert_alpha, lambda};
}

FuseResult spatial_fuse(const Image& current, const FusionState& state, const Camera& cam_current,
                        const DepthMap& depth_current) {
  require_size(current.width(), current.height(), cam_current.width(), cam_current.height(), "current frame");
  const double alpha = fusion_alpha(relative_angle(cam_current, state.input_camera), state.beta);
  const FlowZ fz = compute_flow_zmap(depth_current, cam_current, state.prev_camera);
  Mask both = visibility_mask(fz.zmap, fz.flow, state.prev_depth, state.lambda);
  const Image previous = warp(state.prev_image, fz.flow);

  // Blend as a + a_w * (b - a): equal inputs pass through exactly.
  const float a_w = static_cast<float>(alpha);
  Image fused = current;
  const std::size_t n = static_cast<std::size_t>(current.width()) * current.height();
  auto out = fused.data();
  auto cur = current.data();
  auto pre = previous.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (!both[i]) continue;
    for (std::size_t c = 3 * i; c < 3 * i + 3; ++c) {
      out[c] = state.invert_alpha ? cur[c] + a_w * (pre[c] - cur[c]) : pre[c] + a_w * (cur[c] - pre[c]);
    }
  }
  FusionState next{fused, cam_current, depth_current, state.beta, state.input_camera, state.invert_alpha, state.lambda};
  return FuseResult{std::move(fused), std::move(next), std::move(both), alpha};
}

}  // namespace nvs
