#include "nvs/reproject.h"

#include <algorithm>
#include <array>
#include <cmath>

namespace nvs {

namespace {

constexpr double kMinSourceDepth = 1e-9;

void check_target(const FlowMap& flow, int width, int height) {
  if ((width >= 0 || height >= 0) && !flow.same_size(width, height)) {
    throw Error(ErrorCode::SizeMismatch, "flow is " + std::to_string(flow.width()) + "x" +
                                             std::to_string(flow.height()) + ", target is " + std::to_string(width) +
                                             "x" + std::to_string(height));
  }
}

bool in_frame(double u, double v, int width, int height) { return u >= 0.0 && u < width && v >= 0.0 && v < height; }

// With a mask, taps outside it are dropped and the remaining weights
// renormalized; cells whose positive-weight taps all lie outside become zero.
void warp_channels(const MultiChannelMap& src, const FlowMap& flow, MultiChannelMap& out,
                   const Mask* mask = nullptr) {
  const int channels = src.channels();
  const int w = src.width(), h = src.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Eigen::Vector2f f = flow(x, y);
      if (!flow.valid(x, y) || !in_frame(f.x(), f.y(), w, h)) continue;
      const double fu = f.x() - kPixelCenter;
      const double fv = f.y() - kPixelCenter;
      const double u0 = std::floor(fu), v0 = std::floor(fv);
      const float wx = static_cast<float>(fu - u0), wy = static_cast<float>(fv - v0);
      const int x0 = std::clamp(static_cast<int>(u0), 0, w - 1), x1 = std::clamp(static_cast<int>(u0) + 1, 0, w - 1);
      const int y0 = std::clamp(static_cast<int>(v0), 0, h - 1), y1 = std::clamp(static_cast<int>(v0) + 1, 0, h - 1);
      const float *a = src.pixel(x0, y0), *b = src.pixel(x1, y0), *c = src.pixel(x0, y1), *d = src.pixel(x1, y1);
      float* o = out.pixel(x, y);
      if (mask) {
        std::array<float, 4> wt{(1.0f - wx) * (1.0f - wy) * (*mask)(x0, y0), wx * (1.0f - wy) * (*mask)(x1, y0),
                                (1.0f - wx) * wy * (*mask)(x0, y1), wx * wy * (*mask)(x1, y1)};
        const float sum = wt[0] + wt[1] + wt[2] + wt[3];
        if (!(sum > 0.0f)) continue;
        for (float& t : wt) t /= sum;
        for (int k = 0; k < channels; ++k) o[k] = wt[0] * a[k] + wt[1] * b[k] + wt[2] * c[k] + wt[3] * d[k];
        continue;
      }
      for (int k = 0; k < channels; ++k) {
        o[k] = (1.0f - wy) * ((1.0f - wx) * a[k] + wx * b[k]) + wy * ((1.0f - wx) * c[k] + wx * d[k]);
      }
    }
  }
}

}  // namespace

FlowZ compute_flow_zmap(const DepthMap& d_target, const Camera& cam_target, const Camera& cam_source) {
  const int w = cam_target.width(), h = cam_target.height();
  if (!d_target.same_size(w, h)) throw Error(ErrorCode::SizeMismatch, "target depth does not match its camera");
  FlowZ out{FlowMap(w, h), ZMap(w, h), 0};
  if (cam_target == cam_source) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!has_depth(d_target(x, y))) continue;
        out.flow(x, y) = Eigen::Vector2f(static_cast<float>(x + kPixelCenter), static_cast<float>(y + kPixelCenter));
        out.zmap(x, y) = d_target(x, y);
      }
    }
    return out;
  }
  // x_s = M (z * ray_t) + b composes the target unprojection with the source pose.
  const Mat3 m = cam_source.rotation() * cam_target.rotation().transpose();
  const Vec3 b = cam_source.translation() - m * cam_target.translation();
  std::size_t degenerate = 0;
#pragma omp parallel for schedule(static) reduction(+ : degenerate)
  for (int y = 0; y < h; ++y) {
    const double ry = (y + kPixelCenter - cam_target.cy()) / cam_target.fy();
    for (int x = 0; x < w; ++x) {
      const float z = d_target(x, y);
      if (!has_depth(z)) continue;
      const Vec3 ray((x + kPixelCenter - cam_target.cx()) / cam_target.fx(), ry, 1.0);
      const Vec3 ps = m * (static_cast<double>(z) * ray) + b;
      if (!(ps.z() > kMinSourceDepth)) {
        ++degenerate;
        continue;
      }
      out.flow(x, y) = Eigen::Vector2f(static_cast<float>(cam_source.fx() * ps.x() / ps.z() + cam_source.cx()),
                                       static_cast<float>(cam_source.fy() * ps.y() / ps.z() + cam_source.cy()));
      out.zmap(x, y) = static_cast<float>(ps.z());
    }
  }
  out.degenerate = degenerate;
  return out;
}

float sample_depth(const DepthMap& depth, double u, double v) {
  const double fu = u - kPixelCenter, fv = v - kPixelCenter;
  const double u0 = std::floor(fu), v0 = std::floor(fv);
  if (!std::isfinite(u0) || !std::isfinite(v0)) return kNoDepth;
  const double wx = fu - u0, wy = fv - v0;
  const int x0 = static_cast<int>(u0), y0 = static_cast<int>(v0);
  auto fg = [&](int x, int y) { return x >= 0 && y >= 0 && x < depth.width() && y < depth.height() && has_depth(depth(x, y)); };
  // Inverse depth is affine in screen space on a planar facet, so it is the
  // quantity interpolated.
  std::array<double, 4> inv{}, wgt{};
  std::array<bool, 4> usable{};
  bool any = false;
  for (int t = 0; t < 4; ++t) {
    const int dx = t & 1, dy = t >> 1;
    wgt[t] = (dx ? wx : 1.0 - wx) * (dy ? wy : 1.0 - wy);
    usable[t] = wgt[t] > 0.0 && fg(x0 + dx, y0 + dy);
    if (usable[t]) inv[t] = 1.0 / depth(x0 + dx, y0 + dy);
    any = any || usable[t];
  }
  if (!any) return kNoDepth;
  double inv_sum = 0.0, weight = 0.0;
  for (int t = 0; t < 4; ++t) {
    if (wgt[t] <= 0.0) continue;
    if (!usable[t]) {
      // Background tap next to foreground: continue the surface linearly
      // from the two nearest foreground pixels along its row and column.
      const int x = x0 + (t & 1), y = y0 + (t >> 1);
      const int sx = (t & 1) ? -1 : 1, sy = (t >> 1) ? -1 : 1;
      double acc = 0.0;
      int n = 0;
      if (fg(x + sx, y) && fg(x + 2 * sx, y)) {
        acc += 2.0 / depth(x + sx, y) - 1.0 / depth(x + 2 * sx, y);
        ++n;
      }
      if (fg(x, y + sy) && fg(x, y + 2 * sy)) {
        acc += 2.0 / depth(x, y + sy) - 1.0 / depth(x, y + 2 * sy);
        ++n;
      }
      if (n == 0 || !(acc > 0.0)) continue;
      inv[t] = acc / n;
    }
    inv_sum += wgt[t] * inv[t];
    weight += wgt[t];
  }
  return static_cast<float>(weight / inv_sum);
}

Mask visibility_mask(const ZMap& zmap, const FlowMap& flow, const DepthMap& d_source, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "visibility lambda must be positive");
  if (!zmap.same_size(flow)) throw Error(ErrorCode::SizeMismatch, "Z-map and flow are not aligned");
  Mask vis(flow.width(), flow.height());
  const int sw = d_source.width(), sh = d_source.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const float z = zmap(x, y);
      if (!flow.valid(x, y) || !has_depth(z)) continue;
      const Eigen::Vector2f f = flow(x, y);
      if (!in_frame(f.x(), f.y(), sw, sh)) continue;
      const float s = sample_depth(d_source, f.x(), f.y());
      if (!has_depth(s)) continue;
      const double zd = z, sd = s;
      vis(x, y) = std::abs(zd - sd) < lambda * std::min(zd, sd) ? 1 : 0;
    }
  }
  return vis;
}

Image warp(const Image& source, const FlowMap& flow, int target_width, int target_height) {
  check_target(flow, target_width, target_height);
  Image out(flow.width(), flow.height());
  if (source.width() > 0 && source.height() > 0) warp_channels(source, flow, out);
  return out;
}

FeatureMap warp(const FeatureMap& source, const FlowMap& flow, int target_width, int target_height) {
  check_target(flow, target_width, target_height);
  FeatureMap out(flow.width(), flow.height(), source.channels());
  if (source.width() > 0 && source.height() > 0) warp_channels(source, flow, out);
  return out;
}

Image warp(const Image& source, const Mask& source_mask, const FlowMap& flow) {
  if (!source_mask.same_size(source.width(), source.height())) {
    throw Error(ErrorCode::SizeMismatch, "source mask does not match the source image");
  }
  Image out(flow.width(), flow.height());
  if (source.width() > 0 && source.height() > 0) warp_channels(source, flow, out, &source_mask);
  return out;
}

FeatureMap warp(const FeatureMap& source, const Mask& source_mask, const FlowMap& flow) {
  if (!source_mask.same_size(source.width(), source.height())) {
    throw Error(ErrorCode::SizeMismatch, "source mask does not match the source features");
  }
  FeatureMap out(flow.width(), flow.height(), source.channels());
  if (source.width() > 0 && source.height() > 0) warp_channels(source, flow, out, &source_mask);
  return out;
}

DepthMap warp(const DepthMap& source, const FlowMap& flow, int target_width, int target_height) {
  check_target(flow, target_width, target_height);
  DepthMap out(flow.width(), flow.height());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Eigen::Vector2f f = flow(x, y);
      if (flow.valid(x, y) && in_frame(f.x(), f.y(), source.width(), source.height())) {
        out(x, y) = sample_depth(source, f.x(), f.y());
      }
    }
  }
  return out;
}

}  // namespace nvs
