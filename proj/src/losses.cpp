#include "nvs/losses.h"

#include "nvs/error.h"

#include <algorithm>
#include <cmath>

namespace nvs {
namespace {

void require_aligned(const Image& a, const Image& b, const Mask& m) {
  if (!a.same_size(b.width(), b.height()) || !m.same_size(a.width(), a.height())) {
    throw Error(ErrorCode::SizeMismatch, "images and mask must share one size");
  }
}

double l1_sum(const Image& a, const Image& b, std::size_t i) {
  double s = 0.0;
  for (std::size_t c = 3 * i; c < 3 * i + 3; ++c) {
    s += std::abs(static_cast<double>(a.data()[c]) - static_cast<double>(b.data()[c]));
  }
  return s;
}

}  // namespace

double pixel_loss(const Image& pred, const Image& gt, const Mask& mask) {
  require_aligned(pred, gt, mask);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    sum += l1_sum(pred, gt, i);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyMask, "pixel loss over an empty mask");
  return sum / static_cast<double>(n);
}

ConsistencyResult consistency_loss(const Image& img_ref, const Image& img_mv, const DepthMap& d_ref,
                                   const DepthMap& d_mv, const Camera& cam_ref, const Camera& cam_mv, double lambda) {
  if (!img_ref.same_size(d_ref.width(), d_ref.height()) || !img_mv.same_size(d_mv.width(), d_mv.height())) {
    throw Error(ErrorCode::SizeMismatch, "each image must match its depth map");
  }
  const FlowZ fz = compute_flow_zmap(d_mv, cam_mv, cam_ref);
  ConsistencyResult r;
  r.visible = visibility_mask(fz.zmap, fz.flow, d_ref, lambda);
  const Image warped = warp(img_ref, mask_from_depth(d_ref), fz.flow);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.visible.size(); ++i) {
    if (!r.visible[i]) continue;
    sum += l1_sum(warped, img_mv, i);
    ++r.count;
  }
  r.empty_visibility = r.count == 0;
  r.value = r.count == 0 ? 0.0 : sum / static_cast<double>(r.count);
  return r;
}

std::vector<FeatureMap> IdentityEmbedder::embed(const Image& image) const {
  FeatureMap f(image.width(), image.height(), Image::kChannels);
  std::copy(image.data().begin(), image.data().end(), f.data().begin());
  return {std::move(f)};
}

double lpips_loss(const Image& pred, const Image& gt, const Mask& mask, const Embedder* embedder) {
  if (!embedder) throw Error(ErrorCode::EmbedderUnavailable, "no perceptual embedder configured");
  require_aligned(pred, gt, mask);
  const std::vector<FeatureMap> a = embedder->embed(pred);
  const std::vector<FeatureMap> b = embedder->embed(gt);
  if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::SizeMismatch, "embedder returned mismatched grids");
  double total = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    const FeatureMap& fa = a[g];
    const FeatureMap& fb = b[g];
    if (!fa.same_size(fb.width(), fb.height()) || fa.channels() != fb.channels() || fa.channels() == 0) {
      throw Error(ErrorCode::SizeMismatch, "embedder returned mismatched grids");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < fa.height(); ++y) {
      const int my = std::min(mask.height() - 1,
                              static_cast<int>((y + kPixelCenter) * mask.height() / fa.height()));
      for (int x = 0; x < fa.width(); ++x) {
        const int mx = std::min(mask.width() - 1,
                                static_cast<int>((x + kPixelCenter) * mask.width() / fa.width()));
        if (!mask(mx, my)) continue;
        const float* p = fa.pixel(x, y);
        const float* q = fb.pixel(x, y);
        for (int c = 0; c < fa.channels(); ++c) {
          const double d = static_cast<double>(p[c]) - static_cast<double>(q[c]);
          sum += d * d;
        }
        ++n;
      }
    }
    if (n == 0) throw Error(ErrorCode::EmptyMask, "LPIPS over an empty mask");
    total += sum / (static_cast<double>(n) * fa.channels());
  }
  return total / static_cast<double>(a.size());
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  if (w.consistency < 0.0 || w.pixel < 0.0 || w.lpips < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "loss weights must be nonnegative");
  }
  return w.consistency * parts.consistency + w.pixel * parts.pixel + w.lpips * parts.lpips;
}

}  // namespace nvs
