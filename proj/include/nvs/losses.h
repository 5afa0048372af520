#pragma once

#include "nvs/camera.h"
#include "nvs/maps.h"
#include "nvs/reproject.h"

#include <cstddef>
#include <vector>

namespace nvs {

/// Mean over mask pixels of the per-pixel L1 distance summed over RGB.
/// Throws SizeMismatch, EmptyMask.
double pixel_loss(const Image& pred, const Image& gt, const Mask& mask);

struct ConsistencyResult {
  double value = 0.0;
  /// No pixel is visible in both views; value is 0.
  bool empty_visibility = false;
  std::size_t count = 0;  // mutually visible pixels
  Mask visible;           // in the mv view
};

/// Warps img_ref into the mv view (flow from d_mv towards cam_ref, taps
/// restricted to the ref foreground) and returns the mean per-pixel L1
/// against img_mv over pixels visible in both views.
ConsistencyResult consistency_loss(const Image& img_ref, const Image& img_mv, const DepthMap& d_ref,
                                   const DepthMap& d_mv, const Camera& cam_ref, const Camera& cam_mv,
                                   double lambda = kDefaultVisibilityLambda);

/// Maps an image to one or more feature grids. Grids may be coarser than the
/// image; the mask is sampled at each grid cell center.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<FeatureMap> embed(const Image& image) const = 0;
};

/// Features are the raw pixels.
class IdentityEmbedder final : public Embedder {
 public:
  std::vector<FeatureMap> embed(const Image& image) const override;
};

/// Per grid, the mean over masked cells and channels of the squared feature
/// difference; averaged over grids. Throws EmbedderUnavailable for a null
/// embedder, SizeMismatch, EmptyMask.
double lpips_loss(const Image& pred, const Image& gt, const Mask& mask, const Embedder* embedder);

struct LossWeights {
  double consistency = 100.0;
  double pixel = 1.0;
  double lpips = 0.5;
};

struct LossParts {
  double consistency = 0.0;
  double pixel = 0.0;
  double lpips = 0.0;
};

/// Throws InvalidArgument for a negative weight.
double total_loss(const LossParts& parts, const LossWeights& w = {});

}  // namespace nvs
