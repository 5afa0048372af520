#include "sequence.h"

#include "nvs/reproject.h"

#include <cmath>

namespace nvs::test {

Sequence render_sequence(const SubjectContext& ctx, const std::vector<Camera>& cameras, bool fuse) {
  Sequence seq;
  seq.cameras = cameras;
  std::optional<FusionState> state;
  for (const Camera& cam : cameras) {
    FrameResult f = render_frame(ctx, FrameRequest{cam, "test", fuse}, state);
    state = std::move(f.state);
    seq.frames.push_back(std::move(f.image));
    seq.depths.push_back(std::move(f.geometry.depth));
  }
  return seq;
}

double mean_flicker(const Sequence& seq, double lambda) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const FlowZ fz = compute_flow_zmap(seq.depths[k], seq.cameras[k], seq.cameras[k - 1]);
    const Mask vis = visibility_mask(fz.zmap, fz.flow, seq.depths[k - 1], lambda);
    const Image prev = warp(seq.frames[k - 1], mask_from_depth(seq.depths[k - 1]), fz.flow);
    for (std::size_t i = 0; i < vis.size(); ++i) {
      if (!vis[i]) continue;
      for (std::size_t c = 3 * i; c < 3 * i + 3; ++c) {
        total += std::abs(static_cast<double>(seq.frames[k].data()[c]) - prev.data()[c]);
      }
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace nvs::test
