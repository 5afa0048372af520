#pragma once

#include "nvs/camera.h"
#include "nvs/config.h"
#include "nvs/fof.h"
#include "nvs/maps.h"
#include "nvs/mesh.h"
#include "nvs/raster.h"
#include "nvs/render.h"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nvs {

enum class DecoderKind { Baseline, Stub };

/// View-independent state of one subject. Immutable once prepared; share it
/// across sessions through a shared_ptr<const SubjectContext>.
struct SubjectContext {
  RenderConfig config;
  DecoderKind decoder = DecoderKind::Baseline;
  /// World frame to the normalized box the FOF lives in.
  Similarity to_normalized;
  FofImage fof;
  /// Geometry used for every view: the marching-cubes surface of the FOF,
  /// in world coordinates.
  TriangleMesh mesh;
  Vec3 pivot = Vec3::Zero();  // center of the mesh bounds
  Image source_image;
  Camera source_camera;
  RasterOutput source_geometry;
  EncoderWeights encoder;
  DecoderWeights decoder_weights;
  FeatureMap source_features;
};

/// Mesh path: normalizes the mesh, encodes its FOF at the source image
/// resolution, decodes it on a grid_resolution^2 x grid_resolution grid and
/// extracts the surface with marching cubes. Throws EmptyMesh, SizeMismatch
/// (image vs camera) and errors of the component modules.
SubjectContext prepare_subject(const TriangleMesh& mesh, const Image& source_image, const Camera& source_camera,
                               const RenderConfig& config = {}, DecoderKind decoder = DecoderKind::Baseline);

/// FOF path: skips encoding. `to_normalized` maps world points into the FOF's
/// box. Throws SizeMismatch when the FOF does not match the source image.
SubjectContext prepare_subject(const FofImage& fof, const Similarity& to_normalized, const Image& source_image,
                               const Camera& source_camera, const RenderConfig& config = {},
                               DecoderKind decoder = DecoderKind::Baseline);

/// Margin kept between the normalized mesh and the box faces.
inline constexpr double kNormalizeMargin = 0.05;

// FOF sidecar JSON: {"scale": s, "translation": [x, y, z]} for to_normalized.
nlohmann::json similarity_to_json(const Similarity& s);
Similarity similarity_from_json(const nlohmann::json& j);

struct FrameRequest {
  Camera camera;
  std::string session;
  bool fuse = false;
};

/// Stage durations in microseconds. `warp` is the source image resampling,
/// `encode` the source feature resampling the stub decoder consumes (zero
/// with the baseline decoder), `decode` the fill or stub decoder.
struct FrameTiming {
  double raster = 0.0;
  double reproject = 0.0;
  double warp = 0.0;
  double encode = 0.0;
  double decode = 0.0;
  double fuse = 0.0;
  double total = 0.0;

  /// raster + reproject + warp + fuse.
  double geometric() const { return raster + reproject + warp + fuse; }
  nlohmann::json to_json() const;
};

struct FrameResult {
  Image image;
  std::optional<FusionState> state;
  FrameTiming timing;
  RasterOutput geometry;  // target view
};

/// Renders one novel view. With req.fuse, a missing state seeds a new chain
/// and the frame passes through unchanged; otherwise the frame is fused with
/// `state`. Without req.fuse the returned state is empty.
FrameResult render_frame(const SubjectContext& ctx, const FrameRequest& req,
                         const std::optional<FusionState>& state = std::nullopt);

/// "degrees:frames", e.g. "360:120": frames evenly spaced over the arc,
/// starting at the source view.
struct OrbitSpec {
  double degrees = 360.0;
  int frames = 120;
};
OrbitSpec parse_orbit(const std::string& text);

/// Cameras orbiting the subject pivot about the source camera's up axis, at
/// `width` x `height` (the source size when non-positive).
std::vector<Camera> orbit_cameras(const SubjectContext& ctx, const OrbitSpec& orbit, int width = 0, int height = 0);

/// Output size for a square resolution request that keeps the source aspect.
std::pair<int, int> frame_size(const Camera& source, int resolution);

struct StageStats {
  double p50 = 0.0;
  double p95 = 0.0;
  double mean = 0.0;
};

struct BenchReport {
  int width = 0;
  int height = 0;
  int frames = 0;
  bool fuse = true;
  StageStats raster, reproject, warp, encode, decode, fuse_stage, total, geometric;
  /// 1e6 / p50 of the respective per-frame time.
  double fps_end_to_end = 0.0;
  double fps_geometric = 0.0;
  int threads = 1;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Nearest-rank percentile (q in (0, 1]) of unsorted samples.
double percentile(std::vector<double> samples, double q);

/// Renders the orbit `repetitions` times in one fused session.
BenchReport bench(const SubjectContext& ctx, const OrbitSpec& orbit, int resolution, int repetitions,
                  bool fuse = true);

/// Resident set size of this process in bytes (0 where unavailable).
std::size_t current_rss_bytes();

}  // namespace nvs
