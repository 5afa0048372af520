#include "nvs/pipeline.h"

#include "nvs/error.h"
#include "nvs/reproject.h"

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace nvs {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

void require_image_matches(const Image& image, const Camera& cam) {
  if (!image.same_size(cam.width(), cam.height())) {
    throw Error(ErrorCode::SizeMismatch, "source image is " + std::to_string(image.width()) + "x" +
                                             std::to_string(image.height()) + ", source camera is " +
                                             std::to_string(cam.width()) + "x" + std::to_string(cam.height()));
  }
}

// Everything downstream of the FOF, shared by both preparation paths.
SubjectContext finish(FofImage fof, const Similarity& to_normalized, const Image& source_image,
                      const Camera& source_camera, const RenderConfig& config, DecoderKind decoder) {
  const int g = config.grid_resolution;
  const OccupancyGrid occupancy = fof_decode(resample(fof, g, g), g);
  const TriangleMesh surface = marching_cubes(occupancy, 0.5);
  if (surface.empty()) throw Error(ErrorCode::EmptyMesh, "the occupancy field has no surface");
  TriangleMesh mesh = transform_mesh(surface, to_normalized.inverse());
  const auto [lo, hi] = bounding_box(mesh);
  RasterOutput geometry = rasterize(mesh, source_camera);
  const EncoderInput enc_in{source_image, fof, geometry.normals};
  const MultiChannelMap x = enc_in.concat();
  EncoderWeights enc = EncoderWeights::from_seed(x.channels(), config.feature_channels, config.seed);
  FeatureMap features = encoder_stub(x, enc);
  DecoderWeights dec = DecoderWeights::from_seed(config.feature_channels + 4, config.seed + 1);
  return SubjectContext{config,
                        decoder,
                        to_normalized,
                        std::move(fof),
                        std::move(mesh),
                        0.5 * (lo + hi),
                        source_image,
                        source_camera,
                        std::move(geometry),
                        std::move(enc),
                        std::move(dec),
                        std::move(features)};
}

StageStats stats(const std::vector<double>& v) {
  StageStats s;
  if (v.empty()) return s;
  s.p50 = percentile(v, 0.5);
  s.p95 = percentile(v, 0.95);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return s;
}

nlohmann::json stats_json(const StageStats& s) { return {{"p50_us", s.p50}, {"p95_us", s.p95}, {"mean_us", s.mean}}; }

}  // namespace

SubjectContext prepare_subject(const TriangleMesh& mesh, const Image& source_image, const Camera& source_camera,
                               const RenderConfig& config, DecoderKind decoder) {
  config.validate();
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "subject mesh has no faces");
  require_image_matches(source_image, source_camera);
  auto [normalized, sim] = normalize_to_unit_box(mesh, kNormalizeMargin);
  FofImage fof = fof_encode_mesh(normalized, source_image.width(), source_image.height(), config.fof_channels);
  return finish(std::move(fof), sim, source_image, source_camera, config, decoder);
}

SubjectContext prepare_subject(const FofImage& fof, const Similarity& to_normalized, const Image& source_image,
                               const Camera& source_camera, const RenderConfig& config, DecoderKind decoder) {
  config.validate();
  require_image_matches(source_image, source_camera);
  if (!fof.same_size(source_image.width(), source_image.height())) {
    throw Error(ErrorCode::SizeMismatch, "FOF does not match the source image size");
  }
  if (!(to_normalized.scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "FOF frame scale must be positive");
  RenderConfig cfg = config;
  cfg.fof_channels = fof.channels();
  return finish(fof, to_normalized, source_image, source_camera, cfg, decoder);
}

nlohmann::json similarity_to_json(const Similarity& s) {
  return {{"scale", s.scale}, {"translation", {s.translation.x(), s.translation.y(), s.translation.z()}}};
}

Similarity similarity_from_json(const nlohmann::json& j) {
  try {
    Similarity s;
    s.scale = j.at("scale").get<double>();
    const auto& t = j.at("translation");
    if (!t.is_array() || t.size() != 3) throw Error(ErrorCode::ParseError, "translation must have 3 entries");
    s.translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    if (!(s.scale > 0.0) || !std::isfinite(s.scale) || !s.translation.allFinite()) {
      throw Error(ErrorCode::ParseError, "similarity must be finite with a positive scale");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("similarity JSON: ") + e.what());
  }
}

nlohmann::json FrameTiming::to_json() const {
  return {{"raster_us", raster}, {"reproject_us", reproject}, {"warp_us", warp},     {"encode_us", encode},
          {"decode_us", decode}, {"fuse_us", fuse},           {"total_us", total}, {"geometric_us", geometric()}};
}

FrameResult render_frame(const SubjectContext& ctx, const FrameRequest& req, const std::optional<FusionState>& state) {
  const auto t0 = Clock::now();
  FrameTiming timing;
  const Camera& cam = req.camera;

  auto t = Clock::now();
  RasterOutput target = rasterize(ctx.mesh, cam);
  timing.raster = micros_since(t);

  t = Clock::now();
  const FlowZ fz = compute_flow_zmap(target.depth, cam, ctx.source_camera);
  const Mask visible = visibility_mask(fz.zmap, fz.flow, ctx.source_geometry.depth, ctx.config.visibility_lambda);
  timing.reproject = micros_since(t);

  t = Clock::now();
  const Image warped = warp(ctx.source_image, ctx.source_geometry.mask, fz.flow);
  timing.warp = micros_since(t);

  DecoderInput in{FeatureMap(cam.width(), cam.height(), 0), fz.zmap, target.normals, target.mask};
  if (ctx.decoder == DecoderKind::Stub) {
    t = Clock::now();
    in.warped_features = warp(ctx.source_features, ctx.source_geometry.mask, fz.flow);
    timing.encode = micros_since(t);
  }

  t = Clock::now();
  Image image = ctx.decoder == DecoderKind::Stub
                    ? decoder_stub(in, ctx.decoder_weights, ctx.config.background_color)
                    : baseline_fill(in, warped, visible, ctx.config.background_color);
  timing.decode = micros_since(t);

  std::optional<FusionState> next;
  if (req.fuse) {
    t = Clock::now();
    if (!state) {
      next = seed_fusion(image, cam, target.depth, ctx.source_camera, ctx.config.fusion_beta,
                         ctx.config.fusion_invert_alpha, ctx.config.visibility_lambda);
    } else {
      FuseResult fused = spatial_fuse(image, *state, cam, target.depth);
      image = std::move(fused.image);
      next = std::move(fused.state);
    }
    timing.fuse = micros_since(t);
  }
  timing.total = micros_since(t0);
  return FrameResult{std::move(image), std::move(next), timing, std::move(target)};
}

OrbitSpec parse_orbit(const std::string& text) {
  const auto colon = text.find(':');
  OrbitSpec o;
  try {
    if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "");
    std::size_t used = 0;
    o.degrees = std::stod(text.substr(0, colon), &used);
    if (used != colon) throw Error(ErrorCode::ParseError, "");
    const std::string f = text.substr(colon + 1);
    o.frames = std::stoi(f, &used);
    if (used != f.size()) throw Error(ErrorCode::ParseError, "");
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "orbit must look like DEGREES:FRAMES, got '" + text + "'");
  }
  if (o.frames < 1 || !std::isfinite(o.degrees)) {
    throw Error(ErrorCode::ParseError, "orbit needs at least one frame and a finite arc");
  }
  return o;
}

std::pair<int, int> frame_size(const Camera& source, int resolution) {
  if (resolution <= 0) return {source.width(), source.height()};
  const int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(resolution) * source.height() /
                                                         source.width())));
  return {resolution, h};
}

std::vector<Camera> orbit_cameras(const SubjectContext& ctx, const OrbitSpec& orbit, int width, int height) {
  const Camera base = width > 0 && height > 0 ? ctx.source_camera.resized(width, height) : ctx.source_camera;
  const Vec3 up = -ctx.source_camera.rotation().row(1).transpose();
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(orbit.frames));
  for (int k = 0; k < orbit.frames; ++k) {
    const double angle = orbit.degrees * std::numbers::pi / 180.0 * k / orbit.frames;
    cams.push_back(k == 0 ? base : base.orbited(ctx.pivot, up, angle));
  }
  return cams;
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

BenchReport bench(const SubjectContext& ctx, const OrbitSpec& orbit, int resolution, int repetitions, bool fuse) {
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  const auto [w, h] = frame_size(ctx.source_camera, resolution);
  const std::vector<Camera> cams = orbit_cameras(ctx, orbit, w, h);
  std::vector<double> raster, reproject, warp_t, encode, decode, fuse_t, total, geometric;
  std::optional<FusionState> state;
  for (int r = 0; r < repetitions; ++r) {
    for (const Camera& cam : cams) {
      FrameResult f = render_frame(ctx, FrameRequest{cam, "bench", fuse}, state);
      state = std::move(f.state);
      raster.push_back(f.timing.raster);
      reproject.push_back(f.timing.reproject);
      warp_t.push_back(f.timing.warp);
      encode.push_back(f.timing.encode);
      decode.push_back(f.timing.decode);
      fuse_t.push_back(f.timing.fuse);
      total.push_back(f.timing.total);
      geometric.push_back(f.timing.geometric());
    }
  }
  BenchReport rep;
  rep.width = w;
  rep.height = h;
  rep.frames = static_cast<int>(total.size());
  rep.fuse = fuse;
  rep.raster = stats(raster);
  rep.reproject = stats(reproject);
  rep.warp = stats(warp_t);
  rep.encode = stats(encode);
  rep.decode = stats(decode);
  rep.fuse_stage = stats(fuse_t);
  rep.total = stats(total);
  rep.geometric = stats(geometric);
  rep.fps_end_to_end = rep.total.p50 > 0.0 ? 1e6 / rep.total.p50 : 0.0;
  rep.fps_geometric = rep.geometric.p50 > 0.0 ? 1e6 / rep.geometric.p50 : 0.0;
  rep.threads = omp_get_max_threads();
  return rep;
}

nlohmann::json BenchReport::to_json() const {
  return {{"width", width},
          {"height", height},
          {"frames", frames},
          {"fuse", fuse},
          {"threads", threads},
          {"fps_end_to_end", fps_end_to_end},
          {"fps_geometric", fps_geometric},
          {"stages",
           {{"raster", stats_json(raster)},
            {"reproject", stats_json(reproject)},
            {"warp", stats_json(warp)},
            {"encode", stats_json(encode)},
            {"decode", stats_json(decode)},
            {"fuse", stats_json(fuse_stage)},
            {"geometric", stats_json(geometric)},
            {"total", stats_json(total)}}}};
}

std::string BenchReport::table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << width << "x" << height << ", " << frames << " frames, " << threads << " thread(s), fusion "
      << (fuse ? "on" : "off") << "\n";
  out << std::left << std::setw(12) << "stage" << std::right << std::setw(12) << "p50 ms" << std::setw(12)
      << "p95 ms" << std::setw(12) << "mean ms" << "\n";
  const std::pair<const char*, const StageStats*> rows[] = {
      {"raster", &raster}, {"reproject", &reproject}, {"warp", &warp},           {"encode", &encode},
      {"decode", &decode}, {"fuse", &fuse_stage},     {"geometric", &geometric}, {"total", &total}};
  for (const auto& [name, s] : rows) {
    out << std::left << std::setw(12) << name << std::right << std::setw(12) << s->p50 / 1000.0 << std::setw(12)
        << s->p95 / 1000.0 << std::setw(12) << s->mean / 1000.0 << "\n";
  }
  out << "FPS (p50): end-to-end " << fps_end_to_end << ", geometric path " << fps_geometric << "\n";
  return out.str();
}

std::size_t current_rss_bytes() {
  std::ifstream statm("/proc/self/statm");
  std::size_t pages = 0, resident = 0;
  if (!(statm >> pages >> resident)) return 0;
  return resident * static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
}

}  // namespace nvs
