// Command-line front end: FOF encode/decode, reprojection export, orbit
// rendering, benchmarking, evaluation, synthetic assets, EPI export and the
// frame-streaming service.

#include "nvs/camera.h"
#include "nvs/config.h"
#include "nvs/error.h"
#include "nvs/fof.h"
#include "nvs/image_io.h"
#include "nvs/losses.h"
#include "nvs/metrics.h"
#include "nvs/mesh.h"
#include "nvs/pipeline.h"
#include "nvs/raster.h"
#include "nvs/reproject.h"
#include "nvs/service.h"
#include "nvs/shapes.h"
#include "nvs/synthetic.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace nvs;

// Inputs shared by every subcommand that prepares a subject.
struct SubjectArgs {
  std::string mesh;
  std::string fof;
  std::string image;
  std::string src_cam;
  std::string config;
  std::string decoder = "baseline";

  void add_to(CLI::App* app) {
    auto* m = app->add_option("--mesh", mesh, "Closed mesh (OBJ or PLY)")->check(CLI::ExistingFile);
    auto* f = app->add_option("--fof", fof, "FOF file (with its .json sidecar) instead of a mesh")
                  ->check(CLI::ExistingFile);
    m->excludes(f);
    app->add_option("--image", image, "Source image (PNG)")->required()->check(CLI::ExistingFile);
    app->add_option("--src-cam", src_cam, "Source camera JSON")->required()->check(CLI::ExistingFile);
    app->add_option("--config", config, "Render config file")->check(CLI::ExistingFile);
    app->add_option("--decoder", decoder, "baseline or stub")->check(CLI::IsMember({"baseline", "stub"}));
  }

  RenderConfig render_config() const { return config.empty() ? RenderConfig{} : load_config(config); }

  SubjectContext prepare(const RenderConfig& cfg) const {
    if (mesh.empty() && fof.empty()) throw Error(ErrorCode::InvalidArgument, "one of --mesh or --fof is required");
    const Image img = load_png(image);
    const Camera cam = load_camera(src_cam);
    const DecoderKind kind = decoder == "stub" ? DecoderKind::Stub : DecoderKind::Baseline;
    if (!mesh.empty()) return prepare_subject(load_mesh(mesh), img, cam, cfg, kind);
    return prepare_subject(load_fof(fof), load_sidecar(fof), img, cam, cfg, kind);
  }

  static Similarity load_sidecar(const std::string& fof_path) {
    const std::string path = fof_path + ".json";
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "missing FOF sidecar " + path);
    try {
      return similarity_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
  }
};

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());
}

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.png", i);
  return buf;
}

TriangleMesh named_shape(const std::string& name) {
  if (name == "sphere") return shapes::icosphere(4);
  if (name == "cube") return shapes::box(Vec3(-1, -1, -1), Vec3(1, 1, 1));
  if (name == "torus") return shapes::torus(1.0, 0.35, 96, 48);
  if (name == "capsule") return shapes::capsule(0.5, 0.6, 48);
  return shapes::sphere_box_union();
}

// fof encode: orthographic along +z of the normalized box.
int cmd_fof_encode(const std::string& mesh_path, const std::string& out, int channels, int resolution) {
  const auto [normalized, sim] = normalize_to_unit_box(load_mesh(mesh_path), kNormalizeMargin);
  const FofImage fof = fof_encode_mesh(normalized, resolution, resolution, channels);
  save_fof(fof, out);
  write_json(similarity_to_json(sim), out + ".json");
  std::cout << "wrote " << out << " (" << fof.width() << "x" << fof.height() << "x" << fof.channels() << ")\n";
  return 0;
}

int cmd_fof_decode(const std::string& in, int nz, const std::string& mesh_out) {
  const FofImage fof = load_fof(in);
  TriangleMesh surface = marching_cubes(fof_decode(fof, nz), 0.5);
  if (surface.faces.empty()) throw Error(ErrorCode::EmptyMesh, "decoded occupancy has no surface");
  if (fs::exists(in + ".json")) surface = transform_mesh(surface, SubjectArgs::load_sidecar(in).inverse());
  save_mesh(surface, mesh_out);
  std::cout << "wrote " << mesh_out << " (" << surface.faces.size() << " faces)\n";
  return 0;
}

int cmd_reproject(const std::string& mesh_path, const std::string& cam_src_path, const std::string& cam_dst_path,
                  const std::string& out_dir, double lambda) {
  const TriangleMesh mesh = load_mesh(mesh_path);
  const Camera src = load_camera(cam_src_path);
  const Camera dst = load_camera(cam_dst_path);
  ensure_dir(out_dir);
  const RasterOutput g_src = rasterize(mesh, src);
  const RasterOutput g_dst = rasterize(mesh, dst);
  const FlowZ fz = compute_flow_zmap(g_dst.depth, dst, src);
  const Mask visible = visibility_mask(fz.zmap, fz.flow, g_src.depth, lambda);
  const fs::path dir(out_dir);
  save_flow(fz.flow, (dir / "flow.bin").string());
  save_zmap(fz.zmap, (dir / "zmap.bin").string());
  save_depth(g_src.depth, (dir / "depth_src.bin").string());
  save_depth(g_dst.depth, (dir / "depth_dst.bin").string());
  save_png(false_color_depth(g_src.depth), (dir / "depth_src.png").string());
  save_png(false_color_depth(g_dst.depth), (dir / "depth_dst.png").string());
  save_normals_png(g_dst.normals, (dir / "normals_dst.png").string());
  save_mask_png(visible, (dir / "visible.png").string());
  json report = {{"foreground", g_dst.mask.count()},
                 {"visible", visible.count()},
                 {"degenerate", fz.degenerate},
                 {"lambda", lambda}};
  write_json(report, (dir / "reproject.json").string());
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_render(const SubjectArgs& args, const std::string& orbit_text, const std::string& out_dir, bool fuse,
               int res, const std::string& camera_path) {
  RenderConfig cfg = args.render_config();
  if (res > 0) cfg.resolution = res;
  const SubjectContext ctx = args.prepare(cfg);
  const auto [w, h] = frame_size(ctx.source_camera, cfg.resolution);
  std::vector<Camera> cams;
  if (!camera_path.empty()) {
    cams.push_back(load_camera(camera_path).resized(w, h));
  } else {
    cams = orbit_cameras(ctx, parse_orbit(orbit_text), w, h);
  }
  ensure_dir(out_dir);
  std::optional<FusionState> state;
  json frames = json::array();
  for (std::size_t i = 0; i < cams.size(); ++i) {
    FrameResult r = render_frame(ctx, {cams[i], "cli", fuse}, state);
    state = std::move(r.state);
    const std::string name = frame_name(static_cast<int>(i));
    save_png(r.image, (fs::path(out_dir) / name).string());
    json entry = r.timing.to_json();
    entry["file"] = name;
    entry["camera"] = to_json(cams[i]);
    frames.push_back(std::move(entry));
  }
  write_json({{"width", w}, {"height", h}, {"fuse", fuse}, {"frames", frames}},
             (fs::path(out_dir) / "timing.json").string());
  std::cout << "rendered " << cams.size() << " frames at " << w << "x" << h << " into " << out_dir << '\n';
  return 0;
}

int cmd_bench(const SubjectArgs& args, const std::string& orbit_text, int res, int reps, bool no_fuse,
              const std::string& json_out) {
  RenderConfig cfg = args.render_config();
  cfg.resolution = res;
  const SubjectContext ctx = args.prepare(cfg);
  const BenchReport report = bench(ctx, parse_orbit(orbit_text), res, reps, !no_fuse);
  std::cout << report.table();
  if (!json_out.empty()) write_json(report.to_json(), json_out);
  return 0;
}

struct EvalArgs {
  std::string pred, gt, mask;
  std::string depth, cam, ref_image, ref_depth, ref_cam;
  double lambda = kDefaultVisibilityLambda;
  bool lpips = false;
  std::string out;
};

json eval_pair(const EvalArgs& a, const std::string& pred_path, const std::string& gt_path) {
  const Image pred = load_png(pred_path);
  const Image gt = load_png(gt_path);
  const Mask mask = a.mask.empty() ? Mask(pred.width(), pred.height(), true) : [&] {
    const Image m = load_png(a.mask);
    Mask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) out(x, y) = m.at(x, y, 0) > 0.5f ? 1 : 0;
    return out;
  }();
  json r = {{"pred", pred_path},
            {"gt", gt_path},
            {"psnr", psnr(pred, gt, a.mask.empty() ? nullptr : &mask)},
            {"ssim", ssim(pred, gt)},
            {"pixel_l1", pixel_loss(pred, gt, mask)}};
  if (!a.depth.empty() && !a.cam.empty() && !a.ref_image.empty() && !a.ref_depth.empty() && !a.ref_cam.empty()) {
    const ConsistencyResult c = consistency_loss(load_png(a.ref_image), pred, load_depth_png16(a.ref_depth),
                                                 load_depth_png16(a.depth), load_camera(a.ref_cam),
                                                 load_camera(a.cam), a.lambda);
    r["consistency"] = c.empty_visibility ? json(nullptr) : json(c.value);
    r["consistency_pixels"] = c.count;
  } else {
    r["consistency"] = nullptr;
  }
  if (a.lpips) {
    const IdentityEmbedder embedder;
    r["lpips"] = lpips_loss(pred, gt, mask, &embedder);
    r["lpips_embedder"] = "identity";
  }
  return r;
}

int cmd_eval(const EvalArgs& a) {
  json report;
  if (fs::is_directory(a.pred)) {
    report = json::array();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.pred))
      if (e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const fs::path other = fs::path(a.gt) / f.filename();
      if (fs::exists(other)) report.push_back(eval_pair(a, f.string(), other.string()));
    }
  } else {
    report = eval_pair(a, a.pred, a.gt);
  }
  write_json(report, a.out);
  return 0;
}

int cmd_synth(const std::string& shape, const std::string& out_dir, int res, double elevation) {
  ensure_dir(out_dir);
  const TriangleMesh mesh = normalize_to_unit_box(named_shape(shape), 0.1).first;
  const Vec3 eye = 3.5 * Vec3(0.0, -std::sin(elevation), -std::cos(elevation));
  const Camera cam = Camera::look_at(eye, Vec3::Zero(), Vec3(0, -1, 0), 0.8, res, res, 0.1, 10.0);
  const TexturedRender t = render_textured(mesh, cam, wave_texture());
  const fs::path dir(out_dir);
  save_mesh(mesh, (dir / "mesh.ply").string());
  save_camera(cam, (dir / "cam.json").string());
  save_png(t.image, (dir / "image.png").string());
  save_depth_png16(t.geometry.depth, (dir / "depth.png").string());
  save_mask_png(t.geometry.mask, (dir / "mask.png").string());
  std::cout << "wrote " << shape << " scene to " << out_dir << '\n';
  return 0;
}

int cmd_epi(const std::string& frames_dir, int row, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(frames_dir))
    if (e.path().extension() == ".png" && e.path().filename().string().rfind("frame_", 0) == 0)
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Image> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(load_png(f.string()));
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "no frame_*.png files in " + frames_dir);
  const int r = row >= 0 ? row : frames.front().height() / 2;
  const Image epi = epi_slice(frames, r);
  save_png(epi, out);
  std::cout << json{{"frames", frames.size()}, {"row", r}, {"temporal_variance", epi_temporal_variance(epi)}}.dump()
            << '\n';
  return 0;
}

int cmd_serve(const SubjectArgs& args, const std::string& bind, int res, const std::string& static_dir, int threads) {
  ServiceOptions options;
  std::tie(options.host, options.port) = parse_bind(bind);
  if (res > 0) options.resolution = res;
  options.static_dir = static_dir;
  options.render_threads = threads;
  options = apply_env_overrides(options);
  RenderConfig cfg = args.render_config();
  cfg.resolution = options.resolution;
  std::shared_ptr<const SubjectContext> ctx;
  try {
    ctx = std::make_shared<const SubjectContext>(args.prepare(cfg));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError || e.code() == ErrorCode::ParseError || e.code() == ErrorCode::EmptyMesh) {
      throw Error(ErrorCode::AssetError, e.what());
    }
    throw;
  }
  FrameServer server(ctx, options);
  std::cout << "serving on " << options.host << ":" << server.port() << " at " << options.resolution << "px"
            << std::endl;
  server.run(true);
  std::cout << "shut down" << std::endl;
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::AssetError: return 3;
    case ErrorCode::ParseError: return 4;
    case ErrorCode::BindError: return 5;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Novel-view rendering from a single posed image"};
  app.require_subcommand(1);

  auto* fof = app.add_subcommand("fof", "Fourier occupancy field encode/decode");
  fof->require_subcommand(1);
  std::string fof_mesh, fof_out, fof_in, fof_mesh_out;
  int fof_channels = 16, fof_res = 512, fof_nz = 128;
  auto* enc = fof->add_subcommand("encode", "Encode a closed mesh");
  enc->add_option("--mesh", fof_mesh)->required()->check(CLI::ExistingFile);
  enc->add_option("--out", fof_out)->required();
  enc->add_option("--channels", fof_channels)->check(CLI::Range(1, 1024));
  enc->add_option("--res", fof_res, "Pixel grid (square)")->check(CLI::Range(1, 8192));
  auto* dec = fof->add_subcommand("decode", "Decode to occupancy and extract a surface");
  dec->add_option("--in", fof_in)->required()->check(CLI::ExistingFile);
  dec->add_option("--nz", fof_nz)->check(CLI::Range(2, 4096));
  dec->add_option("--mesh-out", fof_mesh_out)->required();

  auto* rep = app.add_subcommand("reproject", "Export flow, Z-map and visibility between two cameras");
  std::string rep_mesh, rep_src, rep_dst, rep_out;
  double rep_lambda = kDefaultVisibilityLambda;
  rep->add_option("--mesh", rep_mesh)->required()->check(CLI::ExistingFile);
  rep->add_option("--cam-src", rep_src)->required()->check(CLI::ExistingFile);
  rep->add_option("--cam-dst", rep_dst)->required()->check(CLI::ExistingFile);
  rep->add_option("--out-dir", rep_out)->required();
  rep->add_option("--lambda", rep_lambda)->check(CLI::PositiveNumber);

  SubjectArgs render_args, bench_args, serve_args;
  auto* ren = app.add_subcommand("render", "Render an orbit (or one camera) around the subject");
  render_args.add_to(ren);
  std::string ren_orbit = "360:120", ren_out, ren_cam;
  bool ren_fuse = false;
  int ren_res = 0;
  ren->add_option("--orbit", ren_orbit, "degrees:frames");
  ren->add_option("--camera", ren_cam, "Render this camera instead of an orbit")->check(CLI::ExistingFile);
  ren->add_option("--out", ren_out)->required();
  ren->add_flag("--fuse", ren_fuse, "Spatial fusion along the sequence");
  ren->add_option("--res", ren_res)->check(CLI::Range(1, 8192));

  auto* ben = app.add_subcommand("bench", "Per-stage timing over an orbit");
  bench_args.add_to(ben);
  std::string ben_orbit = "360:120", ben_json;
  int ben_res = 512, ben_reps = 1;
  bool ben_no_fuse = false;
  ben->add_option("--orbit", ben_orbit);
  ben->add_option("--res", ben_res)->check(CLI::Range(1, 8192));
  ben->add_option("--reps", ben_reps)->check(CLI::Range(1, 1000));
  ben->add_flag("--no-fuse", ben_no_fuse);
  ben->add_option("--json", ben_json, "Write the JSON report here ('-' for stdout)");

  auto* ev = app.add_subcommand("eval", "Quality and consistency report for image pairs");
  EvalArgs ea;
  ev->add_option("--pred", ea.pred, "Image or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--gt", ea.gt, "Image or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--mask", ea.mask)->check(CLI::ExistingFile);
  ev->add_option("--depth", ea.depth, "16-bit depth PNG of the prediction")->check(CLI::ExistingFile);
  ev->add_option("--cam", ea.cam, "Camera of the prediction")->check(CLI::ExistingFile);
  ev->add_option("--ref-image", ea.ref_image, "Reference view for consistency")->check(CLI::ExistingFile);
  ev->add_option("--ref-depth", ea.ref_depth)->check(CLI::ExistingFile);
  ev->add_option("--ref-cam", ea.ref_cam)->check(CLI::ExistingFile);
  ev->add_option("--lambda", ea.lambda)->check(CLI::PositiveNumber);
  ev->add_flag("--lpips", ea.lpips, "Masked feature distance with the identity embedder");
  ev->add_option("--out", ea.out, "JSON output (stdout by default)");

  auto* syn = app.add_subcommand("synth", "Write a textured synthetic scene");
  std::string syn_shape = "union", syn_out;
  int syn_res = 512;
  double syn_elev = 0.15;
  syn->add_option("--shape", syn_shape)->check(CLI::IsMember({"sphere", "cube", "torus", "capsule", "union"}));
  syn->add_option("--out", syn_out)->required();
  syn->add_option("--res", syn_res)->check(CLI::Range(16, 8192));
  syn->add_option("--elevation", syn_elev, "Camera elevation in radians");

  auto* epi = app.add_subcommand("epi", "Epipolar-plane image of a rendered sequence");
  std::string epi_dir, epi_out;
  int epi_row = -1;
  epi->add_option("--frames", epi_dir)->required()->check(CLI::ExistingDirectory);
  epi->add_option("--row", epi_row, "Pixel row (middle by default)");
  epi->add_option("--out", epi_out)->required();

  auto* srv = app.add_subcommand("serve", "Frame-streaming WebSocket service");
  serve_args.add_to(srv);
  std::string srv_bind = "127.0.0.1:9000", srv_static;
  int srv_res = 0, srv_threads = 0;
  srv->add_option("--bind", srv_bind, "host:port (NVS_BIND overrides)");
  srv->add_option("--res", srv_res, "Frame resolution (NVS_RESOLUTION overrides)")->check(CLI::Range(1, 8192));
  srv->add_option("--static-dir", srv_static, "Serve the viewer bundle from here");
  srv->add_option("--threads", srv_threads, "Render threads (0 = hardware)")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (enc->parsed()) return cmd_fof_encode(fof_mesh, fof_out, fof_channels, fof_res);
    if (dec->parsed()) return cmd_fof_decode(fof_in, fof_nz, fof_mesh_out);
    if (rep->parsed()) return cmd_reproject(rep_mesh, rep_src, rep_dst, rep_out, rep_lambda);
    if (ren->parsed()) return cmd_render(render_args, ren_orbit, ren_out, ren_fuse, ren_res, ren_cam);
    if (ben->parsed()) return cmd_bench(bench_args, ben_orbit, ben_res, ben_reps, ben_no_fuse, ben_json);
    if (ev->parsed()) return cmd_eval(ea);
    if (syn->parsed()) return cmd_synth(syn_shape, syn_out, syn_res, syn_elev);
    if (epi->parsed()) return cmd_epi(epi_dir, epi_row, epi_out);
    if (srv->parsed()) return cmd_serve(serve_args, srv_bind, srv_res, srv_static, srv_threads);
  } catch (const Error& e) {
    std::cerr << "nvs: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "nvs: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
