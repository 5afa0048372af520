// Acceptance run: one PASS/FAIL line per primary criterion, each measured at
// its stated tolerance. Exit status is nonzero when any criterion fails.

#include "nvs/fof.h"
#include "nvs/losses.h"
#include "nvs/metrics.h"
#include "nvs/pipeline.h"
#include "nvs/raster.h"
#include "nvs/render.h"
#include "nvs/reproject.h"
#include "nvs/service.h"
#include "nvs/shapes.h"
#include "nvs/synthetic.h"

#include "support/intervals.h"
#include "support/quadrature.h"
#include "support/ray_oracle.h"
#include "support/scenes.h"
#include "support/sequence.h"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nvs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared by the geometry and visibility criteria: 10 random pairs per mesh.
struct PairStats {
  double rel_err_sum = 0.0;
  std::size_t visible = 0;
  std::size_t foreground = 0;
  std::size_t agree = 0;
  double seconds = 0.0;  // library stages only
};

const PairStats& pair_stats() {
  static const PairStats stats = [] {
    PairStats s;
    std::mt19937 rng(2718);
    for (const auto& [name, mesh] : test::reference_meshes()) {
      const test::RayOracle oracle(mesh);
      for (int pair = 0; pair < 10; ++pair) {
        const Camera t = test::random_view(rng, 256), src = test::random_view(rng, 256);
        const auto t0 = std::chrono::steady_clock::now();
        const RasterOutput rt = rasterize(mesh, t), rs = rasterize(mesh, src);
        const FlowZ fz = compute_flow_zmap(rt.depth, t, src);
        const Mask vis = visibility_mask(fz.zmap, fz.flow, rs.depth);
        const DepthMap warped = warp(rs.depth, fz.flow);
        s.seconds += seconds_since(t0);
        for (int y = 0; y < 256; ++y) {
          for (int x = 0; x < 256; ++x) {
            if (!rt.mask(x, y)) continue;
            ++s.foreground;
            const Vec3 p = unproject(t, {x + 0.5, y + 0.5}, rt.depth(x, y));
            s.agree += static_cast<bool>(vis(x, y)) == test::oracle_visible(oracle, src, p, 1e-3);
            if (!vis(x, y)) continue;
            ++s.visible;
            s.rel_err_sum += std::abs(static_cast<double>(warped(x, y)) - fz.zmap(x, y)) / fz.zmap(x, y);
          }
        }
      }
    }
    return s;
  }();
  return stats;
}

Outcome geometry_self_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const PairStats& s = pair_stats();
  const double total = seconds_since(t0);
  const double err = s.rel_err_sum / static_cast<double>(s.visible);
  return {s.visible > 0 && err <= 1e-3 && total < 60.0,
          fmt("mean |rel err| %.5g on %zu visible pixels (<= 1e-3), 50 pairs in %.1f s incl. oracle (< 60 s)", err,
              s.visible, total)};
}

Outcome visibility_oracle() {
  const PairStats& s = pair_stats();
  const double frac = static_cast<double>(s.agree) / static_cast<double>(s.foreground);
  return {frac >= 0.99, fmt("agreement %.4f%% of %zu foreground pixels (>= 99%%)", 100.0 * frac, s.foreground)};
}

Outcome fof_round_trip() {
  const int w = 32, h = 32, nz = 128;
  std::mt19937 rng(2024);
  std::vector<test::Intervals> columns;
  for (int i = 0; i < w * h; ++i) columns.push_back(test::random_intervals(rng, 3));
  OccupancyGrid truth(w, h, nz);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      for (int k = 0; k < nz; ++k)
        truth(i, j, k) = test::inside(columns[j * w + i], OccupancyGrid::coord(k, nz)) ? 1.0f : 0.0f;
  auto iou = [&](int channels) {
    const OccupancyGrid d = fof_decode(fof_encode(truth, channels), nz);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < truth.data().size(); ++i) {
      const bool a = truth.data()[i] >= 0.5f, b = d.data()[i] >= 0.5f;
      inter += a && b;
      uni += a || b;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
  };
  const double i8 = iou(8), i16 = iou(16), i32 = iou(32);

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    std::vector<double> coeffs(32, 0.0);
    add_interval_coefficients(a, b, std::span<double>(coeffs));
    for (int k = 0; k < 32; ++k) {
      const double q =
          test::simpson([k](double z) { return std::cos(k * std::numbers::pi * (z + 1) / 2); }, a, b, 4096);
      worst = std::max(worst, std::abs(coeffs[k] - q));
    }
  }
  return {i16 >= 0.95 && i8 <= i16 && i16 <= i32 && worst <= 1e-6,
          fmt("IoU C=8 %.4f, C=16 %.4f (>= 0.95), C=32 %.4f; closed form vs quadrature %.2g (<= 1e-6)", i8, i16,
              i32, worst)};
}

Outcome marching_cubes_fidelity() {
  const int n = 64;
  const double r = 0.6, voxel = 2.0 / n;
  OccupancyGrid g(n, n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double d =
            Vec3(OccupancyGrid::coord(i, n), OccupancyGrid::coord(j, n), OccupancyGrid::coord(k, n)).norm() - r;
        g(i, j, k) = static_cast<float>(std::clamp(0.5 - d / voxel, 0.0, 1.0));
      }
  const TriangleMesh m = marching_cubes(g, 0.5);
  std::size_t within = 0;
  double worst = 0.0;
  for (const Vec3& v : m.vertices) {
    const double e = std::abs(v.norm() - r) / voxel;
    worst = std::max(worst, e);
    within += e <= 1.5;
  }
  return {!m.vertices.empty() && within == m.vertices.size(),
          fmt("%zu/%zu vertices within 1.5 voxels, worst %.3f voxels", within, m.vertices.size(), worst)};
}

struct Subject {
  Camera camera;
  TexturedRender source;
  SubjectContext ctx;
};

const Subject& subject512() {
  static const Subject s = [] {
    const TriangleMesh mesh = normalize_to_unit_box(shapes::sphere_box_union(), 0.1).first;
    const Camera cam =
        Camera::look_at(Vec3(0.3, -0.5, -3.5), Vec3::Zero(), Vec3(0, -1, 0), 0.8, 512, 512, 0.1, 10.0);
    TexturedRender src = render_textured(mesh, cam, wave_texture());
    SubjectContext ctx = prepare_subject(mesh, src.image, cam);
    return Subject{cam, std::move(src), std::move(ctx)};
  }();
  return s;
}

Outcome identity_view() {
  const Subject& s = subject512();
  const FrameResult f = render_frame(s.ctx, {s.camera, "identity", false});
  const double p = psnr(f.image, s.source.image, &f.geometry.mask);
  return {p >= 40.0, fmt("PSNR %.2f dB on the mask at 512x512 (>= 40)", p)};
}

Outcome fusion_properties() {
  const double beta = kDefaultFusionBeta;
  const bool endpoints = fusion_alpha(0.0, beta) == 0.0 && std::abs(fusion_alpha(std::numbers::pi, beta) - beta) <= 1e-15;

  // Convexity and chain on a fused orbit.
  const TriangleMesh mesh = shapes::icosphere(4, 0.8);
  const Camera cam = Camera::look_at(Vec3(0.3, -0.5, -3.5), Vec3::Zero(), Vec3(0, -1, 0), 0.8, 128, 128, 0.1, 10.0);
  RenderConfig cfg;
  cfg.grid_resolution = 64;
  const SubjectContext ctx = prepare_subject(mesh, render_textured(mesh, cam, wave_texture()).image, cam, cfg);
  const std::vector<Camera> cams = orbit_cameras(ctx, parse_orbit("90:90"));
  bool convex = true, chain = true;
  std::optional<FusionState> state;
  for (std::size_t k = 0; k < 20; ++k) {
    const FrameResult plain = render_frame(ctx, {cams[k], "", false});
    const std::optional<FusionState> before = state;
    FrameResult fused = render_frame(ctx, {cams[k], "", true}, state);
    if (before) {
      const FlowZ fz = compute_flow_zmap(plain.geometry.depth, cams[k], before->prev_camera);
      const Image prev = warp(before->prev_image, fz.flow);
      for (std::size_t c = 0; c < plain.image.data().size(); ++c) {
        const float lo = std::min(plain.image.data()[c], prev.data()[c]);
        const float hi = std::max(plain.image.data()[c], prev.data()[c]);
        const float v = fused.image.data()[c];
        const bool untouched = v == plain.image.data()[c];
        convex = convex && (untouched || (v >= lo - 1e-6f && v <= hi + 1e-6f));
      }
    }
    chain = chain && fused.state && fused.state->prev_image == fused.image && fused.state->prev_camera == cams[k];
    state = std::move(fused.state);
  }

  const test::Sequence off = test::render_sequence(ctx, cams, false);
  const test::Sequence on = test::render_sequence(ctx, cams, true);
  const double f_off = test::mean_flicker(off), f_on = test::mean_flicker(on);
  const double v_off = epi_temporal_variance(epi_slice(off.frames, 64));
  const double v_on = epi_temporal_variance(epi_slice(on.frames, 64));
  return {endpoints && convex && chain && f_on < f_off && v_on < v_off,
          fmt("alpha endpoints %s, convex %s, chain %s; flicker on %.5f < off %.5f; EPI variance on %.6f < off %.6f",
              endpoints ? "ok" : "bad", convex ? "ok" : "bad", chain ? "ok" : "bad", f_on, f_off, v_on, v_off)};
}

Outcome loss_suite() {
  std::mt19937 rng(31);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  auto random_image = [&](int w, int h) {
    Image img(w, h);
    for (float& v : img.data()) v = u(rng);
    return img;
  };
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(40, 30), b = random_image(40, 30);
    Mask m(40, 30);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = (i * 7 + t) % 3 == 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x) {
        if (!m(x, y)) continue;
        ++n;
        for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<double>(a.at(x, y, c)) - b.at(x, y, c));
      }
    worst = std::max(worst, std::abs(pixel_loss(a, b, m) - sum / static_cast<double>(n)));
  }
  const TriangleMesh mesh = normalize_to_unit_box(shapes::sphere_box_union(), 0.1).first;
  for (int t = 0; t < 4; ++t) {
    auto yaw = [](double a) {
      return Camera::look_at(Vec3(3.0 * std::sin(a), 0.4, -3.0 * std::cos(a)), Vec3::Zero(), Vec3(0, -1, 0), 0.8,
                             64, 64, 0.1, 10.0);
    };
    const Camera ref = yaw(0.5 * t), mv = yaw(0.5 * t + 0.4);
    const RasterOutput gr = rasterize(mesh, ref), gm = rasterize(mesh, mv);
    const Image a = random_image(64, 64), b = random_image(64, 64);
    const ConsistencyResult r = consistency_loss(a, b, gr.depth, gm.depth, ref, mv);
    const FlowZ fz = compute_flow_zmap(gm.depth, mv, ref);
    const Mask vis = visibility_mask(fz.zmap, fz.flow, gr.depth);
    const Image w = warp(a, gr.mask, fz.flow);
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        if (!vis(x, y)) continue;
        ++n;
        for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<double>(w.at(x, y, c)) - b.at(x, y, c));
      }
    worst = std::max(worst, n ? std::abs(r.value - sum / static_cast<double>(n)) : 1.0);
  }
  for (int t = 0; t < 20; ++t) {
    const LossParts p{u(rng), u(rng), u(rng)};
    worst = std::max(worst, std::abs(total_loss(p) - (100.0 * p.consistency + p.pixel + 0.5 * p.lpips)));
  }
  const double example = total_loss({0.01, 0.2, 0.1});
  return {worst <= 1e-9 && std::abs(example - 1.25) <= 1e-12,
          fmt("worst deviation from brute force %.2g (<= 1e-9); 100*0.01 + 0.2 + 0.5*0.1 = %.12g", worst, example)};
}

Outcome metrics_suite() {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image a(48, 40);
  for (float& v : a.data()) v = u(rng);
  const double s = ssim(a, a);
  Image p(5, 5, 0.5f);
  Image q = p;
  for (int i = 0; i < 12; ++i) q.data()[static_cast<std::size_t>(i) * 5] = 0.75f;  // MSE = 0.0625 * 12 / 75
  const double db = psnr(p, q);
  return {std::abs(s - 1.0) <= 1e-9 && db == 20.0, fmt("SSIM(a,a) = %.12f; PSNR at MSE 0.01 = %.12g dB", s, db)};
}

Outcome performance_budget() {
  const Subject& s = subject512();
  const BenchReport r = bench(s.ctx, parse_orbit("360:120"), 512, 1, true);
  const double flow_ms = r.reproject.p50 / 1000.0;
  return {r.fps_geometric >= 24.0 && flow_ms <= 8.0,
          fmt("geometric path %.1f FPS p50 (>= 24), end-to-end %.1f FPS; flow/Z-map %.2f ms p50 (<= 8); %d thread(s)",
              r.fps_geometric, r.fps_end_to_end, flow_ms, r.threads)};
}

bool malformed_messages_survive(std::string& detail) {
  namespace asio = boost::asio;
  namespace beast = boost::beast;
  using tcp = asio::ip::tcp;
  const TriangleMesh mesh = shapes::icosphere(3, 0.8);
  const Camera cam = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, -1, 0), 0.8, 64, 64, 0.1, 10.0);
  RenderConfig cfg;
  cfg.grid_resolution = 32;
  auto ctx = std::make_shared<const SubjectContext>(
      prepare_subject(mesh, render_textured(mesh, cam, wave_texture()).image, cam, cfg));
  ServiceOptions options;
  options.port = 0;
  options.resolution = 64;
  options.render_threads = 1;
  FrameServer server(ctx, options);
  server.start();
  std::mt19937 rng(99);
  int errors = 0, sent = 0;
  bool alive = true, violation_closed = false;
  auto open = [&](asio::io_context& ioc) {
    auto ws = std::make_unique<beast::websocket::stream<tcp::socket>>(ioc);
    tcp::resolver resolver(ioc);
    asio::connect(ws->next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.port())));
    ws->handshake("127.0.0.1", "/");
    beast::flat_buffer b;
    ws->read(b);  // hello
    return ws;
  };
  auto frame_round_trip = [&](beast::websocket::stream<tcp::socket>& ws) {
    const std::string ok = nlohmann::json{{"type", "camera"}, {"frame_id", 1}, {"camera", to_json(cam)}}.dump();
    ws.text(true);
    ws.write(asio::buffer(ok));
    beast::flat_buffer b;
    ws.read(b);
    const bool header = beast::buffers_to_string(b.data()).find("\"frame\"") != std::string::npos;
    b.clear();
    ws.read(b);
    return header && ws.got_binary();
  };
  try {
    const std::vector<std::string> fixed = {"", "{", "null", "[]", R"({"type":null})", R"({"type":"camera","camera":5})",
                                            R"({"type":"config","fusion_beta":-1})", R"({"type":"reset","x":[)"};
    for (int connection = 0; connection < 3; ++connection) {
      asio::io_context ioc;
      auto ws = open(ioc);
      for (int i = 0; i < 100; ++i) {
        std::string msg;
        const bool binary = i >= static_cast<int>(fixed.size()) && i % 2 == 0;
        if (i < static_cast<int>(fixed.size())) {
          msg = fixed[static_cast<std::size_t>(i)];
        } else {
          msg.resize(1 + rng() % 200);
          // Text frames must be UTF-8; printable ASCII keeps them valid.
          for (auto& c : msg) c = static_cast<char>(binary ? rng() % 256 : 32 + rng() % 95);
        }
        ws->binary(binary);
        ws->write(asio::buffer(msg));
        ++sent;
        beast::flat_buffer b;
        ws->read(b);
        errors += beast::buffers_to_string(b.data()).find("\"error\"") != std::string::npos;
      }
      alive = alive && frame_round_trip(*ws);
      ws->close(beast::websocket::close_code::normal);
    }
    {
      // Invalid UTF-8 in a text frame is a protocol violation: the server
      // ends that session only.
      asio::io_context ioc;
      auto ws = open(ioc);
      ws->text(true);
      ws->write(asio::buffer(std::string("\xff\xfe\xfd")));
      beast::flat_buffer b;
      boost::system::error_code ec;
      ws->read(b, ec);
      violation_closed = static_cast<bool>(ec);
    }
    asio::io_context ioc;
    auto ws = open(ioc);
    alive = alive && frame_round_trip(*ws);
    ws->close(beast::websocket::close_code::normal);
  } catch (const std::exception& e) {
    alive = false;
    detail = e.what();
  }
  server.stop();
  detail = fmt("%d/%d malformed messages answered with errors, sessions %s, invalid UTF-8 %s", errors, sent,
               alive ? "kept serving" : ("failed: " + detail).c_str(),
               violation_closed ? "closed only its session" : "was not rejected");
  return alive && errors == sent && violation_closed;
}

Outcome robustness() {
  const TriangleMesh mesh = shapes::icosphere(3, 0.8);
  const Camera cam = Camera::look_at(Vec3(0.3, -0.5, -3.5), Vec3::Zero(), Vec3(0, -1, 0), 0.8, 64, 64, 0.1, 10.0);
  RenderConfig cfg;
  cfg.grid_resolution = 32;
  const SubjectContext ctx = prepare_subject(mesh, render_textured(mesh, cam, wave_texture()).image, cam, cfg);
  const std::vector<Camera> cams = orbit_cameras(ctx, parse_orbit("360:100"));
  std::optional<FusionState> state;
  std::size_t rss10 = 0;
  for (int k = 0; k < 1000; ++k) {
    FrameResult f = render_frame(ctx, {cams[static_cast<std::size_t>(k) % cams.size()], "leak", true}, state);
    state = std::move(f.state);
    if (k == 9) rss10 = current_rss_bytes();
  }
  const double growth = static_cast<double>(current_rss_bytes()) / static_cast<double>(rss10) - 1.0;
  std::string service;
  const bool survived = malformed_messages_survive(service);
  return {rss10 > 0 && growth <= 0.05 && survived,
          fmt("RSS growth over 1000 frames %.2f%% (<= 5%%); %s", 100.0 * growth, service.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"geometry self-consistency", geometry_self_consistency},
      {"visibility oracle equivalence", visibility_oracle},
      {"FOF round trip", fof_round_trip},
      {"marching cubes fidelity", marching_cubes_fidelity},
      {"identity-view reproduction", identity_view},
      {"fusion properties", fusion_properties},
      {"loss suite", loss_suite},
      {"metrics", metrics_suite},
      {"performance budget", performance_budget},
      {"robustness", robustness},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
