#include "nvs/service.h"

#include "nvs/error.h"
#include "nvs/image_io.h"

#include <boost/asio/co_spawn.hpp>
#include <boost/asio/detached.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/redirect_error.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/thread_pool.hpp>
#include <boost/asio/use_awaitable.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <list>
#include <mutex>
#include <sstream>

namespace nvs {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

std::pair<std::string, unsigned short> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::ParseError, "bind address must be host:port, got '" + text + "'");
  }
  const std::string port_text = text.substr(colon + 1);
  if (!std::all_of(port_text.begin(), port_text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw Error(ErrorCode::ParseError, "bind port must be numeric, got '" + port_text + "'");
  }
  const long port = std::strtol(port_text.c_str(), nullptr, 10);
  if (port_text.size() > 5 || port > 65535) {
    throw Error(ErrorCode::ParseError, "bind port out of range: " + port_text);
  }
  std::string host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return {host, static_cast<unsigned short>(port)};
}

ServiceOptions apply_env_overrides(ServiceOptions options) {
  if (const char* bind = std::getenv("NVS_BIND"); bind != nullptr && *bind != '\0') {
    std::tie(options.host, options.port) = parse_bind(bind);
  }
  if (const char* res = std::getenv("NVS_RESOLUTION"); res != nullptr && *res != '\0') {
    char* end = nullptr;
    const long value = std::strtol(res, &end, 10);
    if (end == res || *end != '\0' || value <= 0 || value > 16384) {
      throw Error(ErrorCode::ParseError, std::string("NVS_RESOLUTION must be a positive integer, got '") + res + "'");
    }
    options.resolution = static_cast<int>(value);
  }
  return options;
}

namespace {

enum class PayloadFormat { Png, Rgb8, F32 };

const char* format_name(PayloadFormat f) {
  switch (f) {
    case PayloadFormat::Png: return "png";
    case PayloadFormat::Rgb8: return "rgb8";
    case PayloadFormat::F32: return "f32";
  }
  return "png";
}

std::optional<PayloadFormat> parse_format(const std::string& s) {
  if (s == "png") return PayloadFormat::Png;
  if (s == "rgb8") return PayloadFormat::Rgb8;
  if (s == "f32") return PayloadFormat::F32;
  return std::nullopt;
}

std::vector<std::uint8_t> encode_payload(const Image& image, PayloadFormat format) {
  switch (format) {
    case PayloadFormat::Png: return encode_png(image);
    case PayloadFormat::Rgb8: return encode_rgb8(image);
    case PayloadFormat::F32: {
      const auto data = image.data();
      std::vector<std::uint8_t> out(data.size() * sizeof(float));
      std::memcpy(out.data(), data.data(), out.size());
      return out;
    }
  }
  return {};
}

struct Event {
  enum class Kind { Camera, Reset, Config, Error } kind;
  Camera camera;  // meaningful for Camera only
  std::int64_t frame_id = 0;
  bool fuse = false;
  std::optional<double> beta = std::nullopt;
  std::optional<bool> invert_alpha = std::nullopt;
  std::optional<PayloadFormat> format = std::nullopt;
  std::string message = {};
};

struct Rendered {
  FrameResult result;
  std::vector<std::uint8_t> payload;
};

asio::awaitable<Rendered> render_encoded(std::shared_ptr<const SubjectContext> ctx, FrameRequest request,
                                         std::optional<FusionState> prior, PayloadFormat format) {
  Rendered r{render_frame(*ctx, request, prior), {}};
  r.payload = encode_payload(r.result.image, format);
  co_return r;
}

// Queue entries beyond this are discarded; camera requests never count twice
// in a row because they coalesce.
constexpr std::size_t kMaxQueuedEvents = 64;

struct Session {
  explicit Session(tcp::socket socket) : ws(std::move(socket)), wake(ws.get_executor()) {
    wake.expires_at(asio::steady_timer::time_point::max());
  }

  websocket::stream<beast::tcp_stream> ws;
  asio::steady_timer wake;
  std::deque<Event> events;
  std::int64_t dropped = 0;
  bool closed = false;

  void push(Event e) {
    if (e.kind == Event::Kind::Camera && !events.empty() && events.back().kind == Event::Kind::Camera) {
      events.back() = std::move(e);
      ++dropped;
    } else if (events.size() < kMaxQueuedEvents) {
      events.push_back(std::move(e));
    } else {
      ++dropped;
    }
    wake.cancel();
  }
};

Event error_event(std::string message) {
  Event e{Event::Kind::Error, Camera(1, 1, 0, 0, Mat3::Identity(), Vec3::Zero(), 1, 1, 0.1, 1.0)};
  e.message = std::move(message);
  return e;
}

/// Parses one client text message into an event; malformed input becomes an
/// Error event.
Event parse_message(const std::string& text, int width, int height) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    return error_event(std::string("malformed JSON: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    return error_event("message must be an object with a string 'type'");
  }
  const std::string type = j["type"].get<std::string>();
  try {
    if (type == "camera") {
      if (!j.contains("camera") || !j["camera"].is_object()) return error_event("camera message needs a 'camera' object");
      Camera cam = camera_from_json(j["camera"]);
      if (cam.width() != width || cam.height() != height) cam = cam.resized(width, height);
      Event e{Event::Kind::Camera, cam};
      if (j.contains("frame_id")) {
        if (!j["frame_id"].is_number_integer()) return error_event("frame_id must be an integer");
        e.frame_id = j["frame_id"].get<std::int64_t>();
      }
      if (j.contains("fuse")) {
        if (!j["fuse"].is_boolean()) return error_event("fuse must be a boolean");
        e.fuse = j["fuse"].get<bool>();
      }
      return e;
    }
    if (type == "reset") {
      Event e = error_event("");
      e.kind = Event::Kind::Reset;
      return e;
    }
    if (type == "config") {
      Event e = error_event("");
      e.kind = Event::Kind::Config;
      if (j.contains("fusion_beta")) {
        if (!j["fusion_beta"].is_number()) return error_event("fusion_beta must be a number");
        const double beta = j["fusion_beta"].get<double>();
        if (!(beta >= 0.0 && beta <= 1.0)) return error_event("fusion_beta must lie in [0, 1]");
        e.beta = beta;
      }
      if (j.contains("invert_alpha")) {
        if (!j["invert_alpha"].is_boolean()) return error_event("invert_alpha must be a boolean");
        e.invert_alpha = j["invert_alpha"].get<bool>();
      }
      if (j.contains("format")) {
        if (!j["format"].is_string()) return error_event("format must be a string");
        e.format = parse_format(j["format"].get<std::string>());
        if (!e.format) return error_event("format must be one of png, rgb8, f32");
      }
      return e;
    }
  } catch (const Error& ex) {
    return error_event(ex.what());
  } catch (const json::exception& ex) {
    return error_event(std::string("bad message: ") + ex.what());
  }
  return error_event("unknown message type '" + type + "'");
}

std::string mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

}  // namespace

struct FrameServer::Impl {
  Impl(std::shared_ptr<const SubjectContext> s, ServiceOptions o)
      : subject(std::move(s)),
        options(std::move(o)),
        pool(static_cast<std::size_t>(options.render_threads > 0
                                          ? options.render_threads
                                          : std::max(1u, std::thread::hardware_concurrency()))),
        acceptor(ioc),
        signals(ioc) {
    if (!subject) throw Error(ErrorCode::InvalidArgument, "service needs a prepared subject");
    if (options.resolution <= 0) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
    std::tie(width, height) = frame_size(subject->source_camera, options.resolution);
    if (!options.static_dir.empty()) {
      std::error_code fec;
      if (!std::filesystem::is_directory(options.static_dir, fec)) {
        throw Error(ErrorCode::AssetError, "static directory not found: " + options.static_dir);
      }
      static_root = std::filesystem::canonical(options.static_dir, fec);
      if (fec) throw Error(ErrorCode::AssetError, "static directory unreadable: " + options.static_dir);
    }
    boost::system::error_code ec;
    const std::string host = options.host == "localhost" ? "127.0.0.1" : options.host;
    const auto address = asio::ip::make_address(host, ec);
    if (ec) throw Error(ErrorCode::BindError, "invalid bind host '" + options.host + "': " + ec.message());
    const tcp::endpoint endpoint(address, options.port);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error(ErrorCode::BindError,
                  "cannot listen on " + options.host + ":" + std::to_string(options.port) + ": " + ec.message());
    }
    bound_port = acceptor.local_endpoint().port();
  }

  asio::awaitable<void> accept_loop() {
    for (;;) {
      boost::system::error_code ec;
      tcp::socket socket = co_await acceptor.async_accept(asio::redirect_error(asio::use_awaitable, ec));
      if (ec) {
        if (!acceptor.is_open()) co_return;
        continue;
      }
      asio::co_spawn(ioc, handle_connection(std::move(socket)), asio::detached);
    }
  }

  asio::awaitable<void> handle_connection(tcp::socket socket) {
    auto session = std::make_shared<Session>(std::move(socket));
    sessions.push_back(session);
    try {
      beast::flat_buffer buffer;
      http::request<http::string_body> request;
      co_await http::async_read(beast::get_lowest_layer(session->ws), buffer, request, asio::use_awaitable);
      if (!websocket::is_upgrade(request)) {
        co_await serve_static(beast::get_lowest_layer(session->ws), request);
        co_return;
      }
      session->ws.read_message_max(options.max_message_bytes);
      co_await session->ws.async_accept(request, asio::use_awaitable);
    } catch (const std::exception&) {
      co_return;
    }
    asio::co_spawn(ioc, frame_loop(session), asio::detached);
    co_await read_loop(session);
  }

  asio::awaitable<void> serve_static(beast::tcp_stream& stream, const http::request<http::string_body>& request) {
    http::response<http::string_body> response;
    response.version(request.version());
    response.keep_alive(false);
    response.set(http::field::server, "nvs");
    std::string target(request.target());
    target = target.substr(0, target.find_first_of("?#"));
    std::filesystem::path file;
    bool found = false;
    if (!static_root.empty() && request.method() == http::verb::get && !target.empty() && target.front() == '/' &&
        target.find("..") == std::string::npos && target.find('\\') == std::string::npos) {
      if (target.back() == '/') target += "index.html";
      std::error_code fec;
      file = std::filesystem::weakly_canonical(static_root / target.substr(1), fec);
      const auto rel = file.lexically_relative(static_root);
      found = !fec && !rel.empty() && *rel.begin() != ".." && std::filesystem::is_regular_file(file, fec);
    }
    if (found) {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      response.result(http::status::ok);
      response.set(http::field::content_type, mime_type(file));
      response.body() = body.str();
    } else {
      response.result(http::status::not_found);
      response.set(http::field::content_type, "text/plain");
      response.body() = "not found\n";
    }
    response.prepare_payload();
    boost::system::error_code ec;
    co_await http::async_write(stream, response, asio::redirect_error(asio::use_awaitable, ec));
    stream.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  asio::awaitable<void> read_loop(std::shared_ptr<Session> session) {
    for (;;) {
      beast::flat_buffer buffer;
      boost::system::error_code ec;
      co_await session->ws.async_read(buffer, asio::redirect_error(asio::use_awaitable, ec));
      if (ec) break;
      if (!session->ws.got_text()) {
        session->push(error_event("binary client messages are not accepted"));
        continue;
      }
      session->push(parse_message(beast::buffers_to_string(buffer.data()), width, height));
    }
    session->closed = true;
    session->wake.cancel();
  }

  asio::awaitable<void> send_text(Session& session, const std::string& text) {
    session.ws.text(true);
    co_await session.ws.async_write(asio::buffer(text), asio::use_awaitable);
  }

  asio::awaitable<void> render_and_send(Session& session, const Event& event, std::optional<FusionState>& state,
                                        double beta, bool invert_alpha, PayloadFormat format, std::int64_t& index) {
    if (state) {
      state->beta = beta;
      state->invert_alpha = invert_alpha;
    }
    const FrameRequest request{event.camera, "", event.fuse};
    std::optional<Rendered> rendered;
    std::string failure;
    try {
      rendered = co_await asio::co_spawn(pool, render_encoded(subject, request, state, format), asio::use_awaitable);
    } catch (const std::exception& ex) {
      failure = ex.what();
    }
    if (!rendered) {
      const std::string reply = json{{"type", "error"}, {"message", "render failed: " + failure}}.dump();
      co_await send_text(session, reply);
      co_return;
    }
    state = std::move(rendered->result.state);
    if (state) {
      state->beta = beta;
      state->invert_alpha = invert_alpha;
    }
    const std::string header = json{{"type", "frame"},
                                    {"frame_id", event.frame_id},
                                    {"index", index++},
                                    {"width", rendered->result.image.width()},
                                    {"height", rendered->result.image.height()},
                                    {"format", format_name(format)},
                                    {"fused", event.fuse},
                                    {"dropped", session.dropped},
                                    {"timing", rendered->result.timing.to_json()}}
                                   .dump();
    co_await send_text(session, header);
    session.ws.binary(true);
    co_await session.ws.async_write(asio::buffer(rendered->payload), asio::use_awaitable);
  }

  /// The only writer of a session: hello, then replies to queued events in order.
  asio::awaitable<void> frame_loop(std::shared_ptr<Session> session) {
    double beta = subject->config.fusion_beta;
    bool invert_alpha = subject->config.fusion_invert_alpha;
    PayloadFormat format = PayloadFormat::Png;
    std::optional<FusionState> state;
    std::int64_t index = 0;
    try {
      json hello = {{"type", "hello"},
                    {"width", width},
                    {"height", height},
                    {"format", format_name(format)},
                    {"fusion_beta", beta},
                    {"invert_alpha", invert_alpha},
                    {"source_camera", to_json(subject->source_camera.resized(width, height))},
                    {"pivot", {subject->pivot.x(), subject->pivot.y(), subject->pivot.z()}}};
      const std::string hello_text = hello.dump();
      co_await send_text(*session, hello_text);
      while (!session->closed) {
        if (session->events.empty()) {
          boost::system::error_code ec;
          session->wake.expires_at(asio::steady_timer::time_point::max());
          co_await session->wake.async_wait(asio::redirect_error(asio::use_awaitable, ec));
          continue;
        }
        Event event = std::move(session->events.front());
        session->events.pop_front();
        if (event.kind == Event::Kind::Camera) {
          co_await render_and_send(*session, event, state, beta, invert_alpha, format, index);
          continue;
        }
        std::string reply;
        if (event.kind == Event::Kind::Error) {
          reply = json{{"type", "error"}, {"message", event.message}}.dump();
        } else if (event.kind == Event::Kind::Reset) {
          state.reset();
          reply = json{{"type", "ack"}, {"of", "reset"}}.dump();
        } else {
          if (event.beta) beta = *event.beta;
          if (event.invert_alpha) invert_alpha = *event.invert_alpha;
          if (event.format) format = *event.format;
          reply = json{{"type", "ack"},
                       {"of", "config"},
                       {"fusion_beta", beta},
                       {"invert_alpha", invert_alpha},
                       {"format", format_name(format)}}
                      .dump();
        }
        co_await send_text(*session, reply);
      }
    } catch (const std::exception&) {
      // Write failures mean the peer is gone; the read loop ends the session.
    }
    session->closed = true;
    boost::system::error_code ec;
    beast::get_lowest_layer(session->ws).socket().close(ec);
  }

  void close_all() {
    boost::system::error_code ec;
    acceptor.close(ec);
    signals.cancel(ec);
    for (auto& weak : sessions) {
      if (auto s = weak.lock()) {
        s->closed = true;
        s->wake.cancel();
        beast::get_lowest_layer(s->ws).socket().close(ec);
      }
    }
    sessions.clear();
  }

  void run(bool handle_signals) {
    if (handle_signals) {
      signals.add(SIGINT);
      signals.add(SIGTERM);
      signals.async_wait([this](const boost::system::error_code& ec, int) {
        if (!ec) close_all();
      });
    }
    asio::co_spawn(ioc, accept_loop(), asio::detached);
    ioc.run();
  }

  std::shared_ptr<const SubjectContext> subject;
  ServiceOptions options;
  int width = 0;
  int height = 0;
  std::filesystem::path static_root;
  asio::io_context ioc{1};
  asio::thread_pool pool;
  tcp::acceptor acceptor;
  asio::signal_set signals;
  std::list<std::weak_ptr<Session>> sessions;
  unsigned short bound_port = 0;
  std::thread worker;
};

FrameServer::FrameServer(std::shared_ptr<const SubjectContext> subject, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(subject), std::move(options))) {}

FrameServer::~FrameServer() { stop(); }

unsigned short FrameServer::port() const { return impl_->bound_port; }

void FrameServer::run(bool handle_signals) { impl_->run(handle_signals); }

void FrameServer::start() {
  if (impl_->worker.joinable()) return;
  impl_->worker = std::thread([this] { impl_->run(false); });
}

void FrameServer::stop() {
  if (!impl_) return;
  asio::post(impl_->ioc, [impl = impl_.get()] { impl->close_all(); });
  if (impl_->worker.joinable()) impl_->worker.join();
  impl_->pool.join();
}

}  // namespace nvs
