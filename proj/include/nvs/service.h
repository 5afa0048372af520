#pragma once

#include "nvs/pipeline.h"

#include <cstddef>
#include <memory>
#include <string>
#include <thread>

namespace nvs {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  unsigned short port = 9000;
  /// Served over plain HTTP GET when non-empty.
  std::string static_dir;
  /// Square frame resolution (aspect of the source camera is kept).
  int resolution = 512;
  /// Threads rendering frames; 0 uses the hardware concurrency.
  int render_threads = 0;
  std::size_t max_message_bytes = 1 << 20;
};

/// Applies NVS_BIND ("host:port") and NVS_RESOLUTION from the environment.
/// Throws ParseError for malformed values.
ServiceOptions apply_env_overrides(ServiceOptions options);

/// "host:port" -> (host, port). Throws ParseError.
std::pair<std::string, unsigned short> parse_bind(const std::string& text);

// WebSocket protocol (text messages are JSON):
//   server on connect: {"type":"hello","width","height","format","fusion_beta","source_camera","pivot"}
//   client: {"type":"camera","frame_id":n,"camera":{Camera JSON},"fuse":bool}
//           {"type":"reset"}
//           {"type":"config","fusion_beta":x,"invert_alpha":b,"format":"png"|"rgb8"|"f32"}
//   server: {"type":"frame","frame_id":n,"index":k,"width","height","format","dropped","timing":{...}}
//           followed by one binary message with the image;
//           {"type":"ack","of":"reset"|"config"}; {"type":"error","message":...}
// Camera requests arriving while a frame renders coalesce to the latest one;
// at most one request waits behind the frame in flight.
class FrameServer {
 public:
  /// Binds immediately. Throws BindError.
  FrameServer(std::shared_ptr<const SubjectContext> subject, ServiceOptions options);
  ~FrameServer();
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  unsigned short port() const;

  /// Serves on the calling thread until stop() or SIGINT/SIGTERM when
  /// `handle_signals` is set.
  void run(bool handle_signals = false);
  /// Serves on a background thread.
  void start();
  /// Closes the listener and every session; joins the background thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nvs
