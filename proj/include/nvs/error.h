#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nvs {

enum class ErrorCode {
  InvalidArgument,
  DegeneratePoint,
  InvalidDepth,
  ParseError,
  EmptyMesh,
  ResolutionTooLow,
  ChannelMismatch,
  SizeMismatch,
  EmptyMask,
  EmbedderUnavailable,
  ImageTooSmall,
  RowOutOfRange,
  IoError,
  BindError,
  AssetError,
  RenderError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (CLI, service) can map it to an exit status or protocol reply.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nvs
