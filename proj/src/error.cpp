#include "nvs/error.h"

namespace nvs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmbedderUnavailable: return "EmbedderUnavailable";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::RowOutOfRange: return "RowOutOfRange";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::AssetError: return "AssetError";
    case ErrorCode::RenderError: return "RenderError";
  }
  return "Unknown";
}

}  // namespace nvs
