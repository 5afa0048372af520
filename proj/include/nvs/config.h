#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace nvs {

struct RenderConfig {
  int fof_channels = 16;
  int feature_channels = 32;
  double fusion_beta = 0.8;
  bool fusion_invert_alpha = false;
  double visibility_lambda = 0.02;
  Eigen::Vector3f background_color = Eigen::Vector3f::Zero();
  /// Square output resolution of rendered frames.
  int resolution = 512;
  /// Column resolution of the occupancy grid handed to marching cubes.
  int grid_resolution = 128;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument when a value is out of range.
  void validate() const;
};

/// Parses `key = value` lines. `[section]` headers prefix the keys that
/// follow with "section."; '#' and ';' start comments. Keys:
/// fof.channels, render.feature_channels, fusion.beta, fusion.invert_alpha,
/// visibility.lambda, render.background_color ("r,g,b" in [0, 1] or
/// "#rrggbb"), render.resolution, fof.grid_resolution, render.seed.
/// Unknown keys and malformed values throw ParseError with the line number.
RenderConfig parse_config(const std::string& text, RenderConfig base = {});
RenderConfig load_config(const std::string& path, RenderConfig base = {});

/// Applies one `key = value` pair.
void apply_config_value(RenderConfig& cfg, const std::string& key, const std::string& value);

std::string to_config_text(const RenderConfig& cfg);

}  // namespace nvs
