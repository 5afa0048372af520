#include "nvs/config.h"

#include "nvs/error.h"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nvs {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::ParseError, key + ": not a number: '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorCode::ParseError, key + ": not a boolean: '" + value + "'");
}

Eigen::Vector3f parse_color(const std::string& key, const std::string& value) {
  Eigen::Vector3f c;
  if (!value.empty() && value.front() == '#') {
    if (value.size() != 7) throw Error(ErrorCode::ParseError, key + ": expected #rrggbb");
    for (int i = 0; i < 3; ++i) {
      unsigned v = 0;
      const char* b = value.data() + 1 + 2 * i;
      const auto [ptr, ec] = std::from_chars(b, b + 2, v, 16);
      if (ec != std::errc() || ptr != b + 2) throw Error(ErrorCode::ParseError, key + ": bad hex color");
      c[i] = static_cast<float>(v) / 255.0f;
    }
    return c;
  }
  std::stringstream ss(value);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    if (i == 3) throw Error(ErrorCode::ParseError, key + ": expected three components");
    c[i++] = static_cast<float>(parse_number<double>(key, trim(part)));
  }
  if (i != 3) throw Error(ErrorCode::ParseError, key + ": expected three components");
  return c;
}

// Full-line comments start with '#' or ';'. Inline comments start at a '#'
// or ';' preceded by whitespace, except where the value itself begins
// (a "#rrggbb" color).
std::string strip_comment(const std::string& line) {
  const std::string t = trim(line);
  if (t.empty() || t.front() == '#' || t.front() == ';') return {};
  const auto eq = line.find('=');
  std::size_t value_start = std::string::npos;
  if (eq != std::string::npos) value_start = line.find_first_not_of(" \t", eq + 1);
  for (std::size_t i = 1; i < line.size(); ++i) {
    if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t') && i != value_start) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

void RenderConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (fof_channels < 1 || fof_channels > 1024) fail("fof.channels must lie in [1, 1024]");
  if (feature_channels < 1 || feature_channels > 1024) fail("render.feature_channels must lie in [1, 1024]");
  if (!(fusion_beta >= 0.0 && fusion_beta <= 1.0)) fail("fusion.beta must lie in [0, 1]");
  if (!(visibility_lambda > 0.0 && visibility_lambda < 1.0)) fail("visibility.lambda must lie in (0, 1)");
  if (!(background_color.minCoeff() >= 0.0f && background_color.maxCoeff() <= 1.0f)) {
    fail("render.background_color components must lie in [0, 1]");
  }
  if (resolution < 8 || resolution > 8192) fail("render.resolution must lie in [8, 8192]");
  if (grid_resolution < 8 || grid_resolution > 1024) fail("fof.grid_resolution must lie in [8, 1024]");
}

void apply_config_value(RenderConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = unquote(trim(raw));
  if (key == "fof.channels") cfg.fof_channels = parse_number<int>(key, value);
  else if (key == "render.feature_channels") cfg.feature_channels = parse_number<int>(key, value);
  else if (key == "fusion.beta") cfg.fusion_beta = parse_number<double>(key, value);
  else if (key == "fusion.invert_alpha") cfg.fusion_invert_alpha = parse_bool(key, value);
  else if (key == "visibility.lambda") cfg.visibility_lambda = parse_number<double>(key, value);
  else if (key == "render.background_color") cfg.background_color = parse_color(key, value);
  else if (key == "render.resolution") cfg.resolution = parse_number<int>(key, value);
  else if (key == "fof.grid_resolution") cfg.grid_resolution = parse_number<int>(key, value);
  else if (key == "render.seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
}

RenderConfig parse_config(const std::string& text, RenderConfig cfg) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_comment(line);
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw Error(ErrorCode::ParseError, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto pos = line.find('=');
      if (pos == std::string::npos) throw Error(ErrorCode::ParseError, "expected key = value");
      std::string key = trim(line.substr(0, pos));
      if (key.empty()) throw Error(ErrorCode::ParseError, "empty key");
      if (!section.empty()) key = section + "." + key;
      apply_config_value(cfg, key, line.substr(pos + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RenderConfig load_config(const std::string& path, RenderConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_config_text(const RenderConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "fof.channels = " << cfg.fof_channels << "\n"
      << "fof.grid_resolution = " << cfg.grid_resolution << "\n"
      << "render.feature_channels = " << cfg.feature_channels << "\n"
      << "render.resolution = " << cfg.resolution << "\n"
      << "render.seed = " << cfg.seed << "\n"
      << "render.background_color = " << cfg.background_color.x() << "," << cfg.background_color.y() << ","
      << cfg.background_color.z() << "\n"
      << "fusion.beta = " << cfg.fusion_beta << "\n"
      << "fusion.invert_alpha = " << (cfg.fusion_invert_alpha ? "true" : "false") << "\n"
      << "visibility.lambda = " << cfg.visibility_lambda << "\n";
  return out.str();
}

}  // namespace nvs
