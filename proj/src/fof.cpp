#include "nvs/fof.h"

#include "binary_io.h"
#include "nvs/raster.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace nvs {

namespace {

void check_channels(int channels) {
  if (channels < 1) throw Error(ErrorCode::InvalidArgument, "FOF needs at least one channel");
}

// Basis values at the nz midpoints, scaled by the quadrature weight 2 / nz.
std::vector<double> weighted_basis(int nz, int channels) {
  std::vector<double> table(static_cast<std::size_t>(nz) * channels);
  for (int s = 0; s < nz; ++s) {
    const double z = OccupancyGrid::coord(s, nz);
    for (int k = 0; k < channels; ++k) table[static_cast<std::size_t>(s) * channels + k] = fof_basis(k, z) * 2.0 / nz;
  }
  return table;
}

template <typename T>
void add_interval_impl(double a, double b, std::span<T> coeffs) {
  a = std::clamp(a, -1.0, 1.0);
  b = std::clamp(b, -1.0, 1.0);
  if (!(b > a) || coeffs.empty()) return;
  coeffs[0] += static_cast<T>(b - a);
  for (std::size_t k = 1; k < coeffs.size(); ++k) {
    const double w = static_cast<double>(k) * std::numbers::pi / 2.0;
    coeffs[k] += static_cast<T>((std::sin(w * (b + 1.0)) - std::sin(w * (a + 1.0))) / w);
  }
}

}  // namespace

FofImage::FofImage(int width, int height, int channels) : MultiChannelMap(width, height, channels, 0.0f) {
  check_channels(channels);
}

OccupancyGrid::OccupancyGrid(int nx, int ny, int nz, float fill) : nx_(nx), ny_(ny), nz_(nz) {
  if (nx < 2 || ny < 2 || nz < 2) throw Error(ErrorCode::InvalidArgument, "occupancy grid needs >= 2 samples per axis");
  data_.assign(static_cast<std::size_t>(nx) * ny * nz, fill);
}

double fof_basis(int k, double z) { return std::cos(k * std::numbers::pi * (z + 1.0) / 2.0); }

FofImage fof_encode(const OccupancyGrid& grid, int channels) {
  return fof_encode(grid.nx(), grid.ny(), grid.nz(), channels, [&](int i, int j, double z) {
    // Exact midpoint index: z was produced by OccupancyGrid::coord.
    const int k = static_cast<int>(std::lround((z + 1.0) * grid.nz() / 2.0 - 0.5));
    return static_cast<double>(grid(i, j, k));
  });
}

FofImage fof_encode(int width, int height, int nz, int channels, const std::function<double(int, int, double)>& sampler) {
  check_channels(channels);
  if (nz < 2 * channels) {
    throw Error(ErrorCode::ResolutionTooLow,
                "nz = " + std::to_string(nz) + " cannot resolve " + std::to_string(channels) + " coefficients");
  }
  FofImage fof(width, height, channels);
  const std::vector<double> table = weighted_basis(nz, channels);
  std::vector<double> zs(nz);
  for (int s = 0; s < nz; ++s) zs[s] = OccupancyGrid::coord(s, nz);
  // The sampler may not be thread-safe, so this loop stays serial.
  std::vector<double> acc(channels);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int s = 0; s < nz; ++s) {
        const double f = sampler(i, j, zs[s]);
        if (f == 0.0) continue;
        const double* row = table.data() + static_cast<std::size_t>(s) * channels;
        for (int k = 0; k < channels; ++k) acc[k] += f * row[k];
      }
      float* out = fof.pixel(i, j);
      for (int k = 0; k < channels; ++k) out[k] = static_cast<float>(acc[k]);
    }
  }
  return fof;
}

void add_interval_coefficients(double a, double b, std::span<float> coeffs) { add_interval_impl(a, b, coeffs); }
void add_interval_coefficients(double a, double b, std::span<double> coeffs) { add_interval_impl(a, b, coeffs); }

FofImage fof_encode_intervals(int width, int height, int channels,
                              const std::function<std::vector<std::pair<double, double>>(int, int)>& intervals) {
  FofImage fof(width, height, channels);
  std::vector<double> acc(channels);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const auto& [a, b] : intervals(i, j)) add_interval_coefficients(a, b, std::span<double>(acc));
      float* out = fof.pixel(i, j);
      for (int k = 0; k < channels; ++k) out[k] = static_cast<float>(acc[k]);
    }
  }
  return fof;
}

FofImage fof_encode_mesh(const TriangleMesh& normalized_mesh, int width, int height, int channels) {
  if (normalized_mesh.empty()) throw Error(ErrorCode::EmptyMesh, "cannot encode an empty mesh");
  check_channels(channels);
  const DepthLayers layers = rasterize_layers_ortho(normalized_mesh, width, height);
  FofImage fof(width, height, channels);
#pragma omp parallel
  {
    std::vector<double> acc(channels);
#pragma omp for schedule(static)
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        const std::span<const float> z = layers.at(i, j);
        if (z.size() < 2) continue;
        const std::span<const std::int8_t> facing = layers.facing(i, j);
        std::fill(acc.begin(), acc.end(), 0.0);
        int net = 0;
        for (std::int8_t f : facing) net += f;
        if (net == 0) {
          // Nonzero winding: overlapping closed parts are united.
          int winding = 0;
          double start = 0.0;
          for (std::size_t s = 0; s < z.size(); ++s) {
            const int before = winding;
            winding += facing[s];
            if (before <= 0 && winding > 0) start = z[s];
            if (before > 0 && winding <= 0) add_interval_coefficients(start, z[s], std::span<double>(acc));
          }
        } else {
          // Open or inconsistently wound surface: parity pairs.
          for (std::size_t s = 0; s + 1 < z.size(); s += 2) {
            add_interval_coefficients(z[s], z[s + 1], std::span<double>(acc));
          }
        }
        float* out = fof.pixel(i, j);
        for (int k = 0; k < channels; ++k) out[k] = static_cast<float>(acc[k]);
      }
    }
  }
  return fof;
}

OccupancyGrid fof_decode(const FofImage& fof, int nz) {
  if (nz < 2) throw Error(ErrorCode::InvalidArgument, "decode needs nz >= 2");
  const int channels = fof.channels();
  std::vector<float> table(static_cast<std::size_t>(nz) * channels);
  for (int s = 0; s < nz; ++s) {
    const double z = OccupancyGrid::coord(s, nz);
    for (int k = 0; k < channels; ++k) {
      table[static_cast<std::size_t>(s) * channels + k] = static_cast<float>(k == 0 ? 0.5 : fof_basis(k, z));
    }
  }
  OccupancyGrid grid(fof.width(), fof.height(), nz);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < fof.height(); ++j) {
    for (int i = 0; i < fof.width(); ++i) {
      const float* c = fof.pixel(i, j);
      std::span<float> col = grid.column(i, j);
      for (int s = 0; s < nz; ++s) {
        const float* row = table.data() + static_cast<std::size_t>(s) * channels;
        float v = 0.0f;
        for (int k = 0; k < channels; ++k) v += c[k] * row[k];
        col[s] = v;
      }
    }
  }
  return grid;
}

FofImage resample(const FofImage& fof, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "resample target must be non-empty");
  const int channels = fof.channels();
  if (fof.same_size(width, height)) return fof;
  FofImage out(width, height, channels);
  if (fof.width() % width == 0 && fof.height() % height == 0) {
    const int fx = fof.width() / width, fy = fof.height() / height;
    const float norm = 1.0f / static_cast<float>(fx * fy);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        float* o = out.pixel(i, j);
        for (int y = j * fy; y < (j + 1) * fy; ++y) {
          for (int x = i * fx; x < (i + 1) * fx; ++x) {
            const float* s = fof.pixel(x, y);
            for (int k = 0; k < channels; ++k) o[k] += s[k];
          }
        }
        for (int k = 0; k < channels; ++k) o[k] *= norm;
      }
    }
    return out;
  }
  const double sx = static_cast<double>(fof.width()) / width;
  const double sy = static_cast<double>(fof.height()) / height;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < height; ++j) {
    const double v = std::clamp((j + 0.5) * sy - 0.5, 0.0, fof.height() - 1.0);
    const int y0 = static_cast<int>(v);
    const int y1 = std::min(y0 + 1, fof.height() - 1);
    const float wy = static_cast<float>(v - y0);
    for (int i = 0; i < width; ++i) {
      const double u = std::clamp((i + 0.5) * sx - 0.5, 0.0, fof.width() - 1.0);
      const int x0 = static_cast<int>(u);
      const int x1 = std::min(x0 + 1, fof.width() - 1);
      const float wx = static_cast<float>(u - x0);
      float* o = out.pixel(i, j);
      const float *a = fof.pixel(x0, y0), *b = fof.pixel(x1, y0), *c = fof.pixel(x0, y1), *d = fof.pixel(x1, y1);
      for (int k = 0; k < channels; ++k) {
        o[k] = (1 - wy) * ((1 - wx) * a[k] + wx * b[k]) + wy * ((1 - wx) * c[k] + wx * d[k]);
      }
    }
  }
  return out;
}

void save_fof(const FofImage& fof, std::ostream& out) {
  out.write("FOF1", 4);
  detail::write_u32(out, static_cast<std::uint32_t>(fof.width()));
  detail::write_u32(out, static_cast<std::uint32_t>(fof.height()));
  detail::write_u32(out, static_cast<std::uint32_t>(fof.channels()));
  detail::write_f32s(out, fof.data());
  if (!out) throw Error(ErrorCode::IoError, "failed writing FOF data");
}

void save_fof(const FofImage& fof, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  save_fof(fof, out);
}

FofImage load_fof(std::istream& in) {
  detail::expect_magic(in, "FOF1", "FOF");
  const std::uint32_t w = detail::read_u32(in, "FOF");
  const std::uint32_t h = detail::read_u32(in, "FOF");
  const std::uint32_t c = detail::read_u32(in, "FOF");
  detail::check_dims(w, h, c, "FOF");
  FofImage fof(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  detail::read_f32s(in, fof.data(), "FOF");
  for (float v : fof.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, "FOF: non-finite coefficient");
  }
  return fof;
}

FofImage load_fof(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load_fof(in);
}

}  // namespace nvs
