#pragma once

#include "nvs/maps.h"
#include "nvs/mesh.h"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nvs {

/// Per-pixel occupancy along z in [-1, 1] as coefficients of the cosine
/// series f(z) ~ c0 / 2 + sum_{k >= 1} c_k cos(k pi (z + 1) / 2).
/// Pixel (i, j) is the column at x = -1 + (i + 0.5) * 2 / width,
/// y = -1 + (j + 0.5) * 2 / height of the normalized box.
class FofImage : public MultiChannelMap {
 public:
  static constexpr int kDefaultChannels = 16;

  FofImage() = default;
  FofImage(int width, int height, int channels);
};

/// Occupancy samples at cell centers of the normalized box; sample (i, j, k)
/// sits at (-1 + (i + 0.5) * 2 / nx, ..., -1 + (k + 0.5) * 2 / nz).
/// Columns along z are contiguous.
class OccupancyGrid {
 public:
  OccupancyGrid(int nx, int ny, int nz, float fill = 0.0f);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  float& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  float operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  std::span<float> column(int i, int j) { return std::span<float>(data_).subspan(index(i, j, 0), nz_); }
  std::span<const float> column(int i, int j) const {
    return std::span<const float>(data_).subspan(index(i, j, 0), nz_);
  }
  std::span<const float> data() const { return data_; }

  /// Normalized coordinate of sample index `i` along an axis with `n` samples.
  static double coord(int i, int n) { return -1.0 + (i + 0.5) * 2.0 / n; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i)) * nz_ + static_cast<std::size_t>(k);
  }

  int nx_, ny_, nz_;
  std::vector<float> data_;
};

/// k-th basis function evaluated at z.
double fof_basis(int k, double z);

/// Midpoint-quadrature fit of every column of `grid`.
/// Throws ResolutionTooLow when nz < 2 * channels.
FofImage fof_encode(const OccupancyGrid& grid, int channels);

/// Same fit for an occupancy function given pointwise: sampler(i, j, z).
FofImage fof_encode(int width, int height, int nz, int channels,
                    const std::function<double(int, int, double)>& sampler);

/// Adds the exact coefficients of the indicator of [a, b] (clipped to
/// [-1, 1]) to `coeffs`.
void add_interval_coefficients(double a, double b, std::span<float> coeffs);
void add_interval_coefficients(double a, double b, std::span<double> coeffs);

/// Exact coefficients for a union of disjoint z-intervals per pixel.
FofImage fof_encode_intervals(int width, int height, int channels,
                              const std::function<std::vector<std::pair<double, double>>(int, int)>& intervals);

/// FOF of a mesh already normalized to the unit box, viewed along +z. Inside
/// intervals come from counting sorted surface crossings front to back by
/// their facing (nonzero winding), so overlapping closed parts are united.
/// Columns whose facings do not balance (open or inconsistently wound
/// surfaces) fall back to parity pairs; an unpaired last crossing is ignored.
FofImage fof_encode_mesh(const TriangleMesh& normalized_mesh, int width, int height, int channels);

/// Evaluates the series at nz cell-centered z samples per pixel (unclamped).
OccupancyGrid fof_decode(const FofImage& fof, int nz);

/// Resamples to a new pixel grid: box average for integer downsampling
/// factors, bilinear otherwise. Coefficients are linear in occupancy, so this
/// matches resampling the occupancy itself.
FofImage resample(const FofImage& fof, int width, int height);

/// Iso-surface of the grid with vertices in normalized box coordinates.
/// Faces are wound counter-clockwise seen from the side with values below
/// `iso` (outward for occupancy); normals are area-weighted.
TriangleMesh marching_cubes(const OccupancyGrid& grid, double iso = 0.5);

// File format: "FOF1", u32 width, u32 height, u32 channels, then float32
// little-endian coefficients, channels contiguous per pixel, pixels row-major.
void save_fof(const FofImage& fof, std::ostream& out);
void save_fof(const FofImage& fof, const std::string& path);
FofImage load_fof(std::istream& in);
FofImage load_fof(const std::string& path);

}  // namespace nvs
