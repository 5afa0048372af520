#include "nvs/metrics.h"

#include "nvs/error.h"

#include <array>
#include <cmath>
#include <string>

namespace nvs {
namespace {

void require_same(const Image& a, const Image& b) {
  if (!a.same_size(b.width(), b.height())) throw Error(ErrorCode::SizeMismatch, "images differ in size");
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable valid-mode filtering of an h x w plane: (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::array<double, kSsimWindow>& g) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * src[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& pred, const Image& gt, const Mask* mask) {
  require_same(pred, gt);
  if (mask && !mask->same_size(pred.width(), pred.height())) {
    throw Error(ErrorCode::SizeMismatch, "mask differs in size");
  }
  const std::size_t n = static_cast<std::size_t>(pred.width()) * pred.height();
  const auto a = pred.data();
  const auto b = gt.data();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    for (std::size_t c = 3 * i; c < 3 * i + 3; ++c) {
      const double d = static_cast<double>(a[c]) - static_cast<double>(b[c]);
      sum += d * d;
    }
    count += 3;
  }
  if (count == 0) throw Error(ErrorCode::EmptyMask, "PSNR over an empty mask");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& pred, const Image& gt) {
  require_same(pred, gt);
  const int w = pred.width();
  const int h = pred.height();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw Error(ErrorCode::ImageTooSmall, "SSIM needs at least " + std::to_string(kSsimWindow) + " pixels per side");
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto g = gaussian_window();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pred.data()[3 * i + c];
      y[i] = gt.data()[3 * i + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, g);
    const auto my = filter_valid(y, w, h, g);
    const auto sxx = filter_valid(xx, w, h, g);
    const auto syy = filter_valid(yy, w, h, g);
    const auto sxy = filter_valid(xy, w, h, g);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / 3.0;
}

Image epi_slice(const std::vector<Image>& frames, int row) {
  if (frames.size() < 2) throw Error(ErrorCode::InvalidArgument, "EPI needs at least two frames");
  const int w = frames.front().width();
  const int h = frames.front().height();
  for (const Image& f : frames) {
    if (!f.same_size(w, h)) throw Error(ErrorCode::SizeMismatch, "EPI frames differ in size");
  }
  if (row < 0 || row >= h) {
    throw Error(ErrorCode::RowOutOfRange, "row " + std::to_string(row) + " outside [0, " + std::to_string(h) + ")");
  }
  Image epi(w, static_cast<int>(frames.size()));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::copy_n(frames[t].pixel(0, row), 3 * static_cast<std::size_t>(w), epi.pixel(0, static_cast<int>(t)));
  }
  return epi;
}

double epi_temporal_variance(const Image& epi) {
  const int w = epi.width();
  const int t = epi.height();
  if (t == 0 || w == 0) return 0.0;
  double total = 0.0;
  for (int x = 0; x < w; ++x) {
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0;
      for (int k = 0; k < t; ++k) mean += epi.at(x, k, c);
      mean /= t;
      double var = 0.0;
      for (int k = 0; k < t; ++k) var += (epi.at(x, k, c) - mean) * (epi.at(x, k, c) - mean);
      total += var / t;
    }
  }
  return total / (3.0 * w);
}

}  // namespace nvs
