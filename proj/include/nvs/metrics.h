#pragma once

#include "nvs/maps.h"

#include <optional>
#include <vector>

namespace nvs {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over the mask (whole frame when absent), peak 1.
/// Zero MSE reports kPsnrCap. Throws SizeMismatch, EmptyMask.
double psnr(const Image& pred, const Image& gt, const Mask* mask = nullptr);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean local SSIM over all fully covered 11x11 Gaussian windows (sigma 1.5,
/// C1 = 0.01^2, C2 = 0.03^2), per channel, then averaged over channels.
/// Throws ImageTooSmall when either side is below 11, SizeMismatch.
double ssim(const Image& pred, const Image& gt);

/// Row `row` of every frame stacked top to bottom: a frames x width image.
/// Throws InvalidArgument for fewer than two frames, SizeMismatch for
/// unequal frames, RowOutOfRange.
Image epi_slice(const std::vector<Image>& frames, int row);

/// Mean over columns and channels of the variance down each EPI column.
double epi_temporal_variance(const Image& epi);

}  // namespace nvs
