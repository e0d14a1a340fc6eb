#pragma once

#include "pnpsde/image_grid.hpp"

#include <cstddef>

namespace pnpsde {

struct MetricSample {
    std::size_t step = 0;
    double psnr = 0.0;  ///< dB; +inf for identical images
    double ssim = 0.0;  ///< NaN when the image is smaller than the SSIM window
};

/// 10 log10(peak^2 / MSE). Returns +infinity when MSE == 0.
double psnr(const ImageGrid& x, const ImageGrid& ref, double peak = 1.0);

inline constexpr std::size_t kSsimWindow = 8;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Mean SSIM over all 8x8 uniform windows at stride 1 (no padding), with
/// C1 = (K1 peak)^2, C2 = (K2 peak)^2, K1 = 0.01, K2 = 0.03.
double ssim(const ImageGrid& x, const ImageGrid& ref, double peak = 1.0);

/// PSNR and (when the image is large enough) SSIM of `x` against `ref`.
MetricSample measure(const ImageGrid& x, const ImageGrid& ref, std::size_t step, double peak = 1.0);

}  // namespace pnpsde
