#include "pnpsde/metrics.hpp"

#include "pnpsde/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace pnpsde {

double psnr(const ImageGrid& x, const ImageGrid& ref, double peak) {
    require_same_shape(x, ref, "psnr");
    if (!(peak > 0.0)) throw ParameterError("psnr: peak must be positive");
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - ref[i];
        sse += d * d;
    }
    if (sse == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sse / static_cast<double>(x.size());
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

// Summed-area table with a zero first row/column: (h+1) x (w+1).
std::vector<double> integral(std::size_t h, std::size_t w, auto&& value) {
    std::vector<double> s((h + 1) * (w + 1), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < w; ++c) {
            row += value(r, c);
            s[(r + 1) * (w + 1) + c + 1] = s[r * (w + 1) + c + 1] + row;
        }
    }
    return s;
}

double box(const std::vector<double>& s, std::size_t w, std::size_t r, std::size_t c, std::size_t k) {
    const std::size_t stride = w + 1;
    return s[(r + k) * stride + c + k] - s[r * stride + c + k] - s[(r + k) * stride + c] +
           s[r * stride + c];
}

}  // namespace

double ssim(const ImageGrid& x, const ImageGrid& ref, double peak) {
    require_same_shape(x, ref, "ssim");
    if (!(peak > 0.0)) throw ParameterError("ssim: peak must be positive");
    const std::size_t h = x.height();
    const std::size_t w = x.width();
    const std::size_t k = kSsimWindow;
    if (h < k || w < k) throw DimensionError("ssim: image smaller than 8x8 window");

    // Windows are summed directly rather than via integral images of squares,
    // which keeps ssim(x, x) == 1 exact and avoids cancellation.
    const double c1 = (kSsimK1 * peak) * (kSsimK1 * peak);
    const double c2 = (kSsimK2 * peak) * (kSsimK2 * peak);
    const double n = static_cast<double>(k * k);
    const auto sx = integral(h, w, [&](std::size_t r, std::size_t c) { return x(r, c); });
    const auto sy = integral(h, w, [&](std::size_t r, std::size_t c) { return ref(r, c); });

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + k <= h; ++r) {
        for (std::size_t c = 0; c + k <= w; ++c) {
            const double mx = box(sx, w, r, c, k) / n;
            const double my = box(sy, w, r, c, k) / n;
            double vx = 0.0, vy = 0.0, cxy = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double dx = x(r + i, c + j) - mx;
                    const double dy = ref(r + i, c + j) - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            }
            vx /= n;
            vy /= n;
            cxy /= n;
            const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

MetricSample measure(const ImageGrid& x, const ImageGrid& ref, std::size_t step, double peak) {
    MetricSample m;
    m.step = step;
    m.psnr = psnr(x, ref, peak);
    m.ssim = (x.height() >= kSsimWindow && x.width() >= kSsimWindow)
                 ? ssim(x, ref, peak)
                 : std::numeric_limits<double>::quiet_NaN();
    return m;
}

}  // namespace pnpsde
