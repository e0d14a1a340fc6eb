#include "pnpsde/denoiser.hpp"

#include "pnpsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pnpsde {

std::string_view to_string(DenoiserKind kind) noexcept {
    switch (kind) {
        case DenoiserKind::gaussian_smooth: return "gaussian-smooth";
        case DenoiserKind::tv_chambolle: return "tv-chambolle";
        case DenoiserKind::median: return "median";
        case DenoiserKind::linear_matrix: return "linear-matrix";
        case DenoiserKind::amplifier: return "amplifier";
        case DenoiserKind::clamp: return "clamp";
        case DenoiserKind::custom: return "custom";
    }
    return "unknown";
}

namespace {

constexpr double kStochasticTolerance = 1e-9;

long wrap(long i, long n) { return ((i % n) + n) % n; }

// Separable circular Gaussian blur.
ImageGrid gaussian_blur(const ImageGrid& x, double stddev) {
    const long radius = static_cast<long>(std::ceil(4.0 * stddev));
    std::vector<double> weights(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (long k = -radius; k <= radius; ++k) {
        const double w = std::exp(-static_cast<double>(k * k) / (2.0 * stddev * stddev));
        weights[static_cast<std::size_t>(k + radius)] = w;
        total += w;
    }
    for (double& w : weights) w /= total;

    const long h = static_cast<long>(x.height());
    const long w = static_cast<long>(x.width());
    ImageGrid rows(x.height(), x.width());
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long k = -radius; k <= radius; ++k) {
                acc += weights[static_cast<std::size_t>(k + radius)] * x(r, wrap(c - k, w));
            }
            rows(r, c) = acc;
        }
    }
    ImageGrid out(x.height(), x.width());
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long k = -radius; k <= radius; ++k) {
                acc += weights[static_cast<std::size_t>(k + radius)] * rows(wrap(r - k, h), c);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

// Forward differences with Neumann boundary; div is the negative adjoint.
void gradient(const ImageGrid& u, ImageGrid& gx, ImageGrid& gy) {
    const std::size_t h = u.height();
    const std::size_t w = u.width();
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            gx(r, c) = c + 1 < w ? u(r, c + 1) - u(r, c) : 0.0;
            gy(r, c) = r + 1 < h ? u(r + 1, c) - u(r, c) : 0.0;
        }
    }
}

ImageGrid divergence(const ImageGrid& px, const ImageGrid& py) {
    const std::size_t h = px.height();
    const std::size_t w = px.width();
    ImageGrid d(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            double dx;
            if (w == 1) dx = 0.0;
            else if (c == 0) dx = px(r, c);
            else if (c + 1 == w) dx = -px(r, c - 1);
            else dx = px(r, c) - px(r, c - 1);
            double dy;
            if (h == 1) dy = 0.0;
            else if (r == 0) dy = py(r, c);
            else if (r + 1 == h) dy = -py(r - 1, c);
            else dy = py(r, c) - py(r - 1, c);
            d(r, c) = dx + dy;
        }
    }
    return d;
}

ImageGrid tv_chambolle_filter(const ImageGrid& f, double weight, const TvChambolleParams& p) {
    const std::size_t h = f.height();
    const std::size_t w = f.width();
    ImageGrid px(h, w), py(h, w), gx(h, w), gy(h, w);
    const double inv = 1.0 / weight;
    for (std::size_t it = 0; it < p.iterations; ++it) {
        ImageGrid arg = divergence(px, py);
        for (std::size_t i = 0; i < arg.size(); ++i) arg[i] -= f[i] * inv;
        gradient(arg, gx, gy);
        for (std::size_t i = 0; i < px.size(); ++i) {
            const double norm = std::hypot(gx[i], gy[i]);
            const double denom = 1.0 + p.tau * norm;
            px[i] = (px[i] + p.tau * gx[i]) / denom;
            py[i] = (py[i] + p.tau * gy[i]) / denom;
        }
    }
    ImageGrid u = divergence(px, py);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = f[i] - weight * u[i];
    return u;
}

ImageGrid median_filter(const ImageGrid& x, long radius) {
    if (radius == 0) return x;
    const long h = static_cast<long>(x.height());
    const long w = static_cast<long>(x.width());
    ImageGrid out(x.height(), x.width());
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            window.clear();
            for (long dr = -radius; dr <= radius; ++dr) {
                for (long dc = -radius; dc <= radius; ++dc) {
                    window.push_back(x(wrap(r + dr, h), wrap(c + dc, w)));
                }
            }
            auto mid = window.begin() + static_cast<long>(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            out(r, c) = *mid;
        }
    }
    return out;
}

ImageGrid apply_linear(const LinearMatrixParams& p, const ImageGrid& x) {
    if (!p.dense.empty()) {
        if (x.height() != p.denseHeight || x.width() != p.denseWidth) {
            throw DimensionError("linear-matrix denoiser built for a different image shape");
        }
        const std::size_t n = x.size();
        ImageGrid out(x.height(), x.width());
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = p.dense.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
            out[i] = acc;
        }
        return out;
    }
    const long h = static_cast<long>(x.height());
    const long w = static_cast<long>(x.width());
    const long ch = static_cast<long>(p.stencil.height() / 2);
    const long cw = static_cast<long>(p.stencil.width() / 2);
    ImageGrid out(x.height(), x.width());
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long a = 0; a < static_cast<long>(p.stencil.height()); ++a) {
                for (long b = 0; b < static_cast<long>(p.stencil.width()); ++b) {
                    acc += p.stencil(a, b) * x(wrap(r - (a - ch), h), wrap(c - (b - cw), w));
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

void require_row_stochastic(const double* row, std::size_t n) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (row[j] < 0.0 || !std::isfinite(row[j])) {
            throw ParameterError("linear-matrix entries must be finite and nonnegative");
        }
        total += row[j];
    }
    if (std::abs(total - 1.0) > kStochasticTolerance) {
        throw ParameterError("linear-matrix rows must sum to 1");
    }
}

}  // namespace

double linear_blend_weight(double sigma) noexcept { return std::min(sigma, 1.0); }

Denoiser Denoiser::gaussian_smooth(double widthScale) {
    if (!(widthScale > 0.0)) throw ParameterError("gaussian-smooth widthScale must be positive");
    return Denoiser(GaussianSmoothParams{widthScale});
}

Denoiser Denoiser::tv_chambolle(std::size_t iterations, double weightScale, double tau) {
    if (iterations == 0) throw ParameterError("tv-chambolle needs at least one iteration");
    if (!(weightScale > 0.0)) throw ParameterError("tv-chambolle weightScale must be positive");
    if (!(tau > 0.0 && tau <= 0.25)) throw ParameterError("tv-chambolle tau must be in (0, 1/4]");
    return Denoiser(TvChambolleParams{iterations, weightScale, tau});
}

Denoiser Denoiser::median(double radius1Sigma, double radius2Sigma) {
    if (!(radius1Sigma >= 0.0 && radius2Sigma >= radius1Sigma)) {
        throw ParameterError("median thresholds must satisfy 0 <= radius1Sigma <= radius2Sigma");
    }
    return Denoiser(MedianParams{radius1Sigma, radius2Sigma});
}

Denoiser Denoiser::linear_stencil(ImageGrid stencil, double scale) {
    if (stencil.empty()) throw DimensionError("linear stencil is empty");
    if (stencil.height() % 2 == 0 || stencil.width() % 2 == 0) {
        throw DimensionError("linear stencil must have odd dimensions");
    }
    require_row_stochastic(stencil.values().data(), stencil.size());
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("scale must be positive");
    LinearMatrixParams p;
    p.stencil = std::move(stencil);
    p.scale = scale;
    return Denoiser(std::move(p));
}

Denoiser Denoiser::linear_matrix(std::vector<double> matrix, std::size_t height,
                                 std::size_t width, double scale) {
    const std::size_t n = height * width;
    if (n == 0 || matrix.size() != n * n) {
        throw DimensionError("linear-matrix must be (h*w) x (h*w)");
    }
    for (std::size_t i = 0; i < n; ++i) require_row_stochastic(matrix.data() + i * n, n);
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("scale must be positive");
    LinearMatrixParams p;
    p.dense = std::move(matrix);
    p.denseHeight = height;
    p.denseWidth = width;
    p.scale = scale;
    return Denoiser(std::move(p));
}

Denoiser Denoiser::identity() { return linear_stencil(ImageGrid(1, 1, 1.0)); }

Denoiser Denoiser::amplifier(double gain) {
    if (!std::isfinite(gain)) throw ParameterError("amplifier gain must be finite");
    return Denoiser(AmplifierParams{gain});
}

Denoiser Denoiser::custom(std::string name, DenoiseFn fn, std::optional<double> bound) {
    if (!fn) throw ParameterError("custom denoiser needs a function");
    return Denoiser(CustomParams{std::move(name), std::move(fn), bound});
}

DenoiserKind Denoiser::kind() const noexcept {
    return static_cast<DenoiserKind>(params_.index());
}

std::string Denoiser::name() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianSmoothParams>) {
                os << "gaussian-smooth(widthScale=" << p.widthScale << ")";
            } else if constexpr (std::is_same_v<T, TvChambolleParams>) {
                os << "tv-chambolle(iterations=" << p.iterations << ",weightScale=" << p.weightScale
                   << ")";
            } else if constexpr (std::is_same_v<T, MedianParams>) {
                os << "median";
            } else if constexpr (std::is_same_v<T, LinearMatrixParams>) {
                os << "linear-matrix(scale=" << p.scale << ")";
            } else if constexpr (std::is_same_v<T, AmplifierParams>) {
                os << "amplifier(gain=" << p.gain << ")";
            } else if constexpr (std::is_same_v<T, ClampParams>) {
                os << "clamp[" << p.lo << "," << p.hi << "](" << p.inner->name() << ")";
            } else {
                os << "custom(" << p.name << ")";
            }
        },
        params_);
    return os.str();
}

std::optional<double> Denoiser::declared_bound() const {
    if (const auto* c = std::get_if<ClampParams>(&params_)) {
        return std::max(std::abs(c->lo), std::abs(c->hi));
    }
    if (const auto* c = std::get_if<CustomParams>(&params_)) return c->bound;
    return std::nullopt;
}

ImageGrid Denoiser::operator()(const ImageGrid& x, double sigma) const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ParameterError("denoise: sigma must be a finite nonnegative number");
    }
    return std::visit(
        [&](const auto& p) -> ImageGrid {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianSmoothParams>) {
                const double stddev = p.widthScale * sigma * static_cast<double>(x.height());
                return stddev > 0.0 ? gaussian_blur(x, stddev) : x;
            } else if constexpr (std::is_same_v<T, TvChambolleParams>) {
                const double weight = p.weightScale * sigma * sigma;
                return weight > 0.0 ? tv_chambolle_filter(x, weight, p) : x;
            } else if constexpr (std::is_same_v<T, MedianParams>) {
                const long radius = sigma < p.radius1Sigma ? 0 : (sigma < p.radius2Sigma ? 1 : 2);
                return median_filter(x, radius);
            } else if constexpr (std::is_same_v<T, LinearMatrixParams>) {
                if (p.dense.empty() && p.stencil.size() == 1 && p.stencil[0] == 1.0 &&
                    p.scale == 1.0) {
                    return x;
                }
                const double b = linear_blend_weight(sigma);
                ImageGrid out = apply_linear(p, x);
                for (std::size_t i = 0; i < out.size(); ++i) {
                    out[i] = p.scale * ((1.0 - b) * x[i] + b * out[i]);
                }
                return out;
            } else if constexpr (std::is_same_v<T, AmplifierParams>) {
                return x * p.gain;
            } else if constexpr (std::is_same_v<T, ClampParams>) {
                ImageGrid out = (*p.inner)(x, sigma);
                for (double& v : out.values()) v = std::clamp(v, p.lo, p.hi);
                return out;
            } else {
                ImageGrid out = p.fn(x, sigma);
                require_same_shape(out, x, "custom denoiser output");
                return out;
            }
        },
        params_);
}

ImageGrid denoise(const Denoiser& d, const ImageGrid& x, double sigma) { return d(x, sigma); }

ImageGrid residual(const Denoiser& d, const ImageGrid& x, double sigma) {
    return d(x, sigma) - x;
}

Denoiser clamp_wrap(const Denoiser& d, double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ParameterError("clamp_wrap requires finite lo < hi");
    }
    return Denoiser(ClampParams{std::make_shared<const Denoiser>(d), lo, hi});
}

ResidualReport check_residual_gaussianity(const Denoiser& d, const ImageGrid& clean, double sigma,
                                          RandomSource& rng,
                                          const GaussianityThresholds& thresholds) {
    if (clean.height() < kMinGaussianitySide || clean.width() < kMinGaussianitySide) {
        throw DimensionError("residual gaussianity check needs at least 32x32 pixels");
    }
    if (!(sigma > 0.0)) throw ParameterError("residual gaussianity check needs sigma > 0");
    const auto [lo, hi] = std::minmax_element(clean.values().begin(), clean.values().end());
    if (*lo == *hi) {
        throw StatisticsError("residual statistics undefined for a constant clean image");
    }

    ImageGrid noisy = clean + gaussian_field(rng, clean.height(), clean.width(), sigma);
    const ImageGrid r = d(noisy, sigma) - clean;

    const double n = static_cast<double>(r.size());
    const double mean = r.mean();
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, abs_sum = 0.0;
    for (double v : r.values()) {
        const double dv = v - mean;
        const double d2 = dv * dv;
        m2 += d2;
        m3 += d2 * dv;
        m4 += d2 * d2;
        abs_sum += std::abs(v);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    ResidualReport report;
    report.meanAbs = abs_sum / n;
    report.sigmaRatio = std::sqrt(m2) / sigma;
    if (m2 > 0.0) {
        report.sampleSkewness = m3 / std::pow(m2, 1.5);
        report.excessKurtosis = m4 / (m2 * m2) - 3.0;
    }
    report.passed = std::abs(report.sampleSkewness) < thresholds.maxAbsSkewness &&
                    std::abs(report.excessKurtosis) < thresholds.maxAbsExcessKurtosis;
    return report;
}

}  // namespace pnpsde
