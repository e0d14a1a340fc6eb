#include "pnpsde/forward_model.hpp"

#include "pnpsde/errors.hpp"

#include "fft.hpp"

#include <cmath>
#include <string>

namespace pnpsde {

std::string_view to_string(OperatorKind kind) noexcept {
    switch (kind) {
        case OperatorKind::identity: return "identity";
        case OperatorKind::mask: return "mask";
        case OperatorKind::convolution: return "convolution";
        case OperatorKind::downsample: return "downsample";
    }
    return "unknown";
}

MeasurementOp MeasurementOp::identity() { return MeasurementOp(OperatorKind::identity); }

MeasurementOp MeasurementOp::mask(const ImageGrid& mask) {
    if (mask.empty()) throw DimensionError("mask is empty");
    for (double m : mask.values()) {
        if (m != 0.0 && m != 1.0) throw ParameterError("mask entries must be 0 or 1");
    }
    MeasurementOp op(OperatorKind::mask);
    op.mask_ = mask;
    return op;
}

MeasurementOp MeasurementOp::random_mask(std::size_t height, std::size_t width, double keep,
                                         RandomSource& rng) {
    if (!(keep >= 0.0 && keep <= 1.0)) throw ParameterError("mask keep ratio must be in [0, 1]");
    ImageGrid m(height, width);
    for (double& v : m.values()) v = rng.uniform() < keep ? 1.0 : 0.0;
    return mask(m);
}

MeasurementOp MeasurementOp::convolution(ImageGrid kernel) {
    if (kernel.empty()) throw DimensionError("convolution kernel is empty");
    MeasurementOp op(OperatorKind::convolution);
    op.kernel_ = std::move(kernel);
    return op;
}

MeasurementOp MeasurementOp::downsample(std::size_t factor) {
    if (factor == 0) throw ParameterError("downsample factor must be positive");
    MeasurementOp op(OperatorKind::downsample);
    op.factor_ = factor;
    return op;
}

Shape MeasurementOp::output_shape(Shape in) const {
    switch (kind_) {
        case OperatorKind::identity: return in;
        case OperatorKind::mask:
            if (in != Shape{mask_.height(), mask_.width()}) {
                throw DimensionError("mask operator expects " + std::to_string(mask_.height()) +
                                     "x" + std::to_string(mask_.width()) + " input");
            }
            return in;
        case OperatorKind::convolution:
            if (kernel_.height() > in.height || kernel_.width() > in.width) {
                throw DimensionError("convolution kernel larger than image");
            }
            return in;
        case OperatorKind::downsample:
            if (in.height % factor_ != 0 || in.width % factor_ != 0) {
                throw DimensionError("image dimensions not divisible by downsample factor " +
                                     std::to_string(factor_));
            }
            return {in.height / factor_, in.width / factor_};
    }
    return in;
}

namespace {

// sign = +1 convolves, sign = -1 correlates (the adjoint).
ImageGrid circular_filter(const ImageGrid& x, const ImageGrid& k, int sign) {
    const auto h = static_cast<long>(x.height());
    const auto w = static_cast<long>(x.width());
    const auto ch = static_cast<long>(k.height() / 2);
    const auto cw = static_cast<long>(k.width() / 2);
    ImageGrid out(x.height(), x.width());
    for (long i = 0; i < h; ++i) {
        for (long j = 0; j < w; ++j) {
            double acc = 0.0;
            for (long a = 0; a < static_cast<long>(k.height()); ++a) {
                const long r = ((i - sign * (a - ch)) % h + h) % h;
                for (long b = 0; b < static_cast<long>(k.width()); ++b) {
                    const long c = ((j - sign * (b - cw)) % w + w) % w;
                    acc += k(a, b) * x(r, c);
                }
            }
            out(i, j) = acc;
        }
    }
    return out;
}

// Transfer function of the centred kernel on an h x w periodic grid.
detail::ComplexGrid transfer_function(const ImageGrid& k, std::size_t h, std::size_t w) {
    detail::ComplexGrid embedded(h * w, 0.0);
    const auto ch = static_cast<long>(k.height() / 2);
    const auto cw = static_cast<long>(k.width() / 2);
    const auto lh = static_cast<long>(h);
    const auto lw = static_cast<long>(w);
    for (long a = 0; a < static_cast<long>(k.height()); ++a) {
        for (long b = 0; b < static_cast<long>(k.width()); ++b) {
            const long r = ((a - ch) % lh + lh) % lh;
            const long c = ((b - cw) % lw + lw) % lw;
            embedded[static_cast<std::size_t>(r * lw + c)] += k(a, b);
        }
    }
    return detail::fft2(embedded, h, w);
}

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("prox_fidelity: lambda must be positive and finite");
    }
}

}  // namespace

ImageGrid MeasurementOp::apply(const ImageGrid& x) const {
    output_shape({x.height(), x.width()});
    switch (kind_) {
        case OperatorKind::identity: return x;
        case OperatorKind::mask: {
            ImageGrid out = x;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask_[i];
            return out;
        }
        case OperatorKind::convolution: return circular_filter(x, kernel_, +1);
        case OperatorKind::downsample: {
            const Shape s = output_shape({x.height(), x.width()});
            ImageGrid out(s.height, s.width);
            const double inv = 1.0 / static_cast<double>(factor_ * factor_);
            for (std::size_t r = 0; r < x.height(); ++r) {
                for (std::size_t c = 0; c < x.width(); ++c) {
                    out(r / factor_, c / factor_) += x(r, c);
                }
            }
            out *= inv;
            return out;
        }
    }
    return x;
}

ImageGrid MeasurementOp::adjoint(const ImageGrid& z) const {
    switch (kind_) {
        case OperatorKind::identity: return z;
        case OperatorKind::mask: return apply(z);
        case OperatorKind::convolution:
            output_shape({z.height(), z.width()});
            return circular_filter(z, kernel_, -1);
        case OperatorKind::downsample: {
            ImageGrid out(z.height() * factor_, z.width() * factor_);
            const double inv = 1.0 / static_cast<double>(factor_ * factor_);
            for (std::size_t r = 0; r < out.height(); ++r) {
                for (std::size_t c = 0; c < out.width(); ++c) {
                    out(r, c) = z(r / factor_, c / factor_) * inv;
                }
            }
            return out;
        }
    }
    return z;
}

Observation degrade(const MeasurementOp& op, const ImageGrid& x, double sigma, RandomSource& rng) {
    if (!(sigma >= 0.0)) throw ParameterError("degrade: sigma must be nonnegative");
    ImageGrid y = op.apply(x);
    y += gaussian_field(rng, y.height(), y.width(), sigma);
    return Observation{std::move(y), op, sigma};
}

ImageGrid prox_fidelity(const Observation& obs, const ImageGrid& v, double lambda) {
    check_lambda(lambda);
    const Shape out = obs.op.output_shape({v.height(), v.width()});
    if (out != Shape{obs.y.height(), obs.y.width()}) {
        throw DimensionError("prox_fidelity: iterate shape inconsistent with observation");
    }
    const double l2 = lambda * lambda;
    const double mu = 1.0 / l2;

    switch (obs.op.kind()) {
        case OperatorKind::identity: {
            ImageGrid x(v.height(), v.width());
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = (l2 * obs.y[i] + v[i]) / (l2 + 1.0);
            return x;
        }
        case OperatorKind::mask: {
            // (m^2 + mu) x = m y + mu v per pixel, with m in {0, 1}.
            const ImageGrid& m = obs.op.mask_grid();
            ImageGrid x(v.height(), v.width());
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = m[i] == 0.0 ? v[i] : (l2 * obs.y[i] + v[i]) / (l2 + 1.0);
            }
            return x;
        }
        case OperatorKind::convolution: {
            // Diagonal in the Fourier basis: X = (conj(K) Y + mu V) / (|K|^2 + mu).
            const std::size_t h = v.height();
            const std::size_t w = v.width();
            const auto kf = transfer_function(obs.op.kernel(), h, w);
            detail::ComplexGrid yv(h * w), vv(h * w);
            for (std::size_t i = 0; i < h * w; ++i) {
                yv[i] = obs.y[i];
                vv[i] = v[i];
            }
            const auto yf = detail::fft2(yv, h, w);
            const auto vf = detail::fft2(vv, h, w);
            detail::ComplexGrid xf(h * w);
            for (std::size_t i = 0; i < h * w; ++i) {
                xf[i] = (std::conj(kf[i]) * yf[i] + mu * vf[i]) / (std::norm(kf[i]) + mu);
            }
            const auto xs = detail::ifft2(xf, h, w);
            ImageGrid x(h, w);
            for (std::size_t i = 0; i < h * w; ++i) x[i] = xs[i].real();
            return x;
        }
        case OperatorKind::downsample: {
            // M^T M = P / f^2 where P averages each block. Splitting r = M^T y + mu v
            // into its block mean and remainder gives
            //   x = (r - Pr) / mu + Pr / (1/f^2 + mu).
            const std::size_t f = obs.op.factor();
            const double f2 = static_cast<double>(f * f);
            ImageGrid r = obs.op.adjoint(obs.y);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] += mu * v[i];
            ImageGrid block_mean(out.height, out.width);
            for (std::size_t i = 0; i < v.height(); ++i) {
                for (std::size_t j = 0; j < v.width(); ++j) block_mean(i / f, j / f) += r(i, j);
            }
            block_mean *= 1.0 / f2;
            ImageGrid x(v.height(), v.width());
            const double mean_gain = 1.0 / (1.0 / f2 + mu);
            for (std::size_t i = 0; i < v.height(); ++i) {
                for (std::size_t j = 0; j < v.width(); ++j) {
                    const double pr = block_mean(i / f, j / f);
                    x(i, j) = (r(i, j) - pr) * l2 + pr * mean_gain;
                }
            }
            return x;
        }
    }
    return v;
}

ImageGrid initial_estimate(const Observation& obs) {
    if (obs.op.kind() == OperatorKind::downsample) {
        return obs.op.adjoint(obs.y) * static_cast<double>(obs.op.factor() * obs.op.factor());
    }
    return obs.op.adjoint(obs.y);
}

ImageGrid gaussian_kernel(std::size_t radius, double stddev) {
    if (!(stddev > 0.0)) throw ParameterError("gaussian_kernel: stddev must be positive");
    const std::size_t n = 2 * radius + 1;
    ImageGrid k(n, n);
    const double c = static_cast<double>(radius);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double dr = static_cast<double>(i) - c;
            const double dc = static_cast<double>(j) - c;
            k(i, j) = std::exp(-(dr * dr + dc * dc) / (2.0 * stddev * stddev));
        }
    }
    k *= 1.0 / k.sum();
    return k;
}

ImageGrid box_kernel(std::size_t radius) {
    const std::size_t n = 2 * radius + 1;
    return ImageGrid(n, n, 1.0 / static_cast<double>(n * n));
}

}  // namespace pnpsde
