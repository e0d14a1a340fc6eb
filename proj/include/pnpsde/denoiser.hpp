#pragma once

#include "pnpsde/image_grid.hpp"
#include "pnpsde/random_source.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pnpsde {

enum class DenoiserKind {
    gaussian_smooth,
    tv_chambolle,
    median,
    linear_matrix,
    amplifier,
    clamp,
    custom,
};

std::string_view to_string(DenoiserKind kind) noexcept;

/// Circular Gaussian blur with standard deviation widthScale * sigma * height pixels.
struct GaussianSmoothParams {
    double widthScale = 2.0;
};

/// Chambolle's dual projection for the ROF model
///   argmin_u ||u - x||^2 / 2 + w TV(u),  w = weightScale * sigma^2,
/// run for a fixed number of iterations with step tau (tau <= 1/8 converges).
struct TvChambolleParams {
    std::size_t iterations = 100;
    double weightScale = 1.0;
    double tau = 0.125;
};

/// Circular median filter; sigma picks the window radius:
/// 0 below radius1Sigma, 1 below radius2Sigma, 2 otherwise.
struct MedianParams {
    double radius1Sigma = 0.02;
    double radius2Sigma = 0.08;
};

/// x -> scale * ((1 - b) x + b A x) with blend weight b = min(sigma, 1) and a
/// fixed row-stochastic A, stored either as a circular stencil or densely.
struct LinearMatrixParams {
    ImageGrid stencil;                ///< used when `dense` is empty
    std::vector<double> dense;        ///< n x n row-major, n = height * width
    std::size_t denseHeight = 0;
    std::size_t denseWidth = 0;
    double scale = 1.0;
};

/// x -> gain * x, sigma ignored. Unbounded by construction.
struct AmplifierParams {
    double gain = 1.5;
};

class Denoiser;

struct ClampParams {
    std::shared_ptr<const Denoiser> inner;
    double lo = 0.0;
    double hi = 1.0;
};

using DenoiseFn = std::function<ImageGrid(const ImageGrid&, double)>;

struct CustomParams {
    std::string name;
    DenoiseFn fn;
    std::optional<double> bound;
};

/// Plug-in prior D(x, sigma). Immutable value; `denoise` is pure.
class Denoiser {
public:
    using Params = std::variant<GaussianSmoothParams, TvChambolleParams, MedianParams,
                                LinearMatrixParams, AmplifierParams, ClampParams, CustomParams>;

    static Denoiser gaussian_smooth(double widthScale = 2.0);
    static Denoiser tv_chambolle(std::size_t iterations = 100, double weightScale = 1.0,
                                 double tau = 0.125);
    static Denoiser median(double radius1Sigma = 0.02, double radius2Sigma = 0.08);
    /// Circular stencil A (nonnegative, unit sum so A is row-stochastic).
    static Denoiser linear_stencil(ImageGrid stencil, double scale = 1.0);
    /// Dense row-stochastic A acting on height x width images.
    static Denoiser linear_matrix(std::vector<double> matrix, std::size_t height,
                                  std::size_t width, double scale = 1.0);
    /// Linear-matrix denoiser with A = I.
    static Denoiser identity();
    static Denoiser amplifier(double gain = 1.5);
    static Denoiser custom(std::string name, DenoiseFn fn,
                           std::optional<double> bound = std::nullopt);

    DenoiserKind kind() const noexcept;
    const Params& params() const noexcept { return params_; }
    std::string name() const;

    /// Sup-norm output bound alpha, when the denoiser guarantees one.
    std::optional<double> declared_bound() const;

    ImageGrid operator()(const ImageGrid& x, double sigma) const;

private:
    explicit Denoiser(Params p) : params_(std::move(p)) {}
    friend Denoiser clamp_wrap(const Denoiser& d, double lo, double hi);

    Params params_;
};

/// D(x, sigma); throws ParameterError for sigma < 0.
ImageGrid denoise(const Denoiser& d, const ImageGrid& x, double sigma);

/// D(x, sigma) - x.
ImageGrid residual(const Denoiser& d, const ImageGrid& x, double sigma);

/// Pixelwise clamp of d's output into [lo, hi]; declared bound max(|lo|, |hi|).
Denoiser clamp_wrap(const Denoiser& d, double lo, double hi);

/// Blend weight used by the linear-matrix denoiser at noise level sigma.
double linear_blend_weight(double sigma) noexcept;

struct GaussianityThresholds {
    double maxAbsSkewness = 0.5;
    double maxAbsExcessKurtosis = 1.0;
};

struct ResidualReport {
    double sampleSkewness = 0.0;
    double excessKurtosis = 0.0;
    double meanAbs = 0.0;
    double sigmaRatio = 0.0;  ///< empirical residual std / nominal sigma
    bool passed = false;
};

inline constexpr std::size_t kMinGaussianitySide = 32;

/// Adds N(0, sigma^2) noise to `clean`, denoises, and tests whether the
/// residual (denoised - clean) looks Gaussian by its third and fourth moments.
/// A zero residual passes vacuously with zero moments.
ResidualReport check_residual_gaussianity(const Denoiser& d, const ImageGrid& clean, double sigma,
                                          RandomSource& rng,
                                          const GaussianityThresholds& thresholds = {});

}  // namespace pnpsde
