#pragma once

#include "pnpsde/noise_schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace pnpsde {

enum class Mode { deterministic, stochastic };

/// simplified: two-step iteration, dual variable pinned at zero.
/// full_admm: three-step ADMM with scaled dual update u <- u + (x - v).
enum class Variant { simplified, full_admm };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(Variant variant) noexcept;
Mode parse_mode(std::string_view name);
Variant parse_variant(std::string_view name);

inline constexpr double kDivergenceThreshold = 1e3;
inline constexpr double kEarlyStopTolerance = 1e-6;
inline constexpr std::size_t kEarlyStopPatience = 5;

struct PnPConfig {
    double gamma = 1.0;       ///< prior weight
    double lambda = 1.0;      ///< augmented Lagrangian parameter
    double alphaRatio = 1.0;  ///< experiment ratio with sigma^2 = alpha * gamma
    NoiseSchedule schedule{};
    std::size_t maxIters = 50;
    Mode mode = Mode::deterministic;
    Variant variant = Variant::simplified;
    std::uint64_t seed = 0;

    /// Std of the noise injected in stochastic mode; defaults to sigma_t.
    std::optional<double> sigmaInject;

    bool earlyStop = true;
    double earlyStopTolerance = kEarlyStopTolerance;  ///< relative to ||v0||_2
    std::size_t earlyStopPatience = kEarlyStopPatience;
    double divergenceThreshold = kDivergenceThreshold;  ///< sup-norm

    /// sqrt(gamma) * lambda, the noise level implied by the splitting.
    double base_sigma() const;
    /// sqrt(alpha * gamma).
    double alpha_sigma() const;

    /// sigma_t for iteration t; the last schedule value is held past its end.
    double sigma(std::size_t t) const;
    double inject_sigma(std::size_t t) const;

    void validate() const;
};

}  // namespace pnpsde
