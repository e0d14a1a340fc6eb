#pragma once

#include "pnpsde/image_grid.hpp"

#include <array>
#include <cstddef>
#include <cstdint>

namespace pnpsde {

/// SplitMix64 finalizer. Used to expand seeds and to derive per-trajectory seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for member `index` of an ensemble: splitmix64(base XOR splitmix64(index + 1)).
/// The outer mix keeps nested derivations from commuting in their indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Portable Gaussian stream.
///
/// Generator: xoshiro256** (Blackman & Vigna), state filled from the seed by
/// four successive SplitMix64 outputs. Uniforms take the top 53 bits of each
/// output. Normals come from Box–Muller on two consecutive uniforms u1, u2:
///   r = sqrt(-2 ln(1 - u1)),  z0 = r cos(2π u2),  z1 = r sin(2π u2)
/// and are emitted in the order z0, z1. `position()` counts normal draws.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = 0) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1).
    double uniform() noexcept;
    /// Standard normal.
    double normal() noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// i.i.d. N(0, sigma^2) field. Always consumes exactly height*width normal
/// draws, including when sigma == 0, so streams stay aligned across configs.
ImageGrid gaussian_field(RandomSource& rng, std::size_t height, std::size_t width, double sigma);

}  // namespace pnpsde
