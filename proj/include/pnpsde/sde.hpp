#pragma once

#include "pnpsde/denoiser.hpp"
#include "pnpsde/forward_model.hpp"
#include "pnpsde/image_grid.hpp"
#include "pnpsde/pnp_config.hpp"
#include "pnpsde/random_source.hpp"
#include "pnpsde/trajectory.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pnpsde {

using DriftFn = std::function<ImageGrid(double t, const ImageGrid& v)>;
using DiffusionFn = std::function<double(double t)>;

/// dv_t = b(t, v_t) dt - sigma(t) dW_t on [0, horizon] with step dt.
/// The diffusion coefficient depends on time only.
struct SDEProblem {
    DriftFn drift;
    DiffusionFn diffusion;
    double horizon = 1.0;
    double dt = 1.0;
    double divergenceThreshold = kDivergenceThreshold;

    /// horizon / dt; throws ParameterError unless it is a positive whole number.
    std::size_t step_count() const;
    void validate() const;
};

/// PnP-SDE with drift b(v) = h(v) - v and diffusion sigma(t) = sigma_floor(t)
/// from the config's schedule. When a denoiser is given the drift is composed
/// with its residual, b(t, v) = D(h(v), sigma(t)) - v, which makes one
/// Euler–Maruyama step at dt = 1 coincide with a stochastic pnp_step.
/// One iteration is one unit of time, so the horizon is maxIters for any dt.
SDEProblem make_pnp_sde(const Observation& obs, const PnPConfig& cfg,
                        const std::optional<Denoiser>& denoiser = std::nullopt, double dt = 1.0);

/// v + b(t, v) dt - sigma(t) sqrt(dt) xi, xi a standard normal field from rng.
/// Throws NumericalError if the drift is not finite.
ImageGrid em_step(const ImageGrid& v, double t, const SDEProblem& prob, RandomSource& rng);

/// Euler–Maruyama path from v0; stops early with status `diverged` when an
/// iterate escapes the divergence threshold.
Trajectory simulate(const SDEProblem& prob, const ImageGrid& v0, std::uint64_t seed);

/// nTraj independent paths from a shared v0; member i uses derive_seed(baseSeed, i).
/// Members run on `threads` workers; results do not depend on the thread count.
Ensemble simulate_ensemble(const SDEProblem& prob, const ImageGrid& v0, std::size_t nTraj,
                           std::uint64_t baseSeed, std::size_t threads = 1);

/// Runs `task(i)` for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace pnpsde
