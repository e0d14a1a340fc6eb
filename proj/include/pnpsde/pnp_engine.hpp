#pragma once

#include "pnpsde/denoiser.hpp"
#include "pnpsde/forward_model.hpp"
#include "pnpsde/image_grid.hpp"
#include "pnpsde/pnp_config.hpp"
#include "pnpsde/random_source.hpp"
#include "pnpsde/trajectory.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>

namespace pnpsde {

struct PnPState {
    ImageGrid v;  ///< current iterate v^t
    ImageGrid x;  ///< data-consistent intermediate x^t
    ImageGrid u;  ///< scaled dual; identically zero in the simplified variant
    std::size_t t = 0;
};

/// State at t = 0 with x = v0 and u = 0.
PnPState initial_state(const ImageGrid& v0);

/// One iteration:
///   x' = prox_fidelity(obs, v - u, lambda)
///   v' = D(x' + u, sigma_t)                        (deterministic)
///   v' = D(x' + u, sigma_t) - sigma_inject(t) xi    (stochastic, xi ~ N(0, I) from rng)
///   u' = u + x' - v'  (full ADMM)  or  0  (simplified)
///
/// The minus on the injected noise matches the diffusion sign of the SDE form,
/// so a seed-matched Euler–Maruyama step reproduces this update. `rng` is only
/// read in stochastic mode.
PnPState pnp_step(const PnPState& state, const Observation& obs, const Denoiser& d,
                  const PnPConfig& cfg, RandomSource& rng);

/// Iterates pnp_step from v0 until maxIters, divergence (sup-norm above the
/// threshold or non-finite), or early convergence (stepDiff below
/// earlyStopTolerance * ||v0|| for earlyStopPatience consecutive steps).
/// Divergence is reported through the Termination status.
Trajectory run_pnp(const ImageGrid& v0, const Observation& obs, const Denoiser& d,
                   const PnPConfig& cfg, const std::optional<ImageGrid>& reference = std::nullopt);

/// Runs `nTraj` stochastic-mode trajectories from v0 with seeds
/// derive_seed(baseSeed, i). Early stopping is disabled so all members share
/// the same step count unless they diverge.
Ensemble run_pnp_ensemble(const ImageGrid& v0, const Observation& obs, const Denoiser& d,
                          const PnPConfig& cfg, std::size_t nTraj, std::uint64_t baseSeed,
                          std::size_t threads = 1);

/// b(v) = prox_fidelity(obs, v, lambda) - v.
ImageGrid drift(const ImageGrid& v, const Observation& obs, const PnPConfig& cfg);

}  // namespace pnpsde
