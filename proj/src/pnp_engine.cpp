#include "pnpsde/pnp_engine.hpp"

#include "pnpsde/errors.hpp"
#include "pnpsde/sde.hpp"

#include <string>

namespace pnpsde {

PnPState initial_state(const ImageGrid& v0) {
    return PnPState{v0, v0, ImageGrid(v0.height(), v0.width()), 0};
}

PnPState pnp_step(const PnPState& state, const Observation& obs, const Denoiser& d,
                  const PnPConfig& cfg, RandomSource& rng) {
    if (state.t >= cfg.maxIters) {
        throw RangeError("pnp_step: step " + std::to_string(state.t) + " beyond maxIters");
    }
    const double sigma = cfg.sigma(state.t);

    PnPState next;
    next.t = state.t + 1;
    next.x = prox_fidelity(obs, state.v - state.u, cfg.lambda);
    next.v = d(next.x + state.u, sigma);
    if (cfg.mode == Mode::stochastic) {
        next.v -= gaussian_field(rng, next.v.height(), next.v.width(), 1.0) *
                  cfg.inject_sigma(state.t);
    }
    if (cfg.variant == Variant::full_admm) {
        next.u = state.u + next.x - next.v;
    } else {
        next.u = ImageGrid(state.u.height(), state.u.width());
    }
    return next;
}

Trajectory run_pnp(const ImageGrid& v0, const Observation& obs, const Denoiser& d,
                   const PnPConfig& cfg, const std::optional<ImageGrid>& reference) {
    cfg.validate();
    obs.op.output_shape({v0.height(), v0.width()});
    if (reference) require_same_shape(*reference, v0, "run_pnp reference");

    RandomSource rng(cfg.seed);
    Trajectory traj;
    traj.iterates.push_back(v0);
    if (reference) traj.metrics.push_back(measure(v0, *reference, 0));

    const double stop_tol = cfg.earlyStopTolerance * (v0.l2_norm() > 0.0 ? v0.l2_norm() : 1.0);
    std::size_t quiet_steps = 0;
    PnPState state = initial_state(v0);
    while (state.t < cfg.maxIters) {
        const double sigma = cfg.sigma(state.t);
        state = pnp_step(state, obs, d, cfg, rng);
        const bool blown = escaped(state.v, cfg.divergenceThreshold);
        traj.push(state.v, sigma);
        if (reference) traj.metrics.push_back(measure(state.v, *reference, state.t));
        if (blown) {
            traj.terminated = Termination::diverged;
            return traj;
        }
        quiet_steps = traj.stepDiffs.back() < stop_tol ? quiet_steps + 1 : 0;
        if (cfg.earlyStop && quiet_steps >= cfg.earlyStopPatience) {
            traj.terminated = Termination::converged_early;
            return traj;
        }
    }
    traj.terminated = Termination::completed;
    return traj;
}

Ensemble run_pnp_ensemble(const ImageGrid& v0, const Observation& obs, const Denoiser& d,
                          const PnPConfig& cfg, std::size_t nTraj, std::uint64_t baseSeed,
                          std::size_t threads) {
    if (nTraj < 2) throw ParameterError("run_pnp_ensemble needs at least two trajectories");
    PnPConfig member = cfg;
    member.mode = Mode::stochastic;
    member.earlyStop = false;
    member.validate();
    Ensemble e;
    e.seeds.resize(nTraj);
    e.trajectories.resize(nTraj);
    for (std::size_t i = 0; i < nTraj; ++i) e.seeds[i] = derive_seed(baseSeed, i);
    parallel_for(nTraj, threads, [&](std::size_t i) {
        PnPConfig c = member;
        c.seed = e.seeds[i];
        e.trajectories[i] = run_pnp(v0, obs, d, c);
    });
    return e;
}

ImageGrid drift(const ImageGrid& v, const Observation& obs, const PnPConfig& cfg) {
    return prox_fidelity(obs, v, cfg.lambda) - v;
}

}  // namespace pnpsde
