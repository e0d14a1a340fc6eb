#include "pnpsde/sde.hpp"

#include "pnpsde/errors.hpp"
#include "pnpsde/pnp_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace pnpsde {

std::size_t SDEProblem::step_count() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("SDE dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ParameterError("SDE horizon must be positive");
    }
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
        throw ParameterError("SDE horizon / dt must be a positive whole number");
    }
    return static_cast<std::size_t>(rounded);
}

void SDEProblem::validate() const {
    if (!drift || !diffusion) throw ParameterError("SDE problem needs drift and diffusion");
    step_count();
}

SDEProblem make_pnp_sde(const Observation& obs, const PnPConfig& cfg,
                        const std::optional<Denoiser>& denoiser, double dt) {
    cfg.validate();
    SDEProblem prob;
    prob.dt = dt;
    prob.horizon = static_cast<double>(cfg.maxIters);
    prob.divergenceThreshold = cfg.divergenceThreshold;
    prob.diffusion = [cfg](double t) {
        return cfg.inject_sigma(static_cast<std::size_t>(std::floor(t + 1e-9)));
    };
    if (denoiser) {
        prob.drift = [obs, cfg, d = *denoiser](double t, const ImageGrid& v) {
            const double sigma = cfg.sigma(static_cast<std::size_t>(std::floor(t + 1e-9)));
            return d(prox_fidelity(obs, v, cfg.lambda), sigma) - v;
        };
    } else {
        prob.drift = [obs, cfg](double, const ImageGrid& v) { return drift(v, obs, cfg); };
    }
    return prob;
}

ImageGrid em_step(const ImageGrid& v, double t, const SDEProblem& prob, RandomSource& rng) {
    if (!(prob.dt > 0.0)) throw ParameterError("em_step: dt must be positive");
    ImageGrid b = prob.drift(t, v);
    require_same_shape(b, v, "em_step drift");
    if (!b.all_finite()) {
        throw NumericalError("em_step: non-finite drift at t = " + std::to_string(t));
    }
    const double scale = prob.diffusion(t) * std::sqrt(prob.dt);
    ImageGrid next = v + b * prob.dt;
    next -= gaussian_field(rng, v.height(), v.width(), 1.0) * scale;
    return next;
}

Trajectory simulate(const SDEProblem& prob, const ImageGrid& v0, std::uint64_t seed) {
    prob.validate();
    const std::size_t n = prob.step_count();
    RandomSource rng(seed);
    Trajectory traj;
    traj.iterates.reserve(n + 1);
    traj.iterates.push_back(v0);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * prob.dt;
        const double sigma = prob.diffusion(t);
        ImageGrid next = em_step(traj.iterates.back(), t, prob, rng);
        const bool blown = escaped(next, prob.divergenceThreshold);
        traj.push(std::move(next), sigma);
        if (blown) {
            traj.terminated = Termination::diverged;
            return traj;
        }
    }
    traj.terminated = Termination::completed;
    return traj;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        task(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

Ensemble simulate_ensemble(const SDEProblem& prob, const ImageGrid& v0, std::size_t nTraj,
                           std::uint64_t baseSeed, std::size_t threads) {
    if (nTraj < 2) throw ParameterError("simulate_ensemble needs at least two trajectories");
    prob.validate();
    Ensemble e;
    e.seeds.resize(nTraj);
    for (std::size_t i = 0; i < nTraj; ++i) e.seeds[i] = derive_seed(baseSeed, i);
    e.trajectories.resize(nTraj);
    parallel_for(nTraj, threads,
                 [&](std::size_t i) { e.trajectories[i] = simulate(prob, v0, e.seeds[i]); });
    return e;
}

}  // namespace pnpsde
