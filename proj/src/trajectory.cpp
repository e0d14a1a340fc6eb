#include "pnpsde/trajectory.hpp"

#include "pnpsde/errors.hpp"

#include <cmath>

namespace pnpsde {

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::diverged: return "diverged";
        case Termination::converged_early: return "converged-early";
    }
    return "unknown";
}

void Trajectory::push(ImageGrid next, double sigma) {
    if (iterates.empty()) throw InsufficientDataError("trajectory has no initial iterate");
    stepDiffs.push_back((next - iterates.back()).l2_norm());
    sigmas.push_back(sigma);
    iterates.push_back(std::move(next));
}

void attach_metrics(Trajectory& traj, const ImageGrid& reference, double peak) {
    traj.metrics.clear();
    traj.metrics.reserve(traj.iterates.size());
    for (std::size_t t = 0; t < traj.iterates.size(); ++t) {
        traj.metrics.push_back(measure(traj.iterates[t], reference, t, peak));
    }
}

bool escaped(const ImageGrid& v, double threshold) noexcept {
    for (double x : v.values()) {
        if (!std::isfinite(x) || std::abs(x) > threshold) return true;
    }
    return false;
}

}  // namespace pnpsde
