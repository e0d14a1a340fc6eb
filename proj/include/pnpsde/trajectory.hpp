#pragma once

#include "pnpsde/image_grid.hpp"
#include "pnpsde/metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace pnpsde {

enum class Termination { completed, diverged, converged_early };

std::string_view to_string(Termination t) noexcept;

/// Iterate sequence v^0 .. v^T with per-step bookkeeping.
///
/// stepDiffs[t] = ||v^{t+1} - v^t||_2 and sigmas[t] is the noise level used to
/// produce v^{t+1}; both have length iterates.size() - 1. `metrics`, when
/// filled, has one entry per iterate.
struct Trajectory {
    std::vector<ImageGrid> iterates;
    std::vector<double> stepDiffs;
    std::vector<double> sigmas;
    std::vector<MetricSample> metrics;
    Termination terminated = Termination::completed;

    std::size_t steps() const noexcept { return stepDiffs.size(); }
    const ImageGrid& terminal() const { return iterates.back(); }

    /// Appends v^{t+1}; computes the step difference from the previous iterate.
    void push(ImageGrid next, double sigma);
};

/// Independent trajectories sharing v0 and dynamics; member i was driven by seeds[i].
struct Ensemble {
    std::vector<Trajectory> trajectories;
    std::vector<std::uint64_t> seeds;
};

/// Fills traj.metrics with PSNR/SSIM of every iterate against `reference`.
void attach_metrics(Trajectory& traj, const ImageGrid& reference, double peak = 1.0);

/// Whether any entry is non-finite or exceeds `threshold` in absolute value.
bool escaped(const ImageGrid& v, double threshold) noexcept;

}  // namespace pnpsde
