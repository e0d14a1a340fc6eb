#pragma once

#include <cstddef>
#include <string_view>

namespace pnpsde {

enum class ScheduleKind { constant, linear_decay, exponential_decay };

std::string_view to_string(ScheduleKind kind) noexcept;
ScheduleKind parse_schedule_kind(std::string_view name);

/// Per-iteration noise level sigma_t.
///
/// constant:          sigma_t = sigma0
/// linear_decay:      sigma_t = sigma0 + (sigmaT - sigma0) * t / (steps - 1)
/// exponential_decay: sigma_t = sigma0 * (sigmaT / sigma0)^(t / (steps - 1))
///
/// With steps == 1 every kind yields sigma0. Exponential decay needs
/// sigmaT > 0; linear decay accepts sigmaT == 0 (last step is then noiseless).
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::constant;
    double sigma0 = 0.1;
    double sigmaT = 0.1;
    std::size_t steps = 1;

    /// Throws ParameterError when the fields are inconsistent.
    void validate() const;
};

/// Throws RangeError unless t < schedule.steps.
double sigma_at(const NoiseSchedule& schedule, std::size_t t);

}  // namespace pnpsde
