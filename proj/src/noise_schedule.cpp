#include "pnpsde/noise_schedule.hpp"

#include "pnpsde/errors.hpp"

#include <cmath>
#include <string>

namespace pnpsde {

std::string_view to_string(ScheduleKind kind) noexcept {
    switch (kind) {
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::linear_decay: return "linear-decay";
        case ScheduleKind::exponential_decay: return "exponential-decay";
    }
    return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
    if (name == "constant") return ScheduleKind::constant;
    if (name == "linear-decay" || name == "linear") return ScheduleKind::linear_decay;
    if (name == "exponential-decay" || name == "exponential") return ScheduleKind::exponential_decay;
    throw ParameterError("unknown schedule kind '" + std::string(name) + "'");
}

void NoiseSchedule::validate() const {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
        throw ParameterError("schedule sigma0 must be positive");
    }
    if (steps == 0) throw ParameterError("schedule steps must be positive");
    if (kind == ScheduleKind::constant) return;
    if (!(sigmaT >= 0.0) || !std::isfinite(sigmaT)) {
        throw ParameterError("schedule sigmaT must be nonnegative");
    }
    if (sigmaT > sigma0) {
        throw ParameterError("decaying schedule requires sigmaT <= sigma0");
    }
    if (kind == ScheduleKind::exponential_decay && sigmaT == 0.0) {
        throw ParameterError("exponential decay requires sigmaT > 0");
    }
}

double sigma_at(const NoiseSchedule& schedule, std::size_t t) {
    schedule.validate();
    if (t >= schedule.steps) {
        throw RangeError("sigma_at: step " + std::to_string(t) + " outside schedule of " +
                         std::to_string(schedule.steps) + " steps");
    }
    if (schedule.kind == ScheduleKind::constant || schedule.steps == 1) return schedule.sigma0;
    const double frac = static_cast<double>(t) / static_cast<double>(schedule.steps - 1);
    if (schedule.kind == ScheduleKind::linear_decay) {
        return schedule.sigma0 + (schedule.sigmaT - schedule.sigma0) * frac;
    }
    return schedule.sigma0 * std::pow(schedule.sigmaT / schedule.sigma0, frac);
}

}  // namespace pnpsde
