#include "pnpsde/pnp_config.hpp"

#include "pnpsde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pnpsde {

std::string_view to_string(Mode mode) noexcept {
    return mode == Mode::deterministic ? "deterministic" : "stochastic";
}

std::string_view to_string(Variant variant) noexcept {
    return variant == Variant::simplified ? "simplified" : "full-admm";
}

Mode parse_mode(std::string_view name) {
    if (name == "deterministic") return Mode::deterministic;
    if (name == "stochastic") return Mode::stochastic;
    throw ParameterError("unknown mode '" + std::string(name) + "'");
}

Variant parse_variant(std::string_view name) {
    if (name == "simplified") return Variant::simplified;
    if (name == "full-admm" || name == "admm") return Variant::full_admm;
    throw ParameterError("unknown variant '" + std::string(name) + "'");
}

double PnPConfig::base_sigma() const { return std::sqrt(gamma) * lambda; }

double PnPConfig::alpha_sigma() const { return std::sqrt(alphaRatio * gamma); }

double PnPConfig::sigma(std::size_t t) const {
    return sigma_at(schedule, std::min(t, schedule.steps - 1));
}

double PnPConfig::inject_sigma(std::size_t t) const {
    return sigmaInject ? *sigmaInject : sigma(t);
}

void PnPConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive");
    if (!(alphaRatio > 0.0) || !std::isfinite(alphaRatio)) {
        throw ParameterError("alphaRatio must be positive");
    }
    if (maxIters == 0) throw ParameterError("maxIters must be positive");
    schedule.validate();
    if (sigmaInject && (!(*sigmaInject >= 0.0) || !std::isfinite(*sigmaInject))) {
        throw ParameterError("sigmaInject must be nonnegative");
    }
    if (!(divergenceThreshold > 0.0)) throw ParameterError("divergenceThreshold must be positive");
    if (earlyStop && (earlyStopPatience == 0 || !(earlyStopTolerance > 0.0))) {
        throw ParameterError("early stop needs positive tolerance and patience");
    }
}

}  // namespace pnpsde
