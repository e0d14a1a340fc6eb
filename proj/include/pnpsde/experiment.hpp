#pragma once

#include "pnpsde/analysis.hpp"
#include "pnpsde/denoiser.hpp"
#include "pnpsde/forward_model.hpp"
#include "pnpsde/io.hpp"
#include "pnpsde/pnp_config.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pnpsde {

enum class Task { denoise, inpaint, deblur, superres };

std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view name);

struct ImageSpec {
    std::string phantom = "disk";  ///< used when `path` is empty
    std::string path;
    std::size_t height = 32;
    std::size_t width = 32;
};

struct OperatorSpec {
    double keep = 0.5;          ///< inpaint: probability a pixel is observed
    std::size_t kernelRadius = 2;  ///< deblur: Gaussian kernel half-width
    double kernelStd = 1.0;
    std::size_t factor = 2;     ///< superres: block size
};

struct DenoiserSpec {
    std::string kind = "tv";  ///< tv, gaussian, median, linear, identity, amplifier
    double gain = 1.5;        ///< amplifier
    double scale = 0.9;       ///< linear
    std::size_t stencilRadius = 1;  ///< linear: box stencil half-width
    std::size_t tvIterations = 100;
    double tvWeightScale = 1.0;
    double gaussianWidthScale = 2.0;
    std::optional<double> clampLo;  ///< both set -> clamp-wrap the denoiser
    std::optional<double> clampHi;
};

struct CertifySpec {
    std::size_t starts = 10;
    double cauchyTol = 1e-6;
    std::size_t cauchyWindow = 10;
    std::size_t ensembleSize = 32;
    std::size_t lipschitzPairs = 6;
    BoundNorm norm = BoundNorm::sup;
};

struct ExperimentConfig {
    Task task = Task::inpaint;
    ImageSpec image{};
    OperatorSpec op{};
    double noiseSigma = 0.05;
    DenoiserSpec denoiser{};
    PnPConfig pnp{};
    std::size_t ensemble = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t dumpEvery = 0;
    std::vector<double> alphas{0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
    CertifySpec certify{};
    std::string output = "out";
};

/// Parses a config object; unknown or mistyped fields raise ConfigError naming
/// the field. Missing fields keep their defaults. The schedule length always
/// follows pnp.maxIters.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Reads a JSON config file; // and /* */ comments are allowed.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Commented config listing every field with its default.
std::string config_template();

struct Problem {
    ImageGrid clean;
    Observation obs;
    Denoiser denoiser;
    ImageGrid v0;
};

/// Builds the clean image, degraded observation, denoiser and initial iterate.
/// Degradation draws from derive_seed(seed, 0).
Problem build_problem(const ExperimentConfig& cfg);
Denoiser build_denoiser(const DenoiserSpec& opts);
/// Engine config with seed derive_seed(cfg.seed, 1) and schedule length maxIters.
PnPConfig engine_config(const ExperimentConfig& cfg);

struct RunOptions {
    std::filesystem::path outDir;
    std::ostream* log = nullptr;
};

/// Runs one trajectory (ensemble == 1) or an ensemble and writes
/// trajectory.csv (or trajectory_NNN.csv per member), record.json and optional
/// PGM snapshots. Divergence is recorded in the status, not thrown.
ExperimentRecord cmd_run(const ExperimentConfig& cfg, const RunOptions& options);

struct SweepRow {
    double alpha = 0.0;
    double sigma0 = 0.0;
    double terminalPsnr = 0.0;
    double terminalSsim = 0.0;
    std::string status;
};

/// One run per alpha with sigma0 = sqrt(alpha * gamma) (sigmaT scaled by the
/// same factor); writes sweep_alpha.csv. UsageError for an empty list or a
/// nonpositive alpha.
std::vector<SweepRow> cmd_sweep_alpha(const ExperimentConfig& cfg, const std::vector<double>& alphas,
                                      const RunOptions& options);

struct CertifyReport {
    ConvergenceCertificate certificate;
    std::string experiment;  ///< cauchy, law-comparison or divergence
    bool agreement = false;
    nlohmann::json details;
};

/// check_bounds over the phantom corpus, then the soundness experiment that
/// matches the regime. Writes certificate.json.
CertifyReport cmd_certify(const ExperimentConfig& cfg, const RunOptions& options);

}  // namespace pnpsde
