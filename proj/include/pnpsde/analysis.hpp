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
#include <string_view>
#include <vector>

namespace pnpsde {

using GridMap = std::function<ImageGrid(const ImageGrid&)>;

struct LipschitzOptions {
    /// Refinement steps of the finite-difference power iteration per probe.
    std::size_t powerSteps = 30;
    /// RMS size of the probing perturbation.
    double perturbation = 1e-3;
    /// Corpus points at which a finite-difference Jacobian is formed. Its top
    /// right singular vector gives a probe direction that forward iteration
    /// cannot reach for non-normal maps.
    std::size_t jacobianProbes = 1;
    /// Jacobian probes are skipped for grids with more pixels than this.
    std::size_t jacobianMaxPixels = 1024;
};

/// Sampled lower bound on the Lipschitz constant of `map` in the l2 norm.
///
/// Takes the largest ratio ||map(a) - map(b)|| / ||a - b|| observed over
/// `nPairs` random corpus pairs and `nPairs` perturbation probes. Each probe
/// starts from a random direction around a corpus point and is refined by
/// repeatedly replacing the direction with its (rescaled) image difference,
/// which drives the ratio towards the dominant local gain. On small grids a
/// finite-difference Jacobian supplies one more probe direction per
/// Jacobian probe. Only ratios of actually evaluated pairs are reported.
/// Coincident pairs are skipped; InsufficientDataError if every pair is
/// degenerate.
double estimate_lipschitz(const GridMap& map, const std::vector<ImageGrid>& corpus,
                          std::size_t nPairs, RandomSource& rng,
                          const LipschitzOptions& options = {});

enum class Regime { strong, weak, none };
enum class BoundNorm { sup, l2 };

std::string_view to_string(Regime regime) noexcept;
std::string_view to_string(BoundNorm norm) noexcept;
BoundNorm parse_bound_norm(std::string_view name);

struct ConvergenceCertificate {
    double hLipschitz = 0.0;    ///< estimated K + 1 for the data step h
    double dLipschitz = 0.0;    ///< estimated a for the denoiser
    double driftBound = 0.0;    ///< estimated kappa >= |h(v) - v|
    std::optional<double> denoiserBound;  ///< estimated alpha >= |D(x, sigma)|
    double residualBoundC = 0.0;          ///< C in |D(x, sigma) - x| <= sigma C
    Regime regime = Regime::none;
};

struct BoundsOptions {
    std::size_t lipschitzPairs = 6;
    LipschitzOptions lipschitz{};
    BoundNorm norm = BoundNorm::sup;
    std::uint64_t seed = 0;
};

/// Evaluates the strong (Lipschitz) and weak (bounded) convergence conditions
/// on a corpus.
///
/// Drift, denoiser output and residual bounds are collected while iterating
/// the deterministic map v -> D(h(v), sigma_t) from every corpus image for the
/// configured number of steps, so each schedule level is visited. The
/// denoiser bound is absent as soon as any evaluation escapes the divergence
/// threshold. Regimes: strong needs a < 1, finite K + 1 and the weak
/// conditions; weak needs a finite drift bound and a denoiser bound.
/// Nothing is thrown for unbounded behaviour; it is reported.
ConvergenceCertificate check_bounds(const Denoiser& d, const Observation& obs,
                                    const PnPConfig& cfg, const std::vector<ImageGrid>& corpus,
                                    const BoundsOptions& options = {});

inline constexpr double kCauchySlack = 0.10;
/// Step differences below this many ulps of the iterate norm are rounding noise.
inline constexpr double kRoundoffUlps = 64.0;

/// True iff the trajectory did not diverge, every one of the last `window`
/// step differences is below `tol`, and they are nonincreasing up to 10%
/// slack. Differences at the rounding floor are exempt from the monotonicity
/// check. InsufficientDataError if there are fewer than window + 1 iterates.
bool detect_cauchy(const Trajectory& traj, double tol, std::size_t window);

struct LawThresholds {
    /// Defaults to 3x the Monte-Carlo std of the mean difference.
    std::optional<double> tauMean;
    /// Defaults to 3x the null-level energy distance predicted by split halves.
    std::optional<double> tauEnergy;
};

struct LawComparison {
    double meanDistance = 0.0;   ///< RMS over pixels of the ensemble-mean difference
    double varianceRatio = 1.0;  ///< pooled per-pixel variance of e2 over that of e1
    double energyDistance = 0.0; ///< between pooled terminal pixel samples
    double tauMean = 0.0;
    double tauEnergy = 0.0;
    bool samePass = false;
};

/// Compares the terminal-iterate laws of two ensembles.
LawComparison compare_laws(const Ensemble& e1, const Ensemble& e2,
                           const LawThresholds& thresholds = {});

/// Energy distance (V-statistic) between two scalar samples, O(n log n).
double energy_distance(std::vector<double> a, std::vector<double> b);

/// Dense matrix of a linear grid map on height x width inputs, row-major
/// (n x n, n = height * width), built column by column from basis images.
std::vector<double> materialize_linear(const GridMap& map, std::size_t height, std::size_t width);

}  // namespace pnpsde
