#include "pnpsde/analysis.hpp"

#include "pnpsde/errors.hpp"
#include "pnpsde/pnp_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pnpsde {

std::string_view to_string(Regime regime) noexcept {
    switch (regime) {
        case Regime::strong: return "strong";
        case Regime::weak: return "weak";
        case Regime::none: return "none";
    }
    return "unknown";
}

std::string_view to_string(BoundNorm norm) noexcept {
    return norm == BoundNorm::sup ? "sup" : "l2";
}

BoundNorm parse_bound_norm(std::string_view name) {
    if (name == "sup") return BoundNorm::sup;
    if (name == "l2") return BoundNorm::l2;
    throw ParameterError("unknown bound norm '" + std::string(name) + "'");
}

namespace {

// Ratio of output to input difference; nullopt for coincident inputs.
std::optional<double> gain(const ImageGrid& in_a, const ImageGrid& in_b, const ImageGrid& out_a,
                           const ImageGrid& out_b) {
    const double den = (in_b - in_a).l2_norm();
    if (den == 0.0) return std::nullopt;
    const double num = (out_b - out_a).l2_norm();
    if (!std::isfinite(num)) return std::numeric_limits<double>::infinity();
    return num / den;
}

// Top right singular vector of the finite-difference Jacobian of `map` at base.
ImageGrid jacobian_direction(const GridMap& map, const ImageGrid& base, const ImageGrid& fbase,
                             double eps, RandomSource& rng) {
    const std::size_t n = base.size();
    std::size_t m = 0;
    std::vector<double> jac;  // column-major, m x n
    for (std::size_t k = 0; k < n; ++k) {
        ImageGrid probe = base;
        probe[k] += eps;
        const ImageGrid col = map(probe) - fbase;
        if (k == 0) {
            m = col.size();
            jac.resize(m * n);
        }
        for (std::size_t r = 0; r < m; ++r) jac[k * m + r] = col[r] / eps;
    }
    ImageGrid v = gaussian_field(rng, base.height(), base.width(), 1.0);
    std::vector<double> jv(m);
    for (int it = 0; it < 100; ++it) {
        std::fill(jv.begin(), jv.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t r = 0; r < m; ++r) jv[r] += jac[k * m + r] * v[k];
        }
        for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += jac[k * m + r] * jv[r];
            v[k] = acc;
        }
        const double len = v.l2_norm();
        if (len == 0.0 || !std::isfinite(len)) break;
        v *= 1.0 / len;
    }
    return v;
}

double norm_of(const ImageGrid& g, BoundNorm norm) {
    return norm == BoundNorm::sup ? g.sup_norm() : g.l2_norm();
}

}  // namespace

double estimate_lipschitz(const GridMap& map, const std::vector<ImageGrid>& corpus,
                          std::size_t nPairs, RandomSource& rng, const LipschitzOptions& options) {
    if (corpus.empty()) throw InsufficientDataError("estimate_lipschitz: empty corpus");
    if (nPairs == 0) throw ParameterError("estimate_lipschitz: nPairs must be positive");
    for (const auto& x : corpus) require_same_shape(x, corpus.front(), "estimate_lipschitz corpus");

    const auto pick = [&](std::size_t n) {
        return static_cast<std::size_t>(rng.next_u64() % n);
    };

    std::vector<ImageGrid> images;
    images.reserve(corpus.size());
    for (const auto& x : corpus) images.push_back(map(x));

    double best = 0.0;
    std::size_t valid = 0;
    const auto record = [&](std::optional<double> r) {
        if (!r) return;
        ++valid;
        best = std::max(best, *r);
    };

    if (corpus.size() >= 2) {
        for (std::size_t k = 0; k < nPairs; ++k) {
            const std::size_t i = pick(corpus.size());
            std::size_t j = pick(corpus.size() - 1);
            if (j >= i) ++j;
            record(gain(corpus[i], corpus[j], images[i], images[j]));
        }
    }

    const std::size_t h = corpus.front().height();
    const std::size_t w = corpus.front().width();
    const double step = options.perturbation * std::sqrt(static_cast<double>(h * w));
    for (std::size_t k = 0; k < nPairs; ++k) {
        const std::size_t i = pick(corpus.size());
        const ImageGrid& base = corpus[i];
        const ImageGrid& fbase = images[i];
        ImageGrid dir = gaussian_field(rng, h, w, 1.0);
        for (std::size_t s = 0; s <= options.powerSteps; ++s) {
            const double len = dir.l2_norm();
            if (len == 0.0 || !std::isfinite(len)) break;
            const ImageGrid probe = base + dir * (step / len);
            const ImageGrid fprobe = map(probe);
            const auto r = gain(base, probe, fbase, fprobe);
            record(r);
            if (!r || !std::isfinite(*r)) break;
            dir = fprobe - fbase;
        }
    }

    if (h * w <= options.jacobianMaxPixels) {
        for (std::size_t k = 0; k < options.jacobianProbes; ++k) {
            const std::size_t i = pick(corpus.size());
            const ImageGrid dir = jacobian_direction(map, corpus[i], images[i], options.perturbation, rng);
            const double len = dir.l2_norm();
            if (len == 0.0 || !std::isfinite(len)) continue;
            const ImageGrid probe = corpus[i] + dir * (step / len);
            record(gain(corpus[i], probe, images[i], map(probe)));
        }
    }

    if (valid == 0) throw InsufficientDataError("estimate_lipschitz: all sampled pairs coincide");
    return best;
}

ConvergenceCertificate check_bounds(const Denoiser& d, const Observation& obs,
                                    const PnPConfig& cfg, const std::vector<ImageGrid>& corpus,
                                    const BoundsOptions& options) {
    if (corpus.empty()) throw InsufficientDataError("check_bounds: empty corpus");
    cfg.validate();
    RandomSource rng(options.seed);
    ConvergenceCertificate cert;

    const GridMap h_map = [&](const ImageGrid& v) { return prox_fidelity(obs, v, cfg.lambda); };
    cert.hLipschitz =
        estimate_lipschitz(h_map, corpus, options.lipschitzPairs, rng, options.lipschitz);

    bool bounded = true;
    double drift_bound = 0.0;
    double denoiser_bound = 0.0;
    double residual_c = 0.0;
    for (const auto& start : corpus) {
        ImageGrid v = start;
        for (std::size_t t = 0; t < cfg.maxIters; ++t) {
            const double sigma = cfg.sigma(t);
            const ImageGrid x = h_map(v);
            const double b = norm_of(x - v, options.norm);
            drift_bound = std::isfinite(b) ? std::max(drift_bound, b)
                                           : std::numeric_limits<double>::infinity();
            ImageGrid out = d(x, sigma);
            if (escaped(out, cfg.divergenceThreshold)) {
                bounded = false;
                break;
            }
            denoiser_bound = std::max(denoiser_bound, norm_of(out, options.norm));
            if (sigma > 0.0) {
                residual_c = std::max(residual_c, norm_of(out - x, options.norm) / sigma);
            }
            v = std::move(out);
        }
    }
    cert.driftBound = drift_bound;
    cert.residualBoundC = residual_c;
    if (bounded) cert.denoiserBound = denoiser_bound;

    // Denoiser gain at the first, middle and last noise levels, probed around
    // both the corpus and its data-consistent images.
    std::vector<ImageGrid> d_corpus = corpus;
    for (const auto& v : corpus) d_corpus.push_back(h_map(v));
    const std::size_t last = cfg.maxIters - 1;
    std::vector<std::size_t> levels{0, last / 2, last};
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double a = 0.0;
    for (std::size_t t : levels) {
        const double sigma = cfg.sigma(t);
        const GridMap d_map = [&](const ImageGrid& x) { return d(x, sigma); };
        a = std::max(a, estimate_lipschitz(d_map, d_corpus, options.lipschitzPairs, rng,
                                           options.lipschitz));
    }
    cert.dLipschitz = a;

    const bool weak = std::isfinite(cert.driftBound) && cert.denoiserBound.has_value();
    const bool strong = weak && cert.dLipschitz < 1.0 && std::isfinite(cert.hLipschitz);
    cert.regime = strong ? Regime::strong : (weak ? Regime::weak : Regime::none);
    return cert;
}

bool detect_cauchy(const Trajectory& traj, double tol, std::size_t window) {
    if (window == 0) throw ParameterError("detect_cauchy: window must be positive");
    if (traj.iterates.size() < window + 1) {
        throw InsufficientDataError("detect_cauchy: need at least " + std::to_string(window + 1) +
                                    " iterates, have " + std::to_string(traj.iterates.size()));
    }
    if (traj.terminated == Termination::diverged) return false;
    const auto& diffs = traj.stepDiffs;
    const std::size_t begin = diffs.size() - window;
    for (std::size_t i = begin; i < diffs.size(); ++i) {
        if (!(diffs[i] < tol)) return false;
        const double floor = kRoundoffUlps * std::numeric_limits<double>::epsilon() *
                             std::max(1.0, traj.iterates[i + 1].l2_norm());
        if (i > begin && diffs[i] > floor && diffs[i] > (1.0 + kCauchySlack) * diffs[i - 1]) return false;
    }
    return true;
}

namespace {

// Sum over unordered pairs of |a_i - a_j| for sorted a.
long double pair_sum(const std::vector<double>& sorted) {
    long double acc = 0.0L;
    const auto n = static_cast<long double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        acc += static_cast<long double>(sorted[i]) * (2.0L * static_cast<long double>(i) - n + 1.0L);
    }
    return acc;
}

struct Moments {
    std::vector<double> mean;
    std::vector<double> variance;  // unbiased, per pixel
    std::size_t count = 0;
};

Moments terminal_moments(const std::vector<Trajectory>& trajs, std::size_t begin, std::size_t end) {
    Moments m;
    m.count = end - begin;
    const std::size_t n = trajs[begin].terminal().size();
    m.mean.assign(n, 0.0);
    m.variance.assign(n, 0.0);
    for (std::size_t k = begin; k < end; ++k) {
        const ImageGrid& v = trajs[k].terminal();
        for (std::size_t p = 0; p < n; ++p) m.mean[p] += v[p];
    }
    for (double& x : m.mean) x /= static_cast<double>(m.count);
    if (m.count > 1) {
        for (std::size_t k = begin; k < end; ++k) {
            const ImageGrid& v = trajs[k].terminal();
            for (std::size_t p = 0; p < n; ++p) {
                const double d = v[p] - m.mean[p];
                m.variance[p] += d * d;
            }
        }
        for (double& x : m.variance) x /= static_cast<double>(m.count - 1);
    }
    return m;
}

std::vector<double> pooled(const std::vector<Trajectory>& trajs, std::size_t begin,
                           std::size_t end) {
    std::vector<double> out;
    for (std::size_t k = begin; k < end; ++k) {
        const auto vals = trajs[k].terminal().values();
        out.insert(out.end(), vals.begin(), vals.end());
    }
    return out;
}

// Null-level energy distance per unit (1/n + 1/m), estimated from split halves.
double split_half_scale(const std::vector<Trajectory>& trajs) {
    const std::size_t n = trajs.size();
    const std::size_t half = n / 2;
    const double e = energy_distance(pooled(trajs, 0, half), pooled(trajs, half, n));
    const double unit = 1.0 / static_cast<double>(half) + 1.0 / static_cast<double>(n - half);
    return e / unit;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

double energy_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InsufficientDataError("energy_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) return 0.0;
    std::vector<double> z;
    z.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(z));
    const long double pa = pair_sum(a);
    const long double pb = pair_sum(b);
    const long double cross = pair_sum(z) - pa - pb;
    const auto n = static_cast<long double>(a.size());
    const auto m = static_cast<long double>(b.size());
    const long double e = 2.0L * cross / (n * m) - 2.0L * pa / (n * n) - 2.0L * pb / (m * m);
    return std::max(0.0, static_cast<double>(e));
}

LawComparison compare_laws(const Ensemble& e1, const Ensemble& e2,
                           const LawThresholds& thresholds) {
    if (e1.trajectories.size() < 2 || e2.trajectories.size() < 2) {
        throw InsufficientDataError("compare_laws: each ensemble needs at least two trajectories");
    }
    const ImageGrid& ref = e1.trajectories.front().terminal();
    std::size_t steps1 = 0, steps2 = 0;
    for (const auto* e : {&e1, &e2}) {
        for (const auto& t : e->trajectories) {
            require_same_shape(t.terminal(), ref, "compare_laws");
        }
    }
    for (const auto& t : e1.trajectories) steps1 = std::max(steps1, t.steps());
    for (const auto& t : e2.trajectories) steps2 = std::max(steps2, t.steps());
    if (steps1 != steps2) throw DimensionError("compare_laws: ensembles differ in step count");

    const std::size_t n1 = e1.trajectories.size();
    const std::size_t n2 = e2.trajectories.size();
    const Moments m1 = terminal_moments(e1.trajectories, 0, n1);
    const Moments m2 = terminal_moments(e2.trajectories, 0, n2);

    LawComparison out;
    const std::size_t pixels = m1.mean.size();
    double sq = 0.0, mc = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
        const double d = m1.mean[p] - m2.mean[p];
        sq += d * d;
        mc += m1.variance[p] / static_cast<double>(n1) + m2.variance[p] / static_cast<double>(n2);
    }
    out.meanDistance = std::sqrt(sq / static_cast<double>(pixels));
    const double v1 = mean_of(m1.variance);
    const double v2 = mean_of(m2.variance);
    if (v1 == 0.0) {
        out.varianceRatio = v2 == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    } else {
        out.varianceRatio = v2 / v1;
    }
    out.energyDistance =
        energy_distance(pooled(e1.trajectories, 0, n1), pooled(e2.trajectories, 0, n2));

    out.tauMean = thresholds.tauMean ? *thresholds.tauMean
                                     : 3.0 * std::sqrt(mc / static_cast<double>(pixels));
    if (thresholds.tauEnergy) {
        out.tauEnergy = *thresholds.tauEnergy;
    } else {
        const double unit = 0.5 * (split_half_scale(e1.trajectories) +
                                   split_half_scale(e2.trajectories));
        out.tauEnergy =
            3.0 * unit * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));
    }
    const bool mean_ok = out.meanDistance == 0.0 || out.meanDistance < out.tauMean;
    const bool energy_ok = out.energyDistance == 0.0 || out.energyDistance < out.tauEnergy;
    out.samePass = mean_ok && energy_ok;
    return out;
}

std::vector<double> materialize_linear(const GridMap& map, std::size_t height, std::size_t width) {
    const std::size_t n = height * width;
    std::vector<double> m(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        ImageGrid e(height, width);
        e[j] = 1.0;
        const ImageGrid col = map(e);
        require_same_shape(col, e, "materialize_linear");
        for (std::size_t i = 0; i < n; ++i) m[i * n + j] = col[i];
    }
    return m;
}

}  // namespace pnpsde
