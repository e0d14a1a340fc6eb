#include "oracles.hpp"

#include "pnpsde/analysis.hpp"
#include "pnpsde/errors.hpp"
#include "pnpsde/io.hpp"
#include "pnpsde/pnp_engine.hpp"
#include "pnpsde/sde.hpp"

#include <doctest.h>

#include <cmath>

using namespace pnpsde;

namespace {

ImageGrid unit_grid(RandomSource& rng, std::size_t h, std::size_t w) {
    ImageGrid g(h, w);
    for (double& v : g.values()) v = rng.uniform();
    return g;
}

std::vector<ImageGrid> phantoms(std::size_t h, std::size_t w) {
    return {synth_phantom(PhantomKind::ramp, h, w), synth_phantom(PhantomKind::disk, h, w),
            synth_phantom(PhantomKind::piecewise, h, w)};
}

PnPConfig constant_config(double sigma, std::size_t iters) {
    PnPConfig cfg;
    cfg.schedule = {ScheduleKind::constant, sigma, sigma, iters};
    cfg.maxIters = iters;
    return cfg;
}

Trajectory from_diffs(const std::vector<double>& diffs) {
    Trajectory t;
    double x = 0.0;
    t.iterates.push_back(ImageGrid(1, 1, x));
    for (double d : diffs) {
        x += d;
        t.push(ImageGrid(1, 1, x), 0.0);
    }
    return t;
}

SDEProblem diffusion_problem(double s) {
    SDEProblem p;
    p.drift = [](double, const ImageGrid& v) { return ImageGrid(v.height(), v.width()); };
    p.diffusion = [s](double) { return s; };
    p.horizon = 1.0;
    p.dt = 0.1;
    return p;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("lipschitz of the identity map") {
    RandomSource rng(1);
    const double est = estimate_lipschitz([](const ImageGrid& x) { return x; }, phantoms(8, 8), 10, rng);
    CHECK(est >= 1.0 - 1e-9);
    CHECK(est <= 1.0);
}

TEST_CASE("lipschitz of doubling is exactly two") {
    RandomSource rng(2);
    CHECK(estimate_lipschitz([](const ImageGrid& x) { return x * 2.0; }, phantoms(8, 8), 10, rng) == 2.0);
}

TEST_CASE("lipschitz of a blended smoothing denoiser matches power iteration") {
    const std::size_t n = 8;
    const Denoiser d = Denoiser::linear_stencil(box_kernel(1));
    const GridMap map = [&](const ImageGrid& x) { return d(x, 0.5); };
    oracle::Dense m{n * n, n * n, materialize_linear(map, n, n)};
    // Independent construction: 0.5 I + 0.5 A with A the circulant box filter.
    const auto a = oracle::circular_convolution(box_kernel(1), n, n);
    for (std::size_t i = 0; i < n * n; ++i) {
        for (std::size_t j = 0; j < n * n; ++j) {
            CHECK(m.at(i, j) == doctest::Approx(0.5 * a.at(i, j) + (i == j ? 0.5 : 0.0)).epsilon(1e-14));
        }
    }
    const double truth = oracle::spectral_norm(m);
    RandomSource rng(3);
    const double est = estimate_lipschitz(map, phantoms(n, n), 6, rng);
    CHECK(std::abs(est - truth) <= 0.05 * truth);
}

TEST_CASE("lipschitz of a composition is bounded by the product") {
    RandomSource rng(4);
    const Denoiser f = Denoiser::linear_stencil(box_kernel(1), 0.8);
    const Denoiser g = Denoiser::linear_stencil(gaussian_kernel(1, 1.0), 1.2);
    const GridMap fm = [&](const ImageGrid& x) { return f(x, 0.6); };
    const GridMap gm = [&](const ImageGrid& x) { return g(x, 0.3); };
    const GridMap fg = [&](const ImageGrid& x) { return fm(gm(x)); };
    const auto corpus = phantoms(8, 8);
    const double ef = estimate_lipschitz(fm, corpus, 6, rng);
    const double eg = estimate_lipschitz(gm, corpus, 6, rng);
    const double efg = estimate_lipschitz(fg, corpus, 6, rng);
    CHECK(efg <= ef * eg * 1.1);
}

TEST_CASE("lipschitz rejects degenerate input") {
    RandomSource rng(5);
    CHECK_THROWS_AS(estimate_lipschitz([](const ImageGrid& x) { return x; }, {}, 3, rng), InsufficientDataError);
    // A single point with a zero-length probe direction cannot form a pair.
    LipschitzOptions opts;
    opts.perturbation = 0.0;
    CHECK_THROWS_AS(estimate_lipschitz([](const ImageGrid& x) { return x; }, {ImageGrid(2, 2)}, 3, rng, opts),
                    InsufficientDataError);
}

TEST_CASE("check_bounds: identity denoiser sits on the boundary") {
    RandomSource rng(6);
    const Observation obs = degrade(MeasurementOp::identity(), synth_phantom(PhantomKind::disk, 8, 8), 0.0, rng);
    const auto corpus = phantoms(8, 8);
    const ConvergenceCertificate id = check_bounds(Denoiser::identity(), obs, constant_config(0.1, 10), corpus);
    CHECK(id.dLipschitz == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(id.regime == Regime::weak);
    REQUIRE(id.denoiserBound.has_value());
    CHECK(*id.denoiserBound <= 1.0 + 1e-12);
    CHECK(id.hLipschitz <= 1.0);

    const ConvergenceCertificate blend =
        check_bounds(Denoiser::linear_stencil(box_kernel(1), 0.9), obs, constant_config(0.1, 10), corpus);
    CHECK(blend.dLipschitz <= 0.9 + 1e-9);
    CHECK(blend.regime == Regime::strong);
}

TEST_CASE("check_bounds: amplifier has no bound") {
    RandomSource rng(7);
    const Observation obs = degrade(MeasurementOp::identity(), synth_phantom(PhantomKind::disk, 8, 8), 0.0, rng);
    PnPConfig cfg = constant_config(0.1, 100);
    cfg.lambda = 0.5;
    const ConvergenceCertificate c = check_bounds(Denoiser::amplifier(1.5), obs, cfg, phantoms(8, 8));
    CHECK_FALSE(c.denoiserBound.has_value());
    CHECK(c.regime == Regime::none);
    CHECK(c.dLipschitz == doctest::Approx(1.5));
}

TEST_CASE("check_bounds: clamped amplifier is weak with bound one") {
    RandomSource rng(8);
    const ImageGrid clean = synth_phantom(PhantomKind::disk, 8, 8);
    const Observation obs = degrade(MeasurementOp::random_mask(8, 8, 0.5, rng), clean, 0.0, rng);
    PnPConfig cfg = constant_config(0.1, 30);
    cfg.lambda = 0.5;
    const ConvergenceCertificate c =
        check_bounds(clamp_wrap(Denoiser::amplifier(1.5), 0.0, 1.0), obs, cfg, phantoms(8, 8));
    REQUIRE(c.denoiserBound.has_value());
    CHECK(*c.denoiserBound == 1.0);
    CHECK(std::isfinite(c.driftBound));
    CHECK(c.regime == Regime::weak);
}

TEST_CASE("check_bounds drift bound matches direct evaluation for the first step") {
    RandomSource rng(9);
    const Observation obs = degrade(MeasurementOp::identity(), unit_grid(rng, 6, 6), 0.0, rng);
    const auto corpus = phantoms(6, 6);
    PnPConfig cfg = constant_config(0.1, 1);
    double expected = 0.0;
    for (const auto& v : corpus) expected = std::max(expected, drift(v, obs, cfg).sup_norm());
    const ConvergenceCertificate c = check_bounds(Denoiser::identity(), obs, cfg, corpus);
    CHECK(c.driftBound == expected);
    BoundsOptions l2;
    l2.norm = BoundNorm::l2;
    double expected_l2 = 0.0;
    for (const auto& v : corpus) expected_l2 = std::max(expected_l2, drift(v, obs, cfg).l2_norm());
    CHECK(check_bounds(Denoiser::identity(), obs, cfg, corpus, l2).driftBound == expected_l2);
}

TEST_CASE("strong certificates are sound on random starts") {
    RandomSource rng(10);
    const ImageGrid clean = synth_phantom(PhantomKind::disk, 16, 16);
    const Observation obs = degrade(MeasurementOp::random_mask(16, 16, 0.5, rng), clean, 0.05, rng);
    PnPConfig cfg = constant_config(0.2, 250);
    cfg.earlyStop = false;
    const Denoiser d = Denoiser::linear_stencil(box_kernel(1), 0.9);
    REQUIRE(check_bounds(d, obs, cfg, phantoms(16, 16)).regime == Regime::strong);
    for (int s = 0; s < 10; ++s) {
        const Trajectory traj = run_pnp(unit_grid(rng, 16, 16), obs, d, cfg);
        CHECK(detect_cauchy(traj, 1e-8, 10));
    }
}

TEST_CASE("cauchy detection") {
    Trajectory constant;
    constant.iterates.push_back(ImageGrid(2, 2, 0.3));
    for (int i = 0; i < 6; ++i) constant.push(ImageGrid(2, 2, 0.3), 0.1);
    CHECK(detect_cauchy(constant, 1e-9, 5));

    Trajectory jitter;
    jitter.iterates.push_back(ImageGrid(2, 2, 0.3));
    for (int i = 0; i < 6; ++i) jitter.push(ImageGrid(2, 2, 0.3), 0.1);
    for (std::size_t i = 0; i < jitter.stepDiffs.size(); ++i) jitter.stepDiffs[i] = (i % 2 ? 3e-18 : 1e-18);
    CHECK(detect_cauchy(jitter, 1e-9, 5));

    std::vector<double> geometric;
    for (int t = 1; t <= 30; ++t) geometric.push_back(std::pow(0.5, t));
    CHECK(detect_cauchy(from_diffs(geometric), 1e-3, 5));

    Trajectory diverged = from_diffs(geometric);
    diverged.terminated = Termination::diverged;
    CHECK_FALSE(detect_cauchy(diverged, 1e-3, 5));

    CHECK_FALSE(detect_cauchy(from_diffs({1e-4, 1e-4, 1e-4, 5e-4, 1e-4}), 1e-3, 4));
    CHECK(detect_cauchy(from_diffs({1e-4, 1.05e-4, 1e-4}), 1e-3, 3));
    CHECK_FALSE(detect_cauchy(from_diffs({1e-2, 1e-2, 1e-2}), 1e-3, 3));
    CHECK_THROWS_AS(detect_cauchy(from_diffs({1e-4, 1e-4}), 1e-3, 5), InsufficientDataError);
}

TEST_CASE("identical ensembles compare as equal") {
    const Ensemble e = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 8, 1);
    const LawComparison c = compare_laws(e, e);
    CHECK(c.meanDistance == 0.0);
    CHECK(c.energyDistance == 0.0);
    CHECK(c.varianceRatio == 1.0);
    CHECK(c.samePass);
}

TEST_CASE("disjoint-seed diffusion ensembles share a law") {
    const Ensemble a = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 32, 100);
    const Ensemble b = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 32, 200);
    const LawComparison c = compare_laws(a, b);
    CHECK(c.meanDistance > 0.0);
    CHECK(c.samePass);
}

TEST_CASE("different diffusion levels are told apart") {
    const Ensemble a = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 32, 100);
    const Ensemble b = simulate_ensemble(diffusion_problem(0.5), ImageGrid(4, 4), 32, 200);
    const LawComparison c = compare_laws(a, b);
    CHECK_FALSE(c.samePass);
    CHECK(c.varianceRatio > 12.5);
    CHECK(c.varianceRatio < 50.0);
}

TEST_CASE("explicit thresholds are honoured") {
    const Ensemble a = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 16, 100);
    const Ensemble b = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 16, 200);
    LawThresholds tiny;
    tiny.tauMean = 1e-12;
    tiny.tauEnergy = 1e-12;
    const LawComparison c = compare_laws(a, b, tiny);
    CHECK(c.tauMean == 1e-12);
    CHECK_FALSE(c.samePass);
}

TEST_CASE("compare_laws rejects mismatched ensembles") {
    const Ensemble a = simulate_ensemble(diffusion_problem(0.1), ImageGrid(4, 4), 4, 1);
    const Ensemble b = simulate_ensemble(diffusion_problem(0.1), ImageGrid(3, 4), 4, 2);
    CHECK_THROWS_AS(compare_laws(a, b), DimensionError);
    SDEProblem longer = diffusion_problem(0.1);
    longer.horizon = 2.0;
    const Ensemble c = simulate_ensemble(longer, ImageGrid(4, 4), 4, 3);
    CHECK_THROWS_AS(compare_laws(a, c), DimensionError);
}

TEST_CASE("energy distance matches the quadratic definition") {
    RandomSource rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> x(37), y(23);
        for (double& v : x) v = rng.normal();
        for (double& v : y) v = 0.5 + 2.0 * rng.normal();
        double xy = 0.0, xx = 0.0, yy = 0.0;
        for (double a : x) for (double b : y) xy += std::abs(a - b);
        for (double a : x) for (double b : x) xx += std::abs(a - b);
        for (double a : y) for (double b : y) yy += std::abs(a - b);
        const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
        const double expected = 2.0 * xy / (n * m) - xx / (n * n) - yy / (m * m);
        CHECK(energy_distance(x, y) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(energy_distance({1.0, 2.0}, {2.0, 1.0}) == 0.0);
    CHECK_THROWS_AS(energy_distance({}, {1.0}), InsufficientDataError);
}

TEST_CASE("regime names and norm parsing") {
    CHECK(to_string(Regime::strong) == "strong");
    CHECK(parse_bound_norm("l2") == BoundNorm::l2);
    CHECK_THROWS(parse_bound_norm("l7"));
}

}  // TEST_SUITE
