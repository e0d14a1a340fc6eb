#include "pnpsde/experiment.hpp"

#include "pnpsde/errors.hpp"
#include "pnpsde/metrics.hpp"
#include "pnpsde/pnp_engine.hpp"
#include "pnpsde/random_source.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

namespace pnpsde {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Task task) noexcept {
    switch (task) {
        case Task::denoise: return "denoise";
        case Task::inpaint: return "inpaint";
        case Task::deblur: return "deblur";
        case Task::superres: return "superres";
    }
    return "unknown";
}

Task parse_task(std::string_view name) {
    if (name == "denoise") return Task::denoise;
    if (name == "inpaint") return Task::inpaint;
    if (name == "deblur") return Task::deblur;
    if (name == "superres") return Task::superres;
    throw ConfigError("config field 'task': unknown task '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

// Strict view of one JSON object: typed lookups, and unknown keys rejected.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("config field '" + where() + "': expected an object");
    }

    std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(key, "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(key, "expected a finite number");
        }
    }

    void optional_number(const std::string& key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out.reset();
                return;
            }
            if (!v->is_number()) fail(key, "expected a number or null");
            out = v->get<double>();
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            const bool ok = v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0);
            if (!ok) fail(key, "expected a nonnegative integer");
            out = v->get<Int>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(key, "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(key, "expected a string");
            out = v->get<std::string>();
        }
    }

    template <class Parse>
    void named(const std::string& key, Parse parse) {
        std::string s;
        if (!find(key)) return;
        string(key, s);
        try {
            parse(s);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            fail(key, e.what());
        }
    }

    void finish() const {
        for (const auto& [k, v] : obj_.items()) {
            if (!seen_.contains(k)) throw ConfigError("config field '" + field(k) + "': unknown field");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError("config field '" + field(key) + "': " + msg);
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) throw ConfigError("config field '" + field + "': " + msg);
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    Fields root(j, "");
    root.named("task", [&](const std::string& s) { cfg.task = parse_task(s); });

    if (const json* im = root.find("image")) {
        Fields f(*im, "image");
        f.string("phantom", cfg.image.phantom);
        f.string("path", cfg.image.path);
        f.integer("height", cfg.image.height);
        f.integer("width", cfg.image.width);
        f.finish();
    }
    if (cfg.image.path.empty()) {
        try {
            parse_phantom_kind(cfg.image.phantom);
        } catch (const Error& e) {
            throw ConfigError(std::string("config field 'image.phantom': ") + e.what());
        }
        require(cfg.image.height >= 2 && cfg.image.width >= 2, "image.height",
                "phantom sides must be at least 2");
    }

    if (const json* op = root.find("operator")) {
        Fields f(*op, "operator");
        f.number("keep", cfg.op.keep);
        f.integer("kernelRadius", cfg.op.kernelRadius);
        f.number("kernelStd", cfg.op.kernelStd);
        f.integer("factor", cfg.op.factor);
        f.finish();
    }
    require(cfg.op.keep >= 0.0 && cfg.op.keep <= 1.0, "operator.keep", "must lie in [0, 1]");
    require(cfg.op.kernelStd > 0.0, "operator.kernelStd", "must be positive");
    require(cfg.op.factor >= 1, "operator.factor", "must be at least 1");

    root.number("noiseSigma", cfg.noiseSigma);
    require(cfg.noiseSigma >= 0.0, "noiseSigma", "must be nonnegative");

    if (const json* dn = root.find("denoiser")) {
        Fields f(*dn, "denoiser");
        f.string("kind", cfg.denoiser.kind);
        f.number("gain", cfg.denoiser.gain);
        f.number("scale", cfg.denoiser.scale);
        f.integer("stencilRadius", cfg.denoiser.stencilRadius);
        f.integer("tvIterations", cfg.denoiser.tvIterations);
        f.number("tvWeightScale", cfg.denoiser.tvWeightScale);
        f.number("gaussianWidthScale", cfg.denoiser.gaussianWidthScale);
        f.optional_number("clampLo", cfg.denoiser.clampLo);
        f.optional_number("clampHi", cfg.denoiser.clampHi);
        f.finish();
    }
    try {
        build_denoiser(cfg.denoiser);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config field 'denoiser': ") + e.what());
    }

    if (const json* pj = root.find("pnp")) {
        Fields f(*pj, "pnp");
        f.number("gamma", cfg.pnp.gamma);
        f.number("lambda", cfg.pnp.lambda);
        f.number("alpha", cfg.pnp.alphaRatio);
        f.integer("maxIters", cfg.pnp.maxIters);
        f.named("mode", [&](const std::string& s) { cfg.pnp.mode = parse_mode(s); });
        f.named("variant", [&](const std::string& s) { cfg.pnp.variant = parse_variant(s); });
        f.optional_number("sigmaInject", cfg.pnp.sigmaInject);
        f.boolean("earlyStop", cfg.pnp.earlyStop);
        f.number("earlyStopTolerance", cfg.pnp.earlyStopTolerance);
        f.integer("earlyStopPatience", cfg.pnp.earlyStopPatience);
        f.number("divergenceThreshold", cfg.pnp.divergenceThreshold);
        if (const json* sj = f.find("schedule")) {
            Fields s(*sj, "pnp.schedule");
            s.named("kind", [&](const std::string& k) { cfg.pnp.schedule.kind = parse_schedule_kind(k); });
            s.number("sigma0", cfg.pnp.schedule.sigma0);
            s.number("sigmaT", cfg.pnp.schedule.sigmaT);
            s.finish();
        }
        f.finish();
    }
    cfg.pnp.schedule.steps = std::max<std::size_t>(cfg.pnp.maxIters, 1);
    try {
        cfg.pnp.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config field 'pnp': ") + e.what());
    }

    root.integer("ensemble", cfg.ensemble);
    require(cfg.ensemble >= 1, "ensemble", "must be at least 1");
    root.integer("seed", cfg.seed);
    root.integer("threads", cfg.threads);
    require(cfg.threads >= 1, "threads", "must be at least 1");
    root.integer("dumpEvery", cfg.dumpEvery);

    if (const json* aj = root.find("alphas")) {
        if (!aj->is_array()) root.fail("alphas", "expected an array of numbers");
        cfg.alphas.clear();
        for (const auto& a : *aj) {
            if (!a.is_number()) root.fail("alphas", "expected an array of numbers");
            cfg.alphas.push_back(a.get<double>());
        }
    }

    if (const json* cj = root.find("certify")) {
        Fields f(*cj, "certify");
        f.integer("starts", cfg.certify.starts);
        f.number("cauchyTol", cfg.certify.cauchyTol);
        f.integer("cauchyWindow", cfg.certify.cauchyWindow);
        f.integer("ensembleSize", cfg.certify.ensembleSize);
        f.integer("lipschitzPairs", cfg.certify.lipschitzPairs);
        f.named("norm", [&](const std::string& s) { cfg.certify.norm = parse_bound_norm(s); });
        f.finish();
    }
    require(cfg.certify.starts >= 1, "certify.starts", "must be at least 1");
    require(cfg.certify.cauchyWindow >= 1, "certify.cauchyWindow", "must be at least 1");
    require(cfg.certify.ensembleSize >= 2, "certify.ensembleSize", "must be at least 2");
    require(cfg.certify.lipschitzPairs >= 1, "certify.lipschitzPairs", "must be at least 1");

    root.string("output", cfg.output);
    root.finish();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["task"] = std::string(to_string(cfg.task));
    j["image"] = {{"phantom", cfg.image.phantom},
                  {"path", cfg.image.path},
                  {"height", cfg.image.height},
                  {"width", cfg.image.width}};
    j["operator"] = {{"keep", cfg.op.keep},
                     {"kernelRadius", cfg.op.kernelRadius},
                     {"kernelStd", cfg.op.kernelStd},
                     {"factor", cfg.op.factor}};
    j["noiseSigma"] = cfg.noiseSigma;
    j["denoiser"] = {{"kind", cfg.denoiser.kind},
                     {"gain", cfg.denoiser.gain},
                     {"scale", cfg.denoiser.scale},
                     {"stencilRadius", cfg.denoiser.stencilRadius},
                     {"tvIterations", cfg.denoiser.tvIterations},
                     {"tvWeightScale", cfg.denoiser.tvWeightScale},
                     {"gaussianWidthScale", cfg.denoiser.gaussianWidthScale},
                     {"clampLo", opt(cfg.denoiser.clampLo)},
                     {"clampHi", opt(cfg.denoiser.clampHi)}};
    j["pnp"] = {{"gamma", cfg.pnp.gamma},
                {"lambda", cfg.pnp.lambda},
                {"alpha", cfg.pnp.alphaRatio},
                {"maxIters", cfg.pnp.maxIters},
                {"mode", std::string(to_string(cfg.pnp.mode))},
                {"variant", std::string(to_string(cfg.pnp.variant))},
                {"sigmaInject", opt(cfg.pnp.sigmaInject)},
                {"earlyStop", cfg.pnp.earlyStop},
                {"earlyStopTolerance", cfg.pnp.earlyStopTolerance},
                {"earlyStopPatience", cfg.pnp.earlyStopPatience},
                {"divergenceThreshold", cfg.pnp.divergenceThreshold},
                {"schedule",
                 {{"kind", std::string(to_string(cfg.pnp.schedule.kind))},
                  {"sigma0", cfg.pnp.schedule.sigma0},
                  {"sigmaT", cfg.pnp.schedule.sigmaT}}}};
    j["ensemble"] = cfg.ensemble;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["dumpEvery"] = cfg.dumpEvery;
    j["alphas"] = cfg.alphas;
    j["certify"] = {{"starts", cfg.certify.starts},
                    {"cauchyTol", cfg.certify.cauchyTol},
                    {"cauchyWindow", cfg.certify.cauchyWindow},
                    {"ensembleSize", cfg.certify.ensembleSize},
                    {"lipschitzPairs", cfg.certify.lipschitzPairs},
                    {"norm", std::string(to_string(cfg.certify.norm))}};
    j["output"] = cfg.output;
    return j;
}

ExperimentConfig load_config(const fs::path& path) {
    const std::string text = read_text(path);
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j);
}

std::string config_template() {
    return R"({
  // denoise | inpaint | deblur | superres
  "task": "inpaint",
  // Clean image: a phantom (ramp, checkerboard, disk, piecewise) of the given
  // size, or a P5 PGM / 8-bit grayscale PNG when "path" is non-empty.
  "image": {"phantom": "disk", "path": "", "height": 32, "width": 32},
  "operator": {
    "keep": 0.5,          // inpaint: probability that a pixel is observed
    "kernelRadius": 2,    // deblur: Gaussian kernel half-width
    "kernelStd": 1.0,     // deblur: Gaussian kernel std in pixels
    "factor": 2           // superres: block-averaging factor
  },
  "noiseSigma": 0.05,     // measurement noise std
  "denoiser": {
    // tv | gaussian | median | linear | identity | amplifier
    "kind": "tv",
    "gain": 1.5,                // amplifier gain
    "scale": 0.9,               // linear: output scale
    "stencilRadius": 1,         // linear: box stencil half-width
    "tvIterations": 100,        // tv: Chambolle iterations
    "tvWeightScale": 1.0,       // tv: weight = tvWeightScale * sigma^2
    "gaussianWidthScale": 2.0,  // gaussian: std = scale * sigma * height
    "clampLo": null,            // set both to clamp the output into [lo, hi]
    "clampHi": null
  },
  "pnp": {
    "gamma": 1.0,
    "lambda": 1.0,
    "alpha": 1.0,
    "maxIters": 50,
    "mode": "deterministic",    // deterministic | stochastic
    "variant": "simplified",    // simplified | full-admm
    "sigmaInject": null,        // injected noise std, null = sigma_t
    "earlyStop": true,
    "earlyStopTolerance": 1e-06,  // relative to ||v0||
    "earlyStopPatience": 5,
    "divergenceThreshold": 1000.0,  // sup-norm escape level
    // constant | linear | exponential; length follows maxIters
    "schedule": {"kind": "constant", "sigma0": 0.1, "sigmaT": 0.1}
  },
  "ensemble": 1,          // > 1 runs that many stochastic trajectories
  "seed": 0,
  "threads": 1,
  "dumpEvery": 0,         // write a PGM snapshot every N steps (0 = off)
  "alphas": [0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0],  // sweep-alpha grid
  "certify": {
    "starts": 10,         // random starts for the Cauchy check
    "cauchyTol": 1e-06,
    "cauchyWindow": 10,
    "ensembleSize": 32,   // members per ensemble for the law comparison
    "lipschitzPairs": 6,
    "norm": "sup"         // sup | l2
  },
  "output": "out"
}
)";
}

// ---------------------------------------------------------------------------
// Problem construction

Denoiser build_denoiser(const DenoiserSpec& opts) {
    Denoiser d = [&] {
        if (opts.kind == "tv") return Denoiser::tv_chambolle(opts.tvIterations, opts.tvWeightScale);
        if (opts.kind == "gaussian") return Denoiser::gaussian_smooth(opts.gaussianWidthScale);
        if (opts.kind == "median") return Denoiser::median();
        if (opts.kind == "linear") {
            return Denoiser::linear_stencil(box_kernel(opts.stencilRadius), opts.scale);
        }
        if (opts.kind == "identity") return Denoiser::identity();
        if (opts.kind == "amplifier") return Denoiser::amplifier(opts.gain);
        throw ConfigError("config field 'denoiser.kind': unknown denoiser '" + opts.kind + "'");
    }();
    if (opts.clampLo.has_value() != opts.clampHi.has_value()) {
        throw ConfigError("config field 'denoiser.clampLo': clampLo and clampHi must be set together");
    }
    if (opts.clampLo) d = clamp_wrap(d, *opts.clampLo, *opts.clampHi);
    return d;
}

PnPConfig engine_config(const ExperimentConfig& cfg) {
    PnPConfig p = cfg.pnp;
    p.seed = derive_seed(cfg.seed, 1);
    p.schedule.steps = std::max<std::size_t>(p.maxIters, 1);
    return p;
}

Problem build_problem(const ExperimentConfig& cfg) {
    ImageGrid clean = cfg.image.path.empty()
                          ? synth_phantom(parse_phantom_kind(cfg.image.phantom), cfg.image.height,
                                          cfg.image.width)
                          : load_image(cfg.image.path);
    RandomSource rng(derive_seed(cfg.seed, 0));
    MeasurementOp op = MeasurementOp::identity();
    switch (cfg.task) {
        case Task::denoise: break;
        case Task::inpaint:
            op = MeasurementOp::random_mask(clean.height(), clean.width(), cfg.op.keep, rng);
            break;
        case Task::deblur:
            op = MeasurementOp::convolution(gaussian_kernel(cfg.op.kernelRadius, cfg.op.kernelStd));
            break;
        case Task::superres: op = MeasurementOp::downsample(cfg.op.factor); break;
    }
    try {
        op.output_shape({clean.height(), clean.width()});
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("config field 'operator': ") + e.what());
    }
    Observation obs = degrade(op, clean, cfg.noiseSigma, rng);
    ImageGrid v0 = initial_estimate(obs);
    return {std::move(clean), std::move(obs), build_denoiser(cfg.denoiser), std::move(v0)};
}

// ---------------------------------------------------------------------------
// Commands

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, i, ext);
    return buf;
}

void dump_snapshots(const Trajectory& traj, std::size_t every, const fs::path& dir) {
    if (every == 0) return;
    for (std::size_t t = 0; t < traj.iterates.size(); t += every) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "iter_%06zu.pgm", t);
        save_pgm(traj.iterates[t], dir / buf);
    }
}

double terminal_metric(const Trajectory& traj, bool ssimField) {
    if (traj.metrics.empty()) return std::numeric_limits<double>::quiet_NaN();
    return ssimField ? traj.metrics.back().ssim : traj.metrics.back().psnr;
}

fs::path out_dir(const ExperimentConfig& cfg, const RunOptions& options) {
    return options.outDir.empty() ? fs::path(cfg.output) : options.outDir;
}

}  // namespace

ExperimentRecord cmd_run(const ExperimentConfig& cfg, const RunOptions& options) {
    const auto start = Clock::now();
    const fs::path dir = out_dir(cfg, options);
    const Problem prob = build_problem(cfg);
    const PnPConfig pcfg = engine_config(cfg);

    ExperimentRecord record;
    record.config = to_json(cfg);
    record.summary["initialPsnr"] = psnr(prob.v0, prob.clean);

    if (cfg.ensemble == 1) {
        const Trajectory traj = run_pnp(prob.v0, prob.obs, prob.denoiser, pcfg, prob.clean);
        record.rows = step_rows(traj);
        record.status = std::string(to_string(traj.terminated));
        record.summary["steps"] = static_cast<double>(traj.steps());
        record.summary["terminalPsnr"] = terminal_metric(traj, false);
        record.summary["terminalSsim"] = terminal_metric(traj, true);
        save_csv(record, dir / "trajectory.csv");
        dump_snapshots(traj, cfg.dumpEvery, dir / "snapshots");
    } else {
        Ensemble ens = run_pnp_ensemble(prob.v0, prob.obs, prob.denoiser, pcfg, cfg.ensemble,
                                        derive_seed(cfg.seed, 2), cfg.threads);
        std::size_t diverged = 0;
        double psnrSum = 0.0;
        double ssimSum = 0.0;
        for (std::size_t i = 0; i < ens.trajectories.size(); ++i) {
            Trajectory& traj = ens.trajectories[i];
            attach_metrics(traj, prob.clean);
            if (traj.terminated == Termination::diverged) ++diverged;
            psnrSum += terminal_metric(traj, false);
            ssimSum += terminal_metric(traj, true);
            write_text(dir / numbered("trajectory", i, ".csv"), format_csv(step_rows(traj)));
            dump_snapshots(traj, cfg.dumpEvery, dir / numbered("snapshots", i, ""));
        }
        const double n = static_cast<double>(ens.trajectories.size());
        record.rows = step_rows(ens.trajectories.front());
        record.status = diverged > 0 ? "diverged" : "completed";
        record.summary["members"] = n;
        record.summary["divergedMembers"] = static_cast<double>(diverged);
        record.summary["meanTerminalPsnr"] = psnrSum / n;
        record.summary["meanTerminalSsim"] = ssimSum / n;
    }
    record.durationSeconds = seconds_since(start);
    save_record(record, dir / "record.json");
    if (options.log) {
        *options.log << "status: " << record.status << "\n";
        for (const auto& [k, v] : record.summary) *options.log << k << ": " << format_double(v) << "\n";
    }
    return record;
}

std::vector<SweepRow> cmd_sweep_alpha(const ExperimentConfig& cfg, const std::vector<double>& alphas,
                                      const RunOptions& options) {
    if (alphas.empty()) throw UsageError("sweep-alpha: the alpha list is empty");
    for (double a : alphas) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw UsageError("sweep-alpha: alphas must be positive, got " + format_double(a));
        }
    }
    const fs::path dir = out_dir(cfg, options);
    const Problem prob = build_problem(cfg);

    std::vector<SweepRow> rows;
    std::string table = "alpha,sigma0,terminalPsnr,terminalSsim,status\n";
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        PnPConfig pcfg = engine_config(cfg);
        const double s0 = std::sqrt(alphas[i] * pcfg.gamma);
        const double factor = s0 / pcfg.schedule.sigma0;
        pcfg.alphaRatio = alphas[i];
        pcfg.schedule.sigma0 = s0;
        pcfg.schedule.sigmaT = pcfg.schedule.kind == ScheduleKind::constant ? s0 : pcfg.schedule.sigmaT * factor;
        const Trajectory traj = run_pnp(prob.v0, prob.obs, prob.denoiser, pcfg, prob.clean);

        SweepRow row{alphas[i], s0, terminal_metric(traj, false), terminal_metric(traj, true),
                     std::string(to_string(traj.terminated))};
        table += format_double(row.alpha) + "," + format_double(row.sigma0) + "," +
                 format_double(row.terminalPsnr) + "," + format_double(row.terminalSsim) + "," +
                 row.status + "\n";
        write_text(dir / numbered("trajectory_alpha", i, ".csv"), format_csv(step_rows(traj)));
        if (options.log) {
            *options.log << "alpha " << format_double(row.alpha) << ": psnr "
                         << format_double(row.terminalPsnr) << " (" << row.status << ")\n";
        }
        rows.push_back(std::move(row));
    }
    write_text(dir / "sweep_alpha.csv", table);
    return rows;
}

CertifyReport cmd_certify(const ExperimentConfig& cfg, const RunOptions& options) {
    const fs::path dir = out_dir(cfg, options);
    const Problem prob = build_problem(cfg);
    const PnPConfig pcfg = engine_config(cfg);
    const std::size_t h = prob.clean.height();
    const std::size_t w = prob.clean.width();

    std::vector<ImageGrid> corpus;
    for (PhantomKind k : {PhantomKind::ramp, PhantomKind::checkerboard, PhantomKind::disk,
                          PhantomKind::piecewise}) {
        corpus.push_back(synth_phantom(k, h, w));
    }
    corpus.push_back(prob.v0);

    BoundsOptions bopts;
    bopts.lipschitzPairs = cfg.certify.lipschitzPairs;
    bopts.norm = cfg.certify.norm;
    bopts.seed = derive_seed(cfg.seed, 3);

    CertifyReport report;
    report.certificate = check_bounds(prob.denoiser, prob.obs, pcfg, corpus, bopts);

    PnPConfig det = pcfg;
    det.mode = Mode::deterministic;
    det.earlyStop = false;

    switch (report.certificate.regime) {
        case Regime::strong: {
            report.experiment = "cauchy";
            RandomSource rng(derive_seed(cfg.seed, 4));
            std::size_t passed = 0;
            json finals = json::array();
            for (std::size_t s = 0; s < cfg.certify.starts; ++s) {
                ImageGrid start(h, w);
                for (std::size_t i = 0; i < start.size(); ++i) start[i] = rng.uniform();
                const Trajectory traj = run_pnp(start, prob.obs, prob.denoiser, det);
                const bool ok = traj.steps() > cfg.certify.cauchyWindow &&
                                detect_cauchy(traj, cfg.certify.cauchyTol, cfg.certify.cauchyWindow);
                if (ok) ++passed;
                finals.push_back(traj.stepDiffs.empty() ? 0.0 : traj.stepDiffs.back());
            }
            report.agreement = passed == cfg.certify.starts;
            report.details = {{"starts", cfg.certify.starts},
                              {"cauchyPassed", passed},
                              {"finalStepDiffs", finals}};
            break;
        }
        case Regime::weak: {
            report.experiment = "law-comparison";
            PnPConfig sto = pcfg;
            const Ensemble e1 = run_pnp_ensemble(prob.v0, prob.obs, prob.denoiser, sto,
                                                 cfg.certify.ensembleSize, derive_seed(cfg.seed, 5),
                                                 cfg.threads);
            const Ensemble e2 = run_pnp_ensemble(prob.v0, prob.obs, prob.denoiser, sto,
                                                 cfg.certify.ensembleSize, derive_seed(cfg.seed, 6),
                                                 cfg.threads);
            std::size_t diverged = 0;
            for (const Ensemble* e : {&e1, &e2}) {
                for (const auto& t : e->trajectories) {
                    if (t.terminated == Termination::diverged) ++diverged;
                }
            }
            json cmp = {{"samePass", false}};
            bool same = false;
            if (diverged == 0) {
                const LawComparison lc = compare_laws(e1, e2);
                same = lc.samePass;
                cmp = {{"meanDistance", lc.meanDistance},
                       {"varianceRatio", lc.varianceRatio},
                       {"energyDistance", lc.energyDistance},
                       {"tauMean", lc.tauMean},
                       {"tauEnergy", lc.tauEnergy},
                       {"samePass", lc.samePass}};
            }
            report.agreement = same && diverged == 0;
            report.details = {{"ensembleSize", cfg.certify.ensembleSize},
                              {"divergedMembers", diverged},
                              {"comparison", cmp}};
            break;
        }
        case Regime::none: {
            report.experiment = "divergence";
            const Trajectory traj = run_pnp(prob.v0, prob.obs, prob.denoiser, det);
            report.agreement = traj.terminated == Termination::diverged;
            report.details = {{"status", std::string(to_string(traj.terminated))},
                              {"steps", traj.steps()}};
            break;
        }
    }

    json out = {{"config", to_json(cfg)},
                {"certificate", to_json(report.certificate)},
                {"experiment", report.experiment},
                {"agreement", report.agreement},
                {"details", report.details}};
    write_text(dir / "certificate.json", out.dump(2) + "\n");
    if (options.log) {
        *options.log << "regime: " << to_string(report.certificate.regime) << "\n"
                     << "certificate: " << to_json(report.certificate).dump() << "\n"
                     << report.experiment << ": " << (report.agreement ? "agrees" : "disagrees")
                     << "\n";
    }
    return report;
}

}  // namespace pnpsde
