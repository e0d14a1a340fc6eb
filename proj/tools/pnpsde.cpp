// Command-line front end: run, sweep-alpha, certify, init-template.

#include "pnpsde/errors.hpp"
#include "pnpsde/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kIo = 4 };

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> ensemble;
    std::optional<std::size_t> dumpEvery;
};

pnpsde::ExperimentConfig resolve(const Overrides& o) {
    pnpsde::ExperimentConfig cfg = pnpsde::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) {
        if (*o.threads == 0) throw pnpsde::UsageError("--threads must be at least 1");
        cfg.threads = *o.threads;
    }
    if (o.ensemble) {
        if (*o.ensemble == 0) throw pnpsde::UsageError("--ensemble must be at least 1");
        cfg.ensemble = *o.ensemble;
    }
    if (o.dumpEvery) cfg.dumpEvery = *o.dumpEvery;
    if (!o.out.empty()) cfg.output = o.out;
    return cfg;
}

std::vector<double> parse_alphas(const std::string& text) {
    std::vector<double> alphas;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            alphas.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw pnpsde::UsageError("--alphas: '" + item + "' is not a number");
        }
    }
    return alphas;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "experiment config (JSON, comments allowed)")->required();
    cmd->add_option("--out", o.out, "output directory (overrides config)");
    cmd->add_option("--seed", o.seed, "base seed (overrides config)");
    cmd->add_option("--threads", o.threads, "worker threads for ensembles");
    cmd->add_option("--ensemble", o.ensemble, "number of stochastic trajectories");
    cmd->add_option("--dump-every", o.dumpEvery, "write a PGM snapshot every N steps");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plug-and-play restoration as a stochastic differential equation"};
    app.require_subcommand(1);

    Overrides runOpts, sweepOpts, certOpts;
    std::optional<std::string> alphaText;
    std::string templatePath;

    CLI::App* run = app.add_subcommand("run", "run one trajectory or an ensemble");
    add_common(run, runOpts);
    CLI::App* sweep = app.add_subcommand("sweep-alpha", "terminal PSNR over a grid of alpha");
    add_common(sweep, sweepOpts);
    sweep->add_option("--alphas", alphaText, "comma-separated alphas (default: config list)");
    CLI::App* certify = app.add_subcommand("certify", "convergence certificate and soundness check");
    add_common(certify, certOpts);
    CLI::App* init = app.add_subcommand("init-template", "print a documented config template");
    init->add_option("--out", templatePath, "write the template to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        pnpsde::RunOptions options;
        options.log = &std::cout;
        if (*run) {
            const auto cfg = resolve(runOpts);
            options.outDir = cfg.output;
            pnpsde::cmd_run(cfg, options);
        } else if (*sweep) {
            const auto cfg = resolve(sweepOpts);
            options.outDir = cfg.output;
            pnpsde::cmd_sweep_alpha(cfg, alphaText ? parse_alphas(*alphaText) : cfg.alphas, options);
        } else if (*certify) {
            const auto cfg = resolve(certOpts);
            options.outDir = cfg.output;
            pnpsde::cmd_certify(cfg, options);
        } else if (*init) {
            if (templatePath.empty()) {
                std::cout << pnpsde::config_template();
            } else {
                pnpsde::write_text(templatePath, pnpsde::config_template());
            }
        }
    } catch (const pnpsde::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const pnpsde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const pnpsde::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const pnpsde::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
