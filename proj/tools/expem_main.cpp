#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "expem/config.hpp"
#include "expem/runner.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool seed_set = false;
    bool threads_set = false;
    bool out_set = false;
};

void attach_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory (overrides config)")
        ->each([&](const std::string&) { opts.out_set = true; });
    cmd->add_option("--seed", opts.seed, "master seed (overrides config)")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--threads", opts.threads, "worker threads (overrides config)")
        ->each([&](const std::string&) { opts.threads_set = true; });
}

int run(expem::ExperimentKind kind, const CommonOptions& opts) {
    expem::ExperimentConfig cfg;
    try {
        cfg = expem::parse_config_file(opts.config_path);
        if (cfg.kind != kind) {
            std::cerr << "error: config declares kind '" << expem::to_string(cfg.kind)
                      << "' but the '" << expem::to_string(kind) << "' subcommand was invoked\n";
            return 2;
        }
        if (opts.out_set) cfg.out_dir = opts.out_dir;
        if (opts.seed_set) cfg.seed = opts.seed;
        if (opts.threads_set) cfg.threads = opts.threads;
        expem::validate_config(cfg);
    } catch (const expem::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        return expem::run_experiment(cfg, std::cout);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential Euler-Maruyama benchmark harness for positive SDEs"};
    app.require_subcommand(1);

    CommonOptions converge_opts, stability_opts, moments_opts, check_opts;
    attach_common(app.add_subcommand("converge", "strong-error convergence study"), converge_opts);
    attach_common(app.add_subcommand("stability", "long-run stationary behaviour"), stability_opts);
    attach_common(app.add_subcommand("moments", "moment sweeps across time steps"), moments_opts);
    attach_common(app.add_subcommand("check", "parameter and hypothesis audit"), check_opts);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("converge")) return run(expem::ExperimentKind::converge, converge_opts);
    if (app.got_subcommand("stability")) return run(expem::ExperimentKind::stability, stability_opts);
    if (app.got_subcommand("moments")) return run(expem::ExperimentKind::moments, moments_opts);
    return run(expem::ExperimentKind::check, check_opts);
}
