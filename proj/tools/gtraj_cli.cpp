// gtraj_cli.cpp - Command-line front end: run, sweep, analyze, bench.
#include "gtraj/commands.hpp"
#include "gtraj/config.hpp"
#include "gtraj/ensemble.hpp"
#include "gtraj/summary_io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>
#include <map>

namespace {

constexpr int exit_config = 2;
constexpr int exit_divergence = 3;
constexpr int exit_analysis_input = 4;
constexpr int exit_cancelled = 130;

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int)
{
    g_cancel.store(true);
}

struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App& cmd, ConfigFlags& flags, bool sweep)
{
    cmd.add_option("-c,--config", flags.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    for (const auto& key : gtraj::config_keys(sweep)) {
        cmd.add_option("--" + key, flags.values[key], "overrides '" + key + "'")->group("Configuration keys");
    }
}

gtraj::RunConfig resolve(const CLI::App& cmd, const ConfigFlags& flags, bool sweep)
{
    std::vector<gtraj::Override> overrides;
    for (const auto& [key, value] : flags.values) {
        if (cmd.count("--" + key) > 0) overrides.emplace_back(key, value);
    }
    if (flags.config_path.empty()) return gtraj::parse_config(nlohmann::json::object(), overrides, sweep);
    return gtraj::load_config(flags.config_path, overrides, sweep);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gaussian-trajectory simulator for driven-dissipative Kerr lattices"};
    app.require_subcommand(1);

    ConfigFlags run_flags;
    auto* run = app.add_subcommand("run", "run one ensemble (or exact solve) and write its summary");
    add_config_flags(*run, run_flags, false);

    ConfigFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "run every point of sweep.g_values x sweep.sizes");
    add_config_flags(*sweep, sweep_flags, true);

    gtraj::AnalyzeOptions analyze_opts;
    std::vector<std::string> analyze_inputs;
    std::string out_dir = "analysis";
    double beta = 0.0, g_c = 0.0;
    auto* analyze = app.add_subcommand("analyze", "Binder curves, crossing, collapse and histograms from summaries");
    analyze->add_option("inputs", analyze_inputs, "summary files or directories searched for summary.json")->required();
    analyze->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    analyze->add_option("--observable", analyze_opts.observable, "binder, binder_final, parity or k0")
        ->capture_default_str();
    analyze->add_option("--nu", analyze_opts.nu_values, "exponents nu evaluated in the collapse")->capture_default_str();
    auto* beta_opt = analyze->add_option("--beta", beta, "rescale the observable by L^(beta/nu)");
    auto* gc_opt = analyze->add_option("--g-c", g_c, "use this G_c for the collapse instead of the crossing");
    analyze->add_option("--bootstrap", analyze_opts.n_bootstrap, "bootstrap resamples")->capture_default_str();
    analyze->add_option("--seed", analyze_opts.seed, "bootstrap seed")->capture_default_str();

    gtraj::BenchOptions bench_opts;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "time one integration step versus the number of sites");
    bench->add_option("--sizes", bench_opts.n_sites, "site counts")->delimiter(',')->capture_default_str();
    bench->add_option("--eta", bench_opts.eta_values, "two-photon loss rates")->delimiter(',')->capture_default_str();
    bench->add_option("--min-seconds", bench_opts.min_seconds, "timed wall time per measurement")
        ->capture_default_str();
    bench->add_option("--repeats", bench_opts.repeats, "keep the fastest of this many measurements")->capture_default_str();
    bench->add_option("-o,--out", bench_out, "directory for bench.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (*run) {
            const gtraj::RunConfig cfg = resolve(*run, run_flags, false);
            gtraj::run_command(cfg, std::cerr, &g_cancel);
        } else if (*sweep) {
            const gtraj::RunConfig cfg = resolve(*sweep, sweep_flags, true);
            gtraj::sweep_command(cfg, std::cerr, &g_cancel);
        } else if (*analyze) {
            for (const auto& in : analyze_inputs) analyze_opts.inputs.emplace_back(in);
            analyze_opts.out_dir = out_dir;
            if (*beta_opt) analyze_opts.beta = beta;
            if (*gc_opt) analyze_opts.g_c = g_c;
            const auto doc = gtraj::analyze_command(analyze_opts, std::cerr);
            std::cout << doc.dump(2) << "\n";
        } else if (*bench) {
            bench_opts.out_dir = bench_out;
            const auto report = gtraj::bench_command(bench_opts, std::cerr);
            std::cout << gtraj::to_json(report).dump(2) << "\n";
        }
    } catch (const gtraj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const gtraj::OutputError& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return exit_config;
    } catch (const gtraj::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return exit_divergence;
    } catch (const gtraj::AnalysisInputError& e) {
        std::cerr << "analysis input error: " << e.what() << "\n";
        return exit_analysis_input;
    } catch (const gtraj::CancelledError& e) {
        std::cerr << "cancelled: " << e.what() << "\n";
        return exit_cancelled;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
