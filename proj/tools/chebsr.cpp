// Command-line driver. Exit codes: 0 success, 2 configuration error,
// 3 solver failure, 4 failed check under --assert.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chebsr/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAssert = 4;

struct Overrides {
    std::string config_path;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<double> sigma0;
    std::optional<double> sigma;
    std::optional<double> lambda;
    std::optional<double> eta;
    std::optional<int> trials;
    bool timing = false;
    bool assert_checks = false;
};

chebsr::ExperimentConfig resolve_config(const Overrides& o, const std::string& subcommand) {
    chebsr::ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = chebsr::load_config(o.config_path);
    if (!o.mode.empty() && !subcommand.empty() && o.mode != subcommand) {
        throw chebsr::ConfigError("--mode " + o.mode + " conflicts with subcommand " + subcommand);
    }
    const std::string mode = !subcommand.empty() ? subcommand : o.mode;
    if (!mode.empty()) cfg.mode = chebsr::mode_from_string(mode);
    if (o.config_path.empty() && mode.empty()) throw chebsr::ConfigError("no mode given: use a subcommand or --mode");
    if (o.seed) cfg.seed = *o.seed;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.sigma0) cfg.sigma0 = *o.sigma0;
    if (o.sigma) cfg.sigma = *o.sigma;
    if (o.lambda) cfg.lambda = *o.lambda;
    if (o.eta) cfg.eta = *o.eta;
    if (o.trials) cfg.trials = *o.trials;
    if (o.timing) cfg.include_timing = true;
    chebsr::validate(cfg);
    return cfg;
}

/// Runs the configured mode, writes artifacts, and returns whether the
/// run's checks passed.
bool run(const chebsr::ExperimentConfig& cfg) {
    using namespace chebsr;
    ArtifactWriter out(cfg.out_dir);
    json summary;
    bool passed = false;
    switch (cfg.mode) {
        case Mode::RecoverSpikes: {
            const auto r = run_spike_recovery(cfg);
            summary = write_artifacts(r, cfg, out);
            passed = r.report.passed();
            break;
        }
        case Mode::RecoverSpline: {
            const auto r = run_algorithm1(cfg);
            summary = write_artifacts(r, cfg, out);
            passed = r.report.global_ok() && r.report.localization_ok() && r.relative_boundary_residual() <= 1e-8;
            break;
        }
        case Mode::Certificate: {
            const auto r = run_certificate(cfg);
            summary = write_artifacts(r, cfg, out);
            passed = r.report.passed;
            break;
        }
        case Mode::RiceCheck: {
            const auto r = run_rice_check(cfg);
            summary = write_artifacts(r, cfg, out);
            passed = r.passed;
            break;
        }
        case Mode::Sweep: {
            const auto rows = run_sweep(cfg, &out);
            out.write_csv("sweep.csv", csv_schemas::sweep(), [&](CsvWriter& w) { write_sweep_csv(w, cfg, rows); });
            passed = true;
            long failed = 0;
            for (const auto& r : rows) {
                if (!r.ok) ++failed;
                passed = passed && r.ok;
            }
            summary = {{"rows", rows.size()}, {"failed_rows", failed}};
            break;
        }
    }
    summary["passed"] = passed;
    out.finish(cfg, summary);
    std::cout << to_string(cfg.mode) << ": " << (passed ? "checks passed" : "checks FAILED") << ", artifacts in "
              << cfg.out_dir << '\n';
    return passed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spike and non-uniform spline recovery from Chebyshev moments"};
    Overrides o;
    app.add_option("--config", o.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    app.add_option("--mode", o.mode, "recover-spikes, recover-spline, certificate, rice-check or sweep");
    app.add_option("--seed", o.seed, "base random seed");
    app.add_option("--out-dir", o.out_dir, "directory for artifacts");
    app.add_option("--sigma0", o.sigma0, "normalized noise level for spline recovery");
    app.add_option("--sigma", o.sigma, "moment noise level for spike recovery and the Rice check");
    app.add_option("--lambda", o.lambda, "regularization level override");
    app.add_option("--eta", o.eta, "confidence exponent in the Rice level");
    app.add_option("--trials", o.trials, "Monte Carlo trials for rice-check");
    app.add_flag("--timing", o.timing, "include wall-clock times in solution.json");
    app.add_flag("--assert", o.assert_checks, "exit with status 4 when a check fails");
    app.require_subcommand(0, 1);
    for (const char* name : {"recover-spikes", "recover-spline", "certificate", "rice-check", "sweep"}) {
        app.add_subcommand(name, std::string("run mode ") + name)->fallthrough();
    }
    app.fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    std::string subcommand;
    for (const auto* sub : app.get_subcommands()) subcommand = sub->get_name();

    try {
        const auto cfg = resolve_config(o, subcommand);
        const bool passed = run(cfg);
        return (o.assert_checks && !passed) ? kExitAssert : 0;
    } catch (const chebsr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const chebsr::SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}
