#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "chebsr/harness.hpp"

using namespace chebsr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    fs::path dir = fs::temp_directory_path() / "chebsr_tests" / (std::string(info->test_suite_name()) + "_" +
                                                                 info->name() + "_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return files;
}

ExperimentConfig parse(const std::string& text) { return config_from_json(json::parse(text)); }

std::string config_error(const std::string& text) {
    try {
        validate(parse(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kNoiselessSpikes = R"({
    "mode": "recover-spikes", "m": 64, "sigma": 0, "lambda": 1e-6, "seed": 5,
    "measure": {"support": [-0.6, 0.1, 0.7], "weights": [1.5, -1.0, 2.0]}})";

}  // namespace

TEST(Config, ErrorsNameTheOffendingField) {
    EXPECT_NE(config_error(R"({"mode": "recover-spikes", "m": 8, "sigmaa": 1})").find("sigmaa"), std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "recover-spikes", "m": 8, "sigma": 1})").find("measure"), std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "recover-spline", "m": 8, "d": 1, "random_spline": {}})").find("lambda"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "recover-spikes", "m": 8,
                               "measure": {"support": [0], "weights": [1]}})")
                  .find("lambda"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "sweep", "m": 8, "sweep": {"axis": "eta"}})").find("sweep.axis"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "certificate", "m": 9})").find("even"), std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "certificate", "m": 16, "grid": 100})").find("grid"), std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "rice-check", "m": 8, "sigma": 1, "trials": 99})").find("trials"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "recover-spline", "m": 8, "d": 1, "sigma0": 0.1,
                               "random_spline": {}, "boundary": [0, 1]})")
                  .find("boundary"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"mode": "recover-spikes", "m": 4, "d": 4, "sigma": 1, "random_target": {}})")
                  .find("'d'"),
              std::string::npos);
    EXPECT_THROW((void)parse(R"({"mode": "fourier"})"), ConfigError);
    EXPECT_EQ(config_error(kNoiselessSpikes), "");
}

TEST(Config, ShippedConfigurationsLoadAndValidate) {
    int count = 0;
    for (const auto& e : fs::directory_iterator(CHEBSR_CONFIG_DIR)) {
        if (e.path().extension() != ".json") continue;
        SCOPED_TRACE(e.path().filename().string());
        ExperimentConfig c;
        ASSERT_NO_THROW(c = load_config(e.path()));
        EXPECT_NO_THROW(validate(c));
        // Round trip through the manifest form.
        EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
        ++count;
    }
    EXPECT_GE(count, 5);
}

TEST(RandomTargets, SeparatedAndReproducible) {
    const RandomSpikeSpec spec{4, 1.0, 2.0, true};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = random_spike_target(spec, 128, seed);
        EXPECT_EQ(a.size(), 4u);
        EXPECT_TRUE(separation_ok(a.support(), 128));
        for (double w : a.weights()) {
            EXPECT_GE(std::abs(w), 1.0);
            EXPECT_LE(std::abs(w), 2.0);
        }
        const auto b = random_spike_target(spec, 128, seed);
        EXPECT_EQ(a.support(), b.support());
        EXPECT_EQ(a.weights(), b.weights());
    }
}

TEST(Artifacts, RerunsAreByteIdentical) {
    const auto cfg = parse(kNoiselessSpikes);
    std::map<std::string, std::string> first;
    for (const char* tag : {"a", "b"}) {
        ArtifactWriter out(scratch_dir(tag));
        const auto r = run_spike_recovery(cfg);
        EXPECT_TRUE(r.report.passed());
        out.finish(cfg, write_artifacts(r, cfg, out));
        const auto files = tree(out.dir());
        EXPECT_TRUE(files.count("manifest.json"));
        if (first.empty()) {
            first = files;
        } else {
            EXPECT_EQ(files, first);
        }
    }
    const auto manifest = json::parse(first.at("manifest.json"));
    EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 5u);
    bool saw_csv = false;
    for (const auto& f : manifest.at("files")) {
        if (f.at("format") == "csv") {
            saw_csv = true;
            EXPECT_TRUE(f.contains("schema"));
            EXPECT_TRUE(f.contains("schema_version"));
        }
    }
    EXPECT_TRUE(saw_csv);
}

TEST(RiceCheck, DeterministicAndMonotoneInEta) {
    const auto a = run_rice_check(32, -1, 1.0, 1.0, 100, 7);
    const auto b = run_rice_check(32, -1, 1.0, 1.0, 100, 7);
    EXPECT_EQ(to_json_value(a).dump(), to_json_value(b).dump());
    EXPECT_EQ(a.trials, 100);
    EXPECT_NEAR(a.limit, a.bound + 3.0 * std::sqrt(a.bound * (1.0 - a.bound) / 100), 1e-15);

    const auto loose = run_rice_check(32, -1, 1.0, 50.0, 100, 7);
    EXPECT_EQ(loose.exceedances, 0);
    EXPECT_EQ(loose.frequency, 0.0);
    EXPECT_TRUE(loose.passed);
    EXPECT_GT(loose.threshold, a.threshold);

    EXPECT_THROW((void)run_rice_check(32, -1, 1.0, 1.0, 99, 7), ConfigError);
}

TEST(Sweep, EmptyValueListGivesHeaderOnlyCsv) {
    auto cfg = parse(R"({"mode": "sweep", "m": 32, "sigma": 0.01,
                         "measure": {"support": [0.1], "weights": [1]},
                         "sweep": {"axis": "sigma", "values": [], "base": "recover-spikes"}})");
    const auto rows = run_sweep(cfg);
    EXPECT_TRUE(rows.empty());
    std::ostringstream os;
    CsvWriter w(os, csv_schemas::sweep());
    write_sweep_csv(w, cfg, rows);
    const auto text = os.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Sweep, FlagsLambdaBelowTheNoiseLevelAndContinuesPastErrors) {
    const auto cfg = parse(R"({"mode": "sweep", "m": 32, "sigma": 0.01, "seed": 3,
                               "measure": {"support": [-0.5, 0.4], "weights": [1.5, -1]},
                               "sweep": {"axis": "lambda", "values": [1e-5, 1.0], "base": "recover-spikes"}})");
    const auto rows = run_sweep(cfg);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) ASSERT_TRUE(r.ok) << r.error;
    EXPECT_EQ(rows[0].seed, 3u);
    EXPECT_EQ(rows[1].seed, 4u);
    EXPECT_EQ(rows[0].lambda, 1e-5);
    EXPECT_TRUE(rows[0].outside_regime());
    EXPECT_FALSE(rows[1].outside_regime());

    auto bad = cfg;
    bad.sweep.axis = "m";
    bad.sweep.values = {0.0, 32.0};
    bad.lambda = 0.1;
    const auto mixed = run_sweep(bad);
    ASSERT_EQ(mixed.size(), 2u);
    EXPECT_FALSE(mixed[0].ok);
    EXPECT_NE(mixed[0].error.find("'m'"), std::string::npos) << mixed[0].error;
    EXPECT_TRUE(mixed[1].ok) << mixed[1].error;

    std::ostringstream os;
    CsvWriter w(os, csv_schemas::sweep());
    write_sweep_csv(w, bad, mixed);
    const auto text = os.str();
    EXPECT_NE(text.find(",error,"), std::string::npos);
    EXPECT_NE(text.find(",ok,"), std::string::npos);
}

TEST(Algorithm1, NoiselessSplineRecoversItsKnots) {
    const auto cfg = parse(R"({"mode": "recover-spline", "m": 24, "d": 1, "sigma0": 0, "lambda": 1e-5,
                               "lemma6_trials": 20,
                               "spline": {"degree": 1, "knots": [-0.5, 0.3],
                                          "pieces": [[0.2, 1.0], [1.7, 4.0], [2.3, 2.0]]}})");
    const auto r = run_algorithm1(cfg);
    // Round-off in the projections (about 1e-13) can leave a few atoms of
    // order 1e-8 near the ends; only the two jumps carry real mass.
    std::vector<double> t, w;
    double stray = 0.0;
    for (std::size_t i = 0; i < r.solution.measure.size(); ++i) {
        const double a = r.solution.measure.weights()[i];
        if (std::abs(a) > 1e-6) {
            t.push_back(r.solution.measure.support()[i]);
            w.push_back(a);
        } else {
            stray += std::abs(a);
        }
    }
    ASSERT_EQ(t.size(), 2u);
    EXPECT_NEAR(t[0], -0.5, 1e-4);
    EXPECT_NEAR(t[1], 0.3, 1e-4);
    EXPECT_NEAR(w[0], 3.0, 1e-3);
    EXPECT_NEAR(w[1], -2.0, 1e-3);
    EXPECT_LE(stray, 1e-6);
    EXPECT_LE(r.relative_boundary_residual(), 1e-8);
    EXPECT_TRUE(r.report.passed());
    for (int i = 0; i <= 40; ++i) {
        const double t = -1.0 + i / 20.0;
        EXPECT_NEAR(r.reconstruction.spline(t), r.truth(t), 1e-4);
    }
}

TEST(Certificates, ConfiguredRunPasses) {
    const auto r = run_certificate(load_config(fs::path(CHEBSR_CONFIG_DIR) / "certificate_m128.json"));
    EXPECT_TRUE(r.report.passed);
    EXPECT_LE(r.report.interpolation_error, 1e-8);
}

#ifdef CHEBSR_TOOL_PATH
namespace {

int run_tool(const std::string& args) {
    const std::string cmd = std::string("\"") + CHEBSR_TOOL_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir("cli");
    const auto good = dir / "good.json", noisy = dir / "noisy.json", broken = dir / "broken.json";
    std::ofstream(good) << kNoiselessSpikes;
    // A tiny lambda against real noise breaks the recovery bounds.
    std::ofstream(noisy) << R"({"mode": "recover-spikes", "m": 32, "sigma": 0.5, "lambda": 1e-4, "seed": 1,
                               "measure": {"support": [-0.6, 0.1, 0.7], "weights": [1.5, -1.0, 2.0]}})";
    std::ofstream(broken) << R"({"mode": "recover-spikes", "m": 32, "unknown": 1})";

    EXPECT_EQ(run_tool("--config " + good.string() + " --out-dir " + (dir / "g").string() + " --assert"), 0);
    EXPECT_TRUE(fs::exists(dir / "g" / "manifest.json"));
    EXPECT_EQ(run_tool("--config " + noisy.string() + " --out-dir " + (dir / "n").string()), 0);
    EXPECT_EQ(run_tool("--config " + noisy.string() + " --out-dir " + (dir / "n").string() + " --assert"), 4);
    EXPECT_EQ(run_tool("--config " + broken.string() + " --out-dir " + (dir / "b").string()), 2);
    EXPECT_EQ(run_tool("--no-such-flag"), 2);
    EXPECT_EQ(run_tool("rice-check --m 32"), 2);
    EXPECT_EQ(run_tool("rice-check --sigma 1 --trials 50 --out-dir " + (dir / "r").string()), 2);
}

TEST(Cli, OverridesTakePrecedenceOverTheFile) {
    const auto dir = scratch_dir("cli");
    const auto good = dir / "good.json";
    std::ofstream(good) << kNoiselessSpikes;
    ASSERT_EQ(run_tool("--config " + good.string() + " --seed 99 --lambda 2e-6 --out-dir " + (dir / "o").string()), 0);
    const auto manifest = json::parse(slurp(dir / "o" / "manifest.json"));
    EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 99u);
    EXPECT_EQ(manifest.at("config").at("lambda").get<double>(), 2e-6);
}
#endif
