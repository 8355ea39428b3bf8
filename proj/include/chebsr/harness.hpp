#pragma once

// Experiment driver behind the command-line tool: configuration, the five run
// modes, and artifact writing. Every run is a deterministic function of the
// configuration and its seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chebsr/blasso.hpp"
#include "chebsr/certificates.hpp"
#include "chebsr/diagnostics.hpp"
#include "chebsr/io.hpp"
#include "chebsr/measures.hpp"
#include "chebsr/observation.hpp"
#include "chebsr/spline_model.hpp"

namespace chebsr {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Mode { RecoverSpikes, RecoverSpline, Certificate, RiceCheck, Sweep };

[[nodiscard]] inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::RecoverSpikes: return "recover-spikes";
        case Mode::RecoverSpline: return "recover-spline";
        case Mode::Certificate: return "certificate";
        case Mode::RiceCheck: return "rice-check";
        case Mode::Sweep: return "sweep";
    }
    return "?";
}

[[nodiscard]] inline Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::RecoverSpikes, Mode::RecoverSpline, Mode::Certificate, Mode::RiceCheck, Mode::Sweep}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("field 'mode': unknown mode '" + s + "'");
}

/// SplitMix64 finalizer, used to derive independent seeds from one user seed.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct RandomSpikeSpec {
    int count = 3;
    double amplitude_min = 1.0;
    double amplitude_max = 2.0;
    bool random_signs = true;
};

struct SweepSpec {
    std::string axis;  ///< sigma0, sigma, m or lambda
    std::vector<double> values;
    Mode base = Mode::RecoverSpline;
};

struct ExperimentConfig {
    Mode mode = Mode::RecoverSpikes;
    int m = 0;
    std::optional<int> d;
    double sigma = 0.0;   ///< moment noise level (spike recovery, Rice check)
    double sigma0 = 0.0;  ///< normalized noise level (spline recovery)
    double eta = 1.0;
    std::optional<double> lambda;
    std::uint64_t seed = 0;

    std::optional<DiscreteMeasure> measure;
    std::optional<RandomSpikeSpec> random_target;
    std::optional<NonUniformSpline> spline;
    std::optional<RandomSpikeSpec> random_spline;  ///< knots and jump sizes
    std::optional<BoundaryVector> boundary;
    std::optional<ChebPoly> approximation;

    std::vector<double> support;  ///< certificate support; random when empty
    int support_size = 3;
    CertificateKind certificate_kind = CertificateKind::QIC;
    std::vector<double> targets;
    int grid = 10000;

    int trials = 10000;
    int lemma6_trials = 100;
    SweepSpec sweep;

    std::string out_dir = "out";
    bool include_timing = false;

    /// Effective spline degree for spike modes (-1 when absent).
    [[nodiscard]] int degree() const { return d.value_or(spline ? spline->degree() : -1); }
};

namespace detail {

inline RandomSpikeSpec random_spec_from_json(const json& j, const std::string& path) {
    io::FieldReader r(j, path);
    r.only({"count", "amplitude_min", "amplitude_max", "random_signs"});
    RandomSpikeSpec s;
    s.count = r.get_or<int>("count", s.count);
    s.amplitude_min = r.get_or<double>("amplitude_min", s.amplitude_min);
    s.amplitude_max = r.get_or<double>("amplitude_max", s.amplitude_max);
    s.random_signs = r.get_or<bool>("random_signs", s.random_signs);
    if (s.count < 1) throw ConfigError("field '" + r.field("count") + "' must be at least 1");
    if (!(s.amplitude_min > 0.0) || !(s.amplitude_max >= s.amplitude_min)) {
        throw ConfigError("field '" + path + "': need 0 < amplitude_min <= amplitude_max");
    }
    return s;
}

inline json random_spec_to_json(const RandomSpikeSpec& s) {
    return {{"count", s.count},
            {"amplitude_min", s.amplitude_min},
            {"amplitude_max", s.amplitude_max},
            {"random_signs", s.random_signs}};
}

}  // namespace detail

/// Checks the mode-specific requirements. Throws ConfigError naming the field.
inline void validate(const ExperimentConfig& c) {
    const int d = c.degree();
    if (c.m < 1) throw ConfigError("field 'm' must be a positive integer");
    if (d < -1 || c.m <= d) throw ConfigError("field 'd': need m > d >= -1");
    if (!(c.sigma >= 0.0)) throw ConfigError("field 'sigma' must be nonnegative");
    if (!(c.sigma0 >= 0.0)) throw ConfigError("field 'sigma0' must be nonnegative");
    if (!(c.eta > 0.0)) throw ConfigError("field 'eta' must be positive");
    if (c.lambda && !(*c.lambda > 0.0)) throw ConfigError("field 'lambda' must be positive");
    if (c.lemma6_trials < 1) throw ConfigError("field 'lemma6_trials' must be at least 1");
    switch (c.mode) {
        case Mode::RecoverSpikes:
            if (!c.measure && !c.random_target) throw ConfigError("recover-spikes needs 'measure' or 'random_target'");
            if (c.sigma == 0.0 && !c.lambda) throw ConfigError("field 'lambda' is required when sigma = 0");
            break;
        case Mode::RecoverSpline:
            if (!c.spline && !c.random_spline) throw ConfigError("recover-spline needs 'spline' or 'random_spline'");
            if (d < 0) throw ConfigError("field 'd': spline recovery needs d >= 0");
            if (c.spline && c.spline->degree() != d) {
                throw ConfigError("field 'd' disagrees with the degree of 'spline'");
            }
            if (c.boundary && c.boundary->values.size() != static_cast<std::size_t>(2 * (d + 1))) {
                throw ConfigError("field 'boundary' has the wrong length for degree " + std::to_string(d));
            }
            if (c.approximation && c.approximation->degree_bound() > c.m - d - 1) {
                throw ConfigError("field 'approximation' exceeds degree m-d-1 = " + std::to_string(c.m - d - 1));
            }
            if (c.sigma0 == 0.0 && !c.lambda) throw ConfigError("field 'lambda' is required when sigma0 = 0");
            break;
        case Mode::Certificate:
            if (c.m < 2 || c.m % 2 != 0) throw ConfigError("field 'm' must be even for certificates");
            if (c.support.empty() && c.support_size < 1) throw ConfigError("field 'support_size' must be positive");
            if (!c.targets.empty() && c.targets.size() != (c.support.empty() ? std::size_t(c.support_size) : c.support.size())) {
                throw ConfigError("field 'targets' needs one entry per support point");
            }
            if (c.grid < 10 * c.m) throw ConfigError("field 'grid' must be at least 10 m");
            break;
        case Mode::RiceCheck:
            if (c.trials < 100) throw ConfigError("field 'trials' must be at least 100");
            if (!(c.sigma > 0.0)) throw ConfigError("field 'sigma' must be positive for the Rice check");
            break;
        case Mode::Sweep: {
            const auto& a = c.sweep.axis;
            if (a != "sigma0" && a != "sigma" && a != "m" && a != "lambda") {
                throw ConfigError("field 'sweep.axis' must be one of sigma0, sigma, m, lambda");
            }
            if (c.sweep.base != Mode::RecoverSpikes && c.sweep.base != Mode::RecoverSpline) {
                throw ConfigError("field 'sweep.base' must be recover-spikes or recover-spline");
            }
            break;
        }
    }
}

[[nodiscard]] inline ExperimentConfig config_from_json(const json& j) {
    io::FieldReader r(j, "");
    r.only({"mode", "m", "d", "sigma", "sigma0", "eta", "lambda", "seed", "measure", "random_target", "spline",
            "random_spline", "boundary", "approximation", "support", "support_size", "certificate_kind", "targets",
            "grid", "trials", "lemma6_trials", "sweep", "out_dir", "include_timing"});
    ExperimentConfig c;
    if (r.has("mode")) c.mode = mode_from_string(r.get<std::string>("mode"));
    c.m = r.get_or<int>("m", 0);
    if (r.has("d")) c.d = r.get<int>("d");
    c.sigma = r.get_or<double>("sigma", 0.0);
    c.sigma0 = r.get_or<double>("sigma0", 0.0);
    c.eta = r.get_or<double>("eta", 1.0);
    if (r.has("lambda")) c.lambda = r.get<double>("lambda");
    c.seed = r.get_or<std::uint64_t>("seed", 0);
    if (r.has("measure")) c.measure = measure_from_json(r.raw("measure"), "measure");
    if (r.has("random_target")) c.random_target = detail::random_spec_from_json(r.raw("random_target"), "random_target");
    if (r.has("spline")) c.spline = spline_from_json(r.raw("spline"), "spline");
    if (r.has("random_spline")) c.random_spline = detail::random_spec_from_json(r.raw("random_spline"), "random_spline");
    if (r.has("boundary")) c.boundary = boundary_from_json(r.raw("boundary"), c.degree(), "boundary");
    if (r.has("approximation")) {
        auto coeffs = r.get<std::vector<double>>("approximation");
        if (coeffs.empty()) throw ConfigError("field 'approximation' must not be empty");
        c.approximation = ChebPoly(std::move(coeffs));
    }
    c.support = r.get_or<std::vector<double>>("support", {});
    c.support_size = r.get_or<int>("support_size", c.support_size);
    if (r.has("certificate_kind")) {
        const auto k = r.get<std::string>("certificate_kind");
        if (k == "qic") {
            c.certificate_kind = CertificateKind::QIC;
        } else if (k == "signed_interpolant") {
            c.certificate_kind = CertificateKind::SignedInterpolant;
        } else {
            throw ConfigError("field 'certificate_kind' must be qic or signed_interpolant");
        }
    }
    c.targets = r.get_or<std::vector<double>>("targets", {});
    c.grid = r.get_or<int>("grid", c.grid);
    c.trials = r.get_or<int>("trials", c.trials);
    c.lemma6_trials = r.get_or<int>("lemma6_trials", c.lemma6_trials);
    if (r.has("sweep")) {
        io::FieldReader s(r.raw("sweep"), "sweep");
        s.only({"axis", "values", "base"});
        c.sweep.axis = s.get<std::string>("axis");
        c.sweep.values = s.get_or<std::vector<double>>("values", {});
        if (s.has("base")) c.sweep.base = mode_from_string(s.get<std::string>("base"));
    }
    c.out_dir = r.get_or<std::string>("out_dir", c.out_dir);
    c.include_timing = r.get_or<bool>("include_timing", false);
    return c;
}

[[nodiscard]] inline json config_to_json(const ExperimentConfig& c) {
    json j{{"mode", to_string(c.mode)}, {"m", c.m},         {"sigma", c.sigma},   {"sigma0", c.sigma0},
           {"eta", c.eta},              {"seed", c.seed},   {"grid", c.grid},     {"trials", c.trials},
           {"lemma6_trials", c.lemma6_trials}};
    if (c.d) j["d"] = *c.d;
    if (c.lambda) j["lambda"] = *c.lambda;
    if (c.measure) j["measure"] = to_json_value(*c.measure);
    if (c.random_target) j["random_target"] = detail::random_spec_to_json(*c.random_target);
    if (c.spline) j["spline"] = to_json_value(*c.spline);
    if (c.random_spline) j["random_spline"] = detail::random_spec_to_json(*c.random_spline);
    if (c.boundary) j["boundary"] = c.boundary->values;
    if (c.approximation) j["approximation"] = c.approximation->coeffs;
    if (c.mode == Mode::Certificate) {
        j["support"] = c.support;
        j["support_size"] = c.support_size;
        j["certificate_kind"] = to_string(c.certificate_kind);
        j["targets"] = c.targets;
    }
    if (c.mode == Mode::Sweep) {
        j["sweep"] = {{"axis", c.sweep.axis}, {"values", c.sweep.values}, {"base", to_string(c.sweep.base)}};
    }
    return j;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

// ---- random targets ---------------------------------------------------------

/// Rejection sampling of `count` arccos-uniform points until separation_ok
/// holds at order m.
[[nodiscard]] inline std::vector<double> random_separated_support(int count, int m, GaussianStream& g,
                                                                  int max_attempts = 100000) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<double> t(static_cast<std::size_t>(count));
        for (double& v : t) v = std::cos(kPi * g.uniform());
        std::sort(t.begin(), t.end());
        if (std::adjacent_find(t.begin(), t.end()) != t.end()) continue;
        if (separation_ok(t, m)) return t;
    }
    throw ConfigError("could not draw " + std::to_string(count) + " separated points at m = " + std::to_string(m));
}

[[nodiscard]] inline std::vector<double> random_amplitudes(const RandomSpikeSpec& s, std::size_t n, GaussianStream& g) {
    std::vector<double> a(n);
    for (double& v : a) {
        v = s.amplitude_min + (s.amplitude_max - s.amplitude_min) * g.uniform();
        if (s.random_signs && g.uniform() < 0.5) v = -v;
    }
    return a;
}

[[nodiscard]] inline DiscreteMeasure random_spike_target(const RandomSpikeSpec& s, int m, std::uint64_t seed) {
    GaussianStream g(seed);
    auto t = random_separated_support(s.count, m, g);
    auto a = random_amplitudes(s, t.size(), g);
    return {std::move(t), std::move(a)};
}

/// A degree-d spline whose top-derivative jumps follow `s` at separated
/// knots, with standard normal left boundary data.
[[nodiscard]] inline NonUniformSpline random_spline_target(const RandomSpikeSpec& s, int m, int d, std::uint64_t seed) {
    GaussianStream g(seed);
    auto t = random_separated_support(s.count, m, g);
    auto a = random_amplitudes(s, t.size(), g);
    BoundaryVector b;
    b.values.assign(static_cast<std::size_t>(2 * (d + 1)), 0.0);
    for (int l = 0; l <= d; ++l) b.values[static_cast<std::size_t>(l)] = g();
    return integrate_from_spikes(DiscreteMeasure(std::move(t), std::move(a)), b, d).spline;
}

// ---- run results --------------------------------------------------------------

struct SpikeRunResult {
    DiscreteMeasure truth;
    Observation observation;
    PrimalSolution solution;
    double lambda = 0.0;
    double lambda0 = 0.0;  ///< lambda_rice at the configured eta; 0 without noise
    RecoveryReport report;
};

struct SplineRunResult {
    NonUniformSpline truth;
    BoundaryVector boundary;
    ChebPoly approximation;
    Observation observation;
    PrimalSolution solution;
    SplineReconstruction reconstruction;
    double sigma = 0.0;  ///< noise level on the pairings
    double lambda = 0.0;
    double lambda0 = 0.0;
    RecoveryReport report;

    /// Right-boundary mismatch relative to the size of the boundary data.
    [[nodiscard]] double relative_boundary_residual() const {
        double scale = 1.0;
        for (double v : boundary.values) scale = std::max(scale, std::abs(v));
        return reconstruction.right_boundary_residual / scale;
    }
};

struct CertificateRunResult {
    Certificate certificate;
    CertificateReport report;
};

struct RiceCheckResult {
    int m = 0;
    int d = -1;
    double sigma = 0.0;
    double eta = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    int grid_points = 0;
    double threshold = 0.0;  ///< lambda_rice(sigma, m, d, eta)
    double bound = 0.0;      ///< rice_tail_bound at the threshold
    long exceedances = 0;
    double frequency = 0.0;
    double standard_error = 0.0;  ///< sqrt(bound (1 - bound) / trials)
    double limit = 0.0;           ///< bound + 3 standard errors
    bool passed = false;
};

struct SweepRow {
    int index = 0;
    double value = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double lambda0 = std::numeric_limits<double>::quiet_NaN();
    RecoveryReport report;
    double duality_gap = std::numeric_limits<double>::quiet_NaN();
    KktResiduals kkt{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double boundary_residual = std::numeric_limits<double>::quiet_NaN();

    [[nodiscard]] bool outside_regime() const { return ok && lambda < lambda0; }
};

// ---- runs ----------------------------------------------------------------------

[[nodiscard]] inline SpikeRunResult run_spike_recovery(const ExperimentConfig& cfg, const BlassoOptions& opts = {}) {
    validate(cfg);
    const int d = cfg.degree();
    SpikeRunResult out;
    out.truth = cfg.measure ? *cfg.measure : random_spike_target(*cfg.random_target, cfg.m, cfg.seed);
    const std::uint64_t noise_seed = derive_seed(cfg.seed);
    out.observation = simulate(out.truth, cfg.m, d, cfg.sigma, noise_seed);
    out.lambda0 = cfg.sigma > 0.0 ? lambda_rice(cfg.sigma, cfg.m, d, cfg.eta) : 0.0;
    out.lambda = cfg.lambda.value_or(out.lambda0);
    out.solution = solve_blasso(out.observation, out.lambda, opts);
    out.report = recovery_report(out.solution.measure, out.truth, out.lambda, cfg.m);
    evaluate_lemma6(out.report, out.solution.measure, out.truth, out.lambda0, cfg.lemma6_trials, derive_seed(noise_seed));
    return out;
}

/// Spline recovery from a polynomial approximation and boundary data: pair
/// the approximation with the differentiated basis, move to spike moments,
/// solve the constrained program, and integrate the spikes back.
[[nodiscard]] inline SplineRunResult run_algorithm1(const ExperimentConfig& cfg, const BlassoOptions& opts = {}) {
    validate(cfg);
    const int m = cfg.m, d = cfg.degree();
    const std::uint64_t noise_seed = derive_seed(cfg.seed);
    SplineRunResult out{cfg.spline ? *cfg.spline : random_spline_target(*cfg.random_spline, m, d, cfg.seed),
                        {}, ChebPoly{}, {}, {}, {NonUniformSpline(d, {}, {{}}), {}, 0.0}, 0.0, 0.0, 0.0, {}};
    out.boundary = cfg.boundary ? *cfg.boundary : boundary_vector(out.truth);
    out.sigma = scaled_sigma(cfg.sigma0, m, d);
    out.approximation =
        cfg.approximation ? *cfg.approximation : simulate_polynomial_approximation(out.truth, m, out.sigma, noise_seed);
    out.observation = assemble_y_from_projection(theta_of_polynomial(out.approximation, m, d), out.boundary, m, d,
                                                 out.sigma);
    out.lambda0 = out.sigma > 0.0 ? lambda_rice(out.sigma, m, d, cfg.eta) : 0.0;
    out.lambda = cfg.lambda.value_or(lambda_algorithm(out.sigma, m, d, cfg.eta));
    out.solution = solve_blasso(out.observation, out.lambda, opts);
    out.reconstruction = integrate_from_spikes(out.solution.measure, out.boundary, d);
    out.report = theorem2_report(out.reconstruction.spline, out.truth, out.lambda, m);
    evaluate_lemma6(out.report, out.solution.measure, distributional_derivative(out.truth), out.lambda0,
                    cfg.lemma6_trials, derive_seed(noise_seed));
    return out;
}

[[nodiscard]] inline CertificateRunResult run_certificate(const ExperimentConfig& cfg) {
    validate(cfg);
    GaussianStream g(cfg.seed);
    std::vector<double> T = cfg.support;
    if (T.empty()) {
        T = random_separated_support(cfg.support_size, cfg.m, g);
    } else if (!std::is_sorted(T.begin(), T.end())) {
        throw ConfigError("field 'support' must be increasing");
    }
    std::vector<double> targets = cfg.targets;
    if (targets.empty()) {
        targets.assign(T.size(), -1.0);
        if (cfg.certificate_kind == CertificateKind::SignedInterpolant) {
            targets[0] = 1.0;
        } else {
            for (double& v : targets) v = g.uniform() < 0.5 ? -1.0 : 1.0;
        }
    }
    CertificateRunResult out;
    try {
        out.certificate = build_certificate(T, cfg.m, targets, cfg.certificate_kind);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    out.report = verify_certificate(out.certificate, cfg.grid);
    return out;
}

/// Monte Carlo frequency of sup |sum_{k>d} eps_k phi_k| > lambda_rice over a
/// 4096-point Chebyshev extrema grid. Trial i uses the stream seeded with
/// seed + i.
[[nodiscard]] inline RiceCheckResult run_rice_check(int m, int d, double sigma, double eta, int trials,
                                                    std::uint64_t seed) {
    if (trials < 100) throw ConfigError("field 'trials' must be at least 100");
    RiceCheckResult r{m, d, sigma, eta, trials, seed, 4096};
    r.threshold = lambda_rice(sigma, m, d, eta);
    r.bound = rice_tail_bound(r.threshold, sigma, m, d);
    const auto grid = chebyshev_extrema_grid(r.grid_points);
    const int n = m - d;
    Eigen::MatrixXd B(r.grid_points, n);
    for (int i = 0; i < r.grid_points; ++i) {
        for (int k = d + 1; k <= m; ++k) B(i, k - d - 1) = eval_phi(k, grid[static_cast<std::size_t>(i)]);
    }
    Eigen::VectorXd eps(n);
    for (int trial = 0; trial < trials; ++trial) {
        GaussianStream g(seed + static_cast<std::uint64_t>(trial));
        for (int k = 0; k < n; ++k) eps(k) = sigma * g();
        if ((B * eps).cwiseAbs().maxCoeff() > r.threshold) ++r.exceedances;
    }
    r.frequency = static_cast<double>(r.exceedances) / trials;
    r.standard_error = std::sqrt(r.bound * (1.0 - r.bound) / trials);
    r.limit = r.bound + 3.0 * r.standard_error;
    r.passed = r.frequency <= r.limit;
    return r;
}

[[nodiscard]] inline RiceCheckResult run_rice_check(const ExperimentConfig& cfg) {
    validate(cfg);
    return run_rice_check(cfg.m, cfg.degree(), cfg.sigma, cfg.eta, cfg.trials, cfg.seed);
}

// ---- JSON views of results ---------------------------------------------------

[[nodiscard]] inline json to_json_value(const RiceCheckResult& r) {
    return {{"m", r.m},
            {"d", r.d},
            {"sigma", r.sigma},
            {"eta", r.eta},
            {"trials", r.trials},
            {"seed", r.seed},
            {"grid_points", r.grid_points},
            {"threshold", r.threshold},
            {"bound", r.bound},
            {"exceedances", r.exceedances},
            {"frequency", r.frequency},
            {"standard_error", r.standard_error},
            {"limit", r.limit},
            {"passed", r.passed}};
}

// ---- artifacts ---------------------------------------------------------------

/// Collects the files of one run and writes them, followed by a manifest
/// listing each file and, for CSV files, its schema and version.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void write_json(const std::string& name, const json& j) {
        std::ofstream os(open(name));
        os << j.dump(2) << '\n';
        files_.push_back({{"name", name}, {"format", "json"}});
    }

    /// Opens a CSV file; the callback fills it through the writer.
    template <class Fill>
    void write_csv(const std::string& name, const CsvSchema& schema, Fill&& fill) {
        std::ofstream os(open(name));
        CsvWriter w(os, schema);
        fill(w);
        files_.push_back({{"name", name},
                          {"format", "csv"},
                          {"schema", schema.name},
                          {"schema_version", schema.version},
                          {"rows", w.rows()}});
    }

    void finish(const ExperimentConfig& cfg, const json& summary) {
        json manifest{{"tool", "chebsr"},
                      {"version", kToolVersion},
                      {"mode", to_string(cfg.mode)},
                      {"seed", cfg.seed},
                      {"config", config_to_json(cfg)},
                      {"summary", summary},
                      {"files", files_}};
        std::ofstream os(open("manifest.json"));
        os << manifest.dump(2) << '\n';
    }

    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

private:
    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
        return os;
    }

    std::filesystem::path dir_;
    json files_ = json::array();
};

inline void write_spike_csv(CsvWriter& w, const DiscreteMeasure& truth, const DiscreteMeasure& recovered) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
        w.row({std::string("true"), truth.support()[i], truth.weights()[i]});
    }
    for (std::size_t i = 0; i < recovered.size(); ++i) {
        w.row({std::string("recovered"), recovered.support()[i], recovered.weights()[i]});
    }
}

inline json write_artifacts(const SpikeRunResult& r, const ExperimentConfig& cfg, ArtifactWriter& out) {
    out.write_json("spikes.json", {{"true", to_json_value(r.truth)}, {"recovered", to_json_value(r.solution.measure)}});
    out.write_json("observation.json", to_json_value(r.observation));
    out.write_json("solution.json", to_json_value(r.solution, cfg.include_timing));
    json report = to_json_value(r.report);
    report["lambda0"] = r.lambda0;
    out.write_json("report.json", report);
    out.write_csv("spikes.csv", csv_schemas::spikes(),
                  [&](CsvWriter& w) { write_spike_csv(w, r.truth, r.solution.measure); });
    return {{"passed", r.report.passed()}, {"lambda", r.lambda}, {"duality_gap", r.solution.duality_gap}};
}

inline json write_artifacts(const SplineRunResult& r, const ExperimentConfig& cfg, ArtifactWriter& out) {
    out.write_json("spline_hat.json", to_json_value(r.reconstruction.spline));
    out.write_json("spline_true.json", to_json_value(r.truth));
    out.write_json("spikes.json", {{"true", to_json_value(distributional_derivative(r.truth))},
                                   {"recovered", to_json_value(r.solution.measure)}});
    out.write_json("solution.json", to_json_value(r.solution, cfg.include_timing));
    json report = to_json_value(r.report);
    report["sigma"] = r.sigma;
    report["lambda0"] = r.lambda0;
    report["boundary"] = r.boundary.values;
    report["right_boundary_mismatch"] = r.reconstruction.right_boundary_mismatch;
    report["relative_boundary_residual"] = r.relative_boundary_residual();
    out.write_json("report.json", report);
    out.write_csv("curves.csv", csv_schemas::curves(), [&](CsvWriter& w) {
        constexpr int n = 1024;
        for (int i = 0; i < n; ++i) {
            const double t = (i == n - 1) ? 1.0 : -1.0 + 2.0 * i / (n - 1);
            w.row({t, r.truth(t), r.reconstruction.spline(t), r.approximation(t)});
        }
    });
    out.write_csv("spikes.csv", csv_schemas::spikes(), [&](CsvWriter& w) {
        write_spike_csv(w, distributional_derivative(r.truth), r.solution.measure);
    });
    return {{"passed", r.report.passed()},
            {"lambda", r.lambda},
            {"relative_boundary_residual", r.relative_boundary_residual()}};
}

inline json write_artifacts(const CertificateRunResult& r, const ExperimentConfig&, ArtifactWriter& out) {
    out.write_json("certificate.json", {{"kind", to_string(r.certificate.kind)},
                                        {"m", r.certificate.m},
                                        {"support", r.certificate.support},
                                        {"targets", r.certificate.targets},
                                        {"phi_coefficients", r.certificate.poly.coeffs}});
    out.write_json("report.json", to_json_value(r.report));
    return {{"passed", r.report.passed}};
}

inline json write_artifacts(const RiceCheckResult& r, const ExperimentConfig&, ArtifactWriter& out) {
    out.write_json("rice.json", to_json_value(r));
    return {{"passed", r.passed}};
}

/// One run per sweep value with seed + index. Failed rows are recorded and
/// the sweep continues. Per-row artifacts go to row_<index>/ when `out` is
/// given.
[[nodiscard]] inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, ArtifactWriter* out = nullptr,
                                                     const BlassoOptions& opts = {}) {
    validate(cfg);
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
        SweepRow row;
        row.index = static_cast<int>(i);
        row.value = cfg.sweep.values[i];
        row.seed = cfg.seed + i;
        ExperimentConfig c = cfg;
        c.mode = cfg.sweep.base;
        c.seed = row.seed;
        const auto& axis = cfg.sweep.axis;
        if (axis == "sigma0") c.sigma0 = row.value;
        if (axis == "sigma") c.sigma = row.value;
        if (axis == "lambda") c.lambda = row.value;
        if (axis == "m") c.m = static_cast<int>(std::lround(row.value));
        try {
            std::optional<ArtifactWriter> sub;
            if (out) sub.emplace(out->dir() / ("row_" + std::to_string(i)));
            if (c.mode == Mode::RecoverSpline) {
                const auto r = run_algorithm1(c, opts);
                row.lambda = r.lambda;
                row.lambda0 = r.lambda0;
                row.report = r.report;
                row.duality_gap = r.solution.duality_gap;
                row.kkt = r.solution.kkt_residuals;
                row.boundary_residual = r.relative_boundary_residual();
                if (sub) sub->finish(c, write_artifacts(r, c, *sub));
            } else {
                const auto r = run_spike_recovery(c, opts);
                row.lambda = r.lambda;
                row.lambda0 = r.lambda0;
                row.report = r.report;
                row.duality_gap = r.solution.duality_gap;
                row.kkt = r.solution.kkt_residuals;
                if (sub) sub->finish(c, write_artifacts(r, c, *sub));
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_sweep_csv(CsvWriter& w, const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        double max_local = nan;
        long long localized = 0;
        if (r.ok) {
            max_local = 0.0;
            for (double v : r.report.local_controls) max_local = std::max(max_local, v);
            for (const auto& e : r.report.localization) localized += e.ok() ? 1 : 0;
        }
        w.row({static_cast<long long>(r.index), cfg.sweep.axis, r.value, static_cast<long long>(r.seed),
               std::string(r.ok ? "ok" : "error"), r.lambda, r.lambda0,
               static_cast<long long>(r.outside_regime() ? 1 : 0), r.ok ? r.report.global_control : nan,
               r.ok ? r.report.global_bound : nan, max_local, r.ok ? r.report.local_bound : nan,
               static_cast<long long>(r.report.localization.size()), localized,
               r.ok ? r.report.lemma6_margin : nan, r.duality_gap, r.kkt.tv_identity_gap, r.kkt.feasibility_gap,
               r.boundary_residual, r.error});
    }
}

}  // namespace chebsr
