#pragma once

// JSON serialization of the library's value types and a small CSV writer
// with fixed schemas. Numbers are written without locale dependence.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chebsr/blasso.hpp"
#include "chebsr/certificates.hpp"
#include "chebsr/diagnostics.hpp"
#include "chebsr/measures.hpp"
#include "chebsr/observation.hpp"
#include "chebsr/spline_model.hpp"

namespace chebsr {

using json = nlohmann::json;

/// Malformed or inconsistent input. The message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io {

/// Reads fields out of a JSON object while keeping the dotted path for error
/// messages.
class FieldReader {
public:
    FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected a JSON object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    [[nodiscard]] const json& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError("missing field '" + field(key) + "'");
        return j_.at(key);
    }

    template <class T>
    [[nodiscard]] T get(const std::string& key) const {
        try {
            return raw(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("field '" + field(key) + "' has the wrong type");
        }
    }

    template <class T>
    [[nodiscard]] T get_or(const std::string& key, T fallback) const {
        return has(key) ? get<T>(key) : fallback;
    }

    /// Rejects keys outside `allowed`, which catches typos in configs.
    void only(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [key, value] : j_.items()) {
            bool ok = false;
            for (auto a : allowed) ok = ok || key == a;
            if (!ok) throw ConfigError("unknown field '" + field(key) + "'");
        }
    }

private:
    [[nodiscard]] std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }

    const json& j_;
    std::string path_;
};

}  // namespace io

// ---- measures ---------------------------------------------------------------

inline json to_json_value(const DiscreteMeasure& mu) {
    return {{"support", mu.support()}, {"weights", mu.weights()}};
}

inline DiscreteMeasure measure_from_json(const json& j, const std::string& path = "measure") {
    io::FieldReader r(j, path);
    r.only({"support", "weights"});
    const auto t = r.get<std::vector<double>>("support");
    const auto a = r.get<std::vector<double>>("weights");
    try {
        return {t, a};
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

// ---- splines ----------------------------------------------------------------

inline json to_json_value(const NonUniformSpline& f) {
    return {{"degree", f.degree()}, {"knots", f.knots()}, {"pieces", f.pieces()}};
}

inline NonUniformSpline spline_from_json(const json& j, const std::string& path = "spline") {
    io::FieldReader r(j, path);
    r.only({"degree", "knots", "pieces"});
    const int d = r.get<int>("degree");
    auto knots = r.get<std::vector<double>>("knots");
    auto pieces = r.get<std::vector<std::vector<double>>>("pieces");
    try {
        return {d, std::move(knots), std::move(pieces)};
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

inline json to_json_value(const BoundaryVector& b) { return {{"boundary", b.values}}; }

/// Accepts either {"boundary": [...]} or a bare array; checks the length
/// against the expected degree.
inline BoundaryVector boundary_from_json(const json& j, int d, const std::string& path = "boundary") {
    const json& arr = j.is_object() ? io::FieldReader(j, path).raw("boundary") : j;
    BoundaryVector b;
    try {
        b.values = arr.get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + path + "' must be an array of numbers");
    }
    const auto expected = static_cast<std::size_t>(2 * (d + 1));
    if (b.values.size() != expected) {
        throw ConfigError("field '" + path + "' has " + std::to_string(b.values.size()) + " entries, expected 2(d+1) = " +
                          std::to_string(expected));
    }
    return b;
}

// ---- observations -----------------------------------------------------------

inline json to_json_value(const Observation& o) {
    return {{"m", o.m},
            {"d", o.d},
            {"sigma", o.sigma},
            {"y", std::vector<double>(o.y.data(), o.y.data() + o.y.size())}};
}

inline Observation observation_from_json(const json& j, const std::string& path = "observation") {
    io::FieldReader r(j, path);
    r.only({"m", "d", "sigma", "y"});
    const auto y = r.get<std::vector<double>>("y");
    Observation o{Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())), r.get<int>("d"),
                  r.get<int>("m"), r.get_or<double>("sigma", 0.0)};
    try {
        o.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    return o;
}

// ---- solver output ----------------------------------------------------------

/// Solver summary. Wall-clock time is left out unless requested, so that the
/// document is reproducible byte for byte.
inline json to_json_value(const PrimalSolution& s, bool include_timing = false) {
    json j{{"measure", to_json_value(s.measure)},
           {"lambda", s.lambda},
           {"degenerate", s.degenerate},
           {"multipliers", std::vector<double>(s.multipliers.data(), s.multipliers.data() + s.multipliers.size())},
           {"dual_coefficients", std::vector<double>(s.dual.alpha.data(), s.dual.alpha.data() + s.dual.alpha.size())},
           {"primal_objective", s.primal_objective},
           {"dual_objective", s.dual_objective},
           {"duality_gap", s.duality_gap},
           {"kkt", {{"tv_identity_gap", s.kkt_residuals.tv_identity_gap},
                    {"feasibility_gap", s.kkt_residuals.feasibility_gap}}},
           {"sdp", {{"iterations", s.sdp_iterations}, {"status", sdp::to_string(s.sdp_status)}}}};
    if (include_timing) j["elapsed_seconds"] = s.elapsed_seconds;
    return j;
}

inline json to_json_value(const CertificateReport& r) {
    json props = json::array();
    for (const auto& p : r.properties) {
        props.push_back({{"name", p.name}, {"worst_margin", p.worst_margin}, {"points", p.points}});
    }
    return {{"kind", to_string(r.kind)},
            {"m", r.m},
            {"grid_size", r.grid_size},
            {"interpolation_error", r.interpolation_error},
            {"properties", props},
            {"bernstein_ratio", r.bernstein_ratio},
            {"odd_residual", r.odd_residual},
            {"rcond", r.rcond},
            {"passed", r.passed}};
}

inline json to_json_value(const RecoveryReport& r) {
    json loc = json::array();
    for (const auto& e : r.localization) {
        loc.push_back({{"index", e.index},
                       {"location", e.location},
                       {"amplitude", e.amplitude},
                       {"required_radius", e.required_radius},
                       {"achieved_distance", e.achieved_distance},
                       {"ok", e.ok()}});
    }
    json j{{"m", r.m},
           {"lambda", r.lambda},
           {"global_control", r.global_control},
           {"global_bound", r.global_bound},
           {"local_controls", r.local_controls},
           {"local_bound", r.local_bound},
           {"localization", loc},
           {"lemma6_margin", std::isnan(r.lemma6_margin) ? json(nullptr) : json(r.lemma6_margin)},
           {"constants", {{"c0", r.constants.c0}, {"c1", r.constants.c1}, {"c2", r.constants.c2}}},
           {"checks", {{"global", r.global_ok()},
                       {"local", r.local_ok()},
                       {"localization", r.localization_ok()},
                       {"lemma6", r.lemma6_ok()}}},
           {"passed", r.passed()}};
    return j;
}

// ---- CSV --------------------------------------------------------------------

/// Column layout of a CSV file. The version is bumped whenever columns change.
struct CsvSchema {
    std::string name;
    int version = 1;
    std::vector<std::string> columns;
};

using CsvCell = std::variant<double, long long, std::string>;

/// Writes the header on construction and checks every row against the
/// schema. Doubles use the shortest round-trip representation; non-finite
/// values are written as nan, inf or -inf.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, CsvSchema schema) : os_(os), schema_(std::move(schema)) {
        if (schema_.columns.empty()) throw std::logic_error("CsvWriter: schema '" + schema_.name + "' has no columns");
        for (std::size_t i = 0; i < schema_.columns.size(); ++i) {
            if (i) os_ << ',';
            os_ << escape(schema_.columns[i]);
        }
        os_ << '\n';
    }

    void row(const std::vector<CsvCell>& cells) {
        if (cells.size() != schema_.columns.size()) {
            throw std::logic_error("CsvWriter: schema '" + schema_.name + "' expects " +
                                   std::to_string(schema_.columns.size()) + " fields, got " +
                                   std::to_string(cells.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            std::visit([this](const auto& v) { write_cell(v); }, cells[i]);
        }
        os_ << '\n';
        ++rows_;
    }

    [[nodiscard]] const CsvSchema& schema() const { return schema_; }
    [[nodiscard]] std::size_t rows() const { return rows_; }

    static std::string format(double v) {
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        if (res.ec != std::errc{}) throw std::runtime_error("CsvWriter: number formatting failed");
        return {buf, res.ptr};
    }

    static std::string escape(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string out = "\"";
        for (char ch : s) {
            if (ch == '"') out += '"';
            out += ch;
        }
        return out + '"';
    }

private:
    void write_cell(double v) { os_ << format(v); }
    void write_cell(long long v) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        os_.write(buf, res.ptr - buf);
    }
    void write_cell(const std::string& s) { os_ << escape(s); }

    std::ostream& os_;
    CsvSchema schema_;
    std::size_t rows_ = 0;
};

namespace csv_schemas {

inline CsvSchema curves() { return {"curves", 1, {"t", "f_true", "f_hat", "P_approx"}}; }

inline CsvSchema spikes() { return {"spikes", 1, {"source", "location", "weight"}}; }

inline CsvSchema sweep() {
    return {"sweep",
            1,
            {"index", "axis", "value", "seed", "status", "lambda", "lambda0", "outside_regime", "global_control",
             "global_bound", "max_local_control", "local_bound", "large_spikes", "localized", "lemma6_margin",
             "duality_gap", "kkt_tv_gap", "kkt_feasibility_gap", "boundary_residual", "error"}};
}

}  // namespace csv_schemas

}  // namespace chebsr
