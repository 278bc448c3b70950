#pragma once

// Scenario files: one JSON document per system.
//
//   {
//     "name": "diag-2-half",
//     "dimension": 2,
//     "kind": "constant",
//     "matrix": [2, 0, 0, 0.5],            // row-major
//     "bound_cap": 4,                      // optional
//     "analysis": { "window": 256, ... },  // optional, see AnalysisSettings
//     "output": { "dir": "out", "format": "json" }
//   }
//
// Kind payloads:
//   constant          "matrix": [d*d]
//   periodic          "matrices": [[d*d], ...]
//   piecewise         "negative": [[d*d], ...], "nonnegative": [[d*d], ...]
//   diagonal          "entries": [scalar, ...]
//   upper_triangular  "diagonal": [scalar, ...], "upper": [{"row", "col", "entry": scalar}, ...]
//   seeded_random     "seed", "period", "bands": [[lo, hi], ...], "epsilon"
//   tabulated         "first", "matrices": [[d*d], ...]
// Scalars are objects with their own "kind":
//   {"kind": "constant", "value"}, {"kind": "periodic", "values"},
//   {"kind": "piecewise", "negative", "nonnegative"},
//   {"kind": "tabulated", "first", "values"},
//   {"kind": "random", "seed", "lo", "hi", "period"}

#include "dspec/errors.hpp"
#include "dspec/linalg.hpp"
#include "dspec/sequence.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dspec {

using Json = nlohmann::json;

struct AnalysisSettings {
    std::int64_t window = 256;        ///< dichotomy window N
    std::int64_t bohl_window = 1024;  ///< Bohl window N
    std::int64_t gap_min = 16;
    double tail_fraction = 0.2;
    bool two_sided = false;
    int grid_points = 96;
    double refine_tol = 1e-3;
    double theta_min = 1e-3;
    double rho_split = 1.0;
    double delta_fit = 1e-4;
    std::uint64_t seed = 0;
    int samples_per_fiber = 20;
    int theorem2_samples = 50;
    bool escalate = false;
    unsigned jobs = 1;
    std::optional<double> tol;  ///< containment tolerance override

    bool operator==(const AnalysisSettings&) const = default;
};

struct OutputSettings {
    std::string dir;  ///< empty: print to stdout only
    std::string format = "json";
    bool operator==(const OutputSettings&) const = default;
};

struct Scenario {
    std::string name;
    MatrixSequence sequence;
    AnalysisSettings analysis;
    OutputSettings output;
};

namespace scenario_detail {

[[noreturn]] inline void fail(const std::string& what) { throw ParameterError("scenario: " + what); }

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) fail(where + " must be an object");
    std::set<std::string> ok;
    for (const char* k : allowed) ok.insert(k);
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) fail("unknown field '" + key + "' in " + where);
}

inline const Json& need(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail("missing field '" + std::string(key) + "' in " + where);
    return j.at(key);
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
    try {
        return need(j, key, where).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail("field '" + std::string(key) + "' in " + where + ": " + e.what());
    }
}

inline Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) out.push_back(m(i, k));
    return out;
}

inline Matrix matrix_from_json(const Json& j, int d, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != d * d)
        fail(where + " must be a row-major array of " + std::to_string(d * d) + " numbers");
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const auto& v = j[static_cast<std::size_t>(i * d + k)];
            if (!v.is_number()) fail(where + " must contain numbers");
            m(i, k) = v.get<double>();
        }
    return m;
}

inline Json matrices_to_json(const std::vector<Matrix>& ms) {
    Json out = Json::array();
    for (const auto& m : ms) out.push_back(matrix_to_json(m));
    return out;
}

inline std::vector<Matrix> matrices_from_json(const Json& j, int d, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where + " must be a nonempty array of matrices");
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(matrix_from_json(j[i], d, where + "[" + std::to_string(i) + "]"));
    return out;
}

inline Json scalar_to_json(const ScalarSequence& u) {
    return std::visit(
        [](const auto& k) -> Json {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ScalarConstant>) {
                return {{"kind", "constant"}, {"value", k.value}};
            } else if constexpr (std::is_same_v<K, ScalarPeriodic>) {
                return {{"kind", "periodic"}, {"values", k.values}};
            } else if constexpr (std::is_same_v<K, ScalarPiecewise>) {
                return {{"kind", "piecewise"}, {"negative", k.negative}, {"nonnegative", k.nonnegative}};
            } else if constexpr (std::is_same_v<K, ScalarTabulated>) {
                return {{"kind", "tabulated"}, {"first", k.first}, {"values", k.values}};
            } else {
                return {{"kind", "random"}, {"seed", k.seed}, {"lo", k.lo}, {"hi", k.hi}, {"period", k.period}};
            }
        },
        u.rep());
}

inline ScalarSequence scalar_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(where + " must be an object with a 'kind'");
    const auto kind = get<std::string>(j, "kind", where);
    if (kind == "constant") {
        check_keys(j, {"kind", "value"}, where);
        return ScalarSequence::constant(get<double>(j, "value", where));
    }
    if (kind == "periodic") {
        check_keys(j, {"kind", "values"}, where);
        return ScalarSequence::periodic(get<std::vector<double>>(j, "values", where));
    }
    if (kind == "piecewise") {
        check_keys(j, {"kind", "negative", "nonnegative"}, where);
        return ScalarSequence::piecewise(get<std::vector<double>>(j, "negative", where),
                                         get<std::vector<double>>(j, "nonnegative", where));
    }
    if (kind == "tabulated") {
        check_keys(j, {"kind", "first", "values"}, where);
        return ScalarSequence::tabulated(get<std::int64_t>(j, "first", where),
                                         get<std::vector<double>>(j, "values", where));
    }
    if (kind == "random") {
        check_keys(j, {"kind", "seed", "lo", "hi", "period"}, where);
        return ScalarSequence::random(get<std::uint64_t>(j, "seed", where), get<double>(j, "lo", where),
                                      get<double>(j, "hi", where), get<std::int64_t>(j, "period", where));
    }
    fail("unknown scalar kind '" + kind + "' in " + where);
}

}  // namespace scenario_detail

inline Json sequence_to_json(const MatrixSequence& seq) {
    using namespace scenario_detail;
    Json j;
    j["dimension"] = seq.dimension();
    j["kind"] = seq.kind_name();
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ConstantKind>) {
                j["matrix"] = matrix_to_json(k.matrix);
            } else if constexpr (std::is_same_v<K, PeriodicKind>) {
                j["matrices"] = matrices_to_json(k.matrices);
            } else if constexpr (std::is_same_v<K, PiecewiseKind>) {
                j["negative"] = matrices_to_json(k.negative);
                j["nonnegative"] = matrices_to_json(k.nonnegative);
            } else if constexpr (std::is_same_v<K, DiagonalKind>) {
                Json e = Json::array();
                for (const auto& u : k.entries) e.push_back(scalar_to_json(u));
                j["entries"] = e;
            } else if constexpr (std::is_same_v<K, UpperTriangularKind>) {
                Json dg = Json::array();
                for (const auto& u : k.diagonal) dg.push_back(scalar_to_json(u));
                Json up = Json::array();
                for (const auto& o : k.upper)
                    up.push_back({{"row", o.row}, {"col", o.col}, {"entry", scalar_to_json(o.entry)}});
                j["diagonal"] = dg;
                j["upper"] = up;
            } else if constexpr (std::is_same_v<K, SeededRandomKind>) {
                Json bands = Json::array();
                for (const auto& [lo, hi] : k.spec.bands) bands.push_back({lo, hi});
                j["seed"] = k.spec.seed;
                j["period"] = k.spec.period;
                j["bands"] = bands;
                j["epsilon"] = k.spec.epsilon;
            } else {
                j["first"] = k.first;
                j["matrices"] = matrices_to_json(k.matrices);
            }
        },
        seq.rep());
    if (seq.bound_cap()) j["bound_cap"] = *seq.bound_cap();
    return j;
}

/// Parses the sequence fields of a scenario object; other top-level keys are ignored here.
inline MatrixSequence sequence_from_json(const Json& j) {
    using namespace scenario_detail;
    const std::string where = "sequence";
    const int d = get<int>(j, "dimension", where);
    if (d < 1) fail("dimension must be >= 1");
    const auto kind = get<std::string>(j, "kind", where);
    std::optional<double> cap;
    if (j.contains("bound_cap")) cap = get<double>(j, "bound_cap", where);
    const auto finish = [&](MatrixSequence seq) {
        if (seq.dimension() != d) fail("payload dimension does not match 'dimension'");
        seq.set_bound_cap(cap);
        return seq;
    };
    if (kind == "constant") return finish(MatrixSequence::constant(matrix_from_json(need(j, "matrix", where), d, "matrix")));
    if (kind == "periodic")
        return finish(MatrixSequence::periodic(matrices_from_json(need(j, "matrices", where), d, "matrices")));
    if (kind == "piecewise")
        return finish(MatrixSequence::piecewise(matrices_from_json(need(j, "negative", where), d, "negative"),
                                                matrices_from_json(need(j, "nonnegative", where), d, "nonnegative")));
    if (kind == "diagonal") {
        const auto& e = need(j, "entries", where);
        if (!e.is_array()) fail("entries must be an array");
        std::vector<ScalarSequence> entries;
        for (std::size_t i = 0; i < e.size(); ++i)
            entries.push_back(scalar_from_json(e[i], "entries[" + std::to_string(i) + "]"));
        return finish(MatrixSequence::diagonal(std::move(entries)));
    }
    if (kind == "upper_triangular") {
        const auto& dg = need(j, "diagonal", where);
        if (!dg.is_array()) fail("diagonal must be an array");
        std::vector<ScalarSequence> diag;
        for (std::size_t i = 0; i < dg.size(); ++i)
            diag.push_back(scalar_from_json(dg[i], "diagonal[" + std::to_string(i) + "]"));
        std::vector<OffDiagonalEntry> upper;
        if (j.contains("upper")) {
            const auto& up = j.at("upper");
            if (!up.is_array()) fail("upper must be an array");
            for (std::size_t i = 0; i < up.size(); ++i) {
                const std::string w = "upper[" + std::to_string(i) + "]";
                check_keys(up[i], {"row", "col", "entry"}, w);
                upper.push_back({get<int>(up[i], "row", w), get<int>(up[i], "col", w),
                                 scalar_from_json(need(up[i], "entry", w), w + ".entry")});
            }
        }
        return finish(MatrixSequence::upper_triangular(std::move(diag), std::move(upper)));
    }
    if (kind == "seeded_random") {
        RandomSpec spec;
        spec.seed = get<std::uint64_t>(j, "seed", where);
        spec.period = j.contains("period") ? get<std::int64_t>(j, "period", where) : 0;
        spec.epsilon = j.contains("epsilon") ? get<double>(j, "epsilon", where) : 0.0;
        const auto& bands = need(j, "bands", where);
        if (!bands.is_array()) fail("bands must be an array of [lo, hi] pairs");
        for (const auto& b : bands) {
            if (!b.is_array() || b.size() != 2) fail("bands must be an array of [lo, hi] pairs");
            spec.bands.emplace_back(b[0].get<double>(), b[1].get<double>());
        }
        return finish(MatrixSequence::seeded_random(std::move(spec)));
    }
    if (kind == "tabulated")
        return finish(MatrixSequence::tabulated(get<std::int64_t>(j, "first", where),
                                                matrices_from_json(need(j, "matrices", where), d, "matrices")));
    fail("unknown kind '" + kind + "'");
}

inline Json analysis_to_json(const AnalysisSettings& a) {
    Json j = {{"window", a.window},
              {"bohl_window", a.bohl_window},
              {"gap_min", a.gap_min},
              {"tail_fraction", a.tail_fraction},
              {"two_sided", a.two_sided},
              {"grid_points", a.grid_points},
              {"refine_tol", a.refine_tol},
              {"theta_min", a.theta_min},
              {"rho_split", a.rho_split},
              {"delta_fit", a.delta_fit},
              {"seed", a.seed},
              {"samples_per_fiber", a.samples_per_fiber},
              {"theorem2_samples", a.theorem2_samples},
              {"escalate", a.escalate},
              {"jobs", a.jobs}};
    j["tol"] = a.tol ? Json(*a.tol) : Json(nullptr);
    return j;
}

inline AnalysisSettings analysis_from_json(const Json& j) {
    using namespace scenario_detail;
    const std::string w = "analysis";
    check_keys(j, {"window", "bohl_window", "gap_min", "tail_fraction", "two_sided", "grid_points", "refine_tol",
                   "theta_min", "rho_split", "delta_fit", "seed", "samples_per_fiber", "theorem2_samples", "escalate",
                   "jobs", "tol"},
               w);
    AnalysisSettings a;
    const auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) field = get<std::decay_t<decltype(field)>>(j, key, w);
    };
    opt("window", a.window);
    opt("bohl_window", a.bohl_window);
    opt("gap_min", a.gap_min);
    opt("tail_fraction", a.tail_fraction);
    opt("two_sided", a.two_sided);
    opt("grid_points", a.grid_points);
    opt("refine_tol", a.refine_tol);
    opt("theta_min", a.theta_min);
    opt("rho_split", a.rho_split);
    opt("delta_fit", a.delta_fit);
    opt("seed", a.seed);
    opt("samples_per_fiber", a.samples_per_fiber);
    opt("theorem2_samples", a.theorem2_samples);
    opt("escalate", a.escalate);
    opt("jobs", a.jobs);
    if (j.contains("tol") && !j.at("tol").is_null()) a.tol = get<double>(j, "tol", w);
    return a;
}

inline Json scenario_to_json(const Scenario& s) {
    Json j = sequence_to_json(s.sequence);
    j["name"] = s.name;
    j["analysis"] = analysis_to_json(s.analysis);
    j["output"] = {{"dir", s.output.dir}, {"format", s.output.format}};
    return j;
}

inline Scenario scenario_from_json(const Json& j) {
    using namespace scenario_detail;
    if (!j.is_object()) fail("top level must be an object");
    static const std::set<std::string> top = {"name", "dimension", "kind", "bound_cap", "analysis", "output",
                                              "matrix", "matrices", "negative", "nonnegative", "entries",
                                              "diagonal", "upper", "seed", "period", "bands", "epsilon", "first"};
    for (const auto& [key, value] : j.items())
        if (!top.count(key)) fail("unknown field '" + key + "'");
    Scenario s{j.contains("name") ? get<std::string>(j, "name", "scenario") : std::string(), sequence_from_json(j), {},
               {}};
    if (j.contains("analysis")) s.analysis = analysis_from_json(j.at("analysis"));
    if (j.contains("output")) {
        check_keys(j.at("output"), {"dir", "format"}, "output");
        if (j.at("output").contains("dir")) s.output.dir = get<std::string>(j.at("output"), "dir", "output");
        if (j.at("output").contains("format")) s.output.format = get<std::string>(j.at("output"), "format", "output");
    }
    if (s.output.format != "json" && s.output.format != "csv" && s.output.format != "table")
        fail("output.format must be json, csv or table");
    return s;
}

inline Scenario parse_scenario(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParameterError(std::string("scenario: malformed JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

}  // namespace dspec
