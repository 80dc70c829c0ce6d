#pragma once

// Scenario documents: YAML, schema version 1. Every validation failure names
// the offending line and carries its own ErrorCode.
//
//   schema_version: 1                       # required
//   seed: 1
//   robot_start: [0, 0]                     # required
//   target:
//     mean: [4, 3]                          # required
//     cov: [[4, 0], [0, 4]]                 # required, symmetric PSD
//     true_start: [5, 2]                    # defaults to mean
//     dynamics: [[1, 0], [0, 1]]
//     process_noise: [[0.05, 0], [0, 0.05]]
//   motion:
//     step_size: 1
//     controls: [[1, 0], [-1, 0], ...]      # defaults to the four axis moves
//   sensor:
//     obs_matrix: [[1, 0], [0, 1]]
//     base_var: 0.5
//     slope_var: 1.0
//     range: 10
//     ceiling: 5
//   planner:
//     horizon: 2
//     candidates: 5
//     candidate_mode: seeded_gaussian          # or deterministic_quantile
//     node_budget: 20000000
//   prune:
//     eps1: 0
//     eps2: 0
//     alpha: true
//     redundancy: true
//     domination: pairwise                      # or simplex_grid
//     grid_resolution: 10

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <yaml-cpp/yaml.h>

#include "mmtrack/scenario.hpp"

namespace mmtrack {

inline constexpr int kSchemaVersion = 1;

namespace yamlio {

inline std::string where(const std::string& source, const YAML::Node& node) {
    const auto mark = node.Mark();
    if (mark.line < 0) return source;
    return source + ":" + std::to_string(mark.line + 1);
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& source, const YAML::Node& node,
                              const std::string& msg) {
    throw Error(code, where(source, node) + ": " + msg);
}

inline void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                       const std::string& source) {
    for (const auto& kv : map) {
        const auto name = kv.first.as<std::string>();
        bool ok = false;
        for (auto a : allowed) ok = ok || a == name;
        if (!ok) fail(ErrorCode::unknown_field, source, kv.first, "unknown field '" + name + "'");
    }
}

inline YAML::Node section(const YAML::Node& parent, const char* key, const std::string& source) {
    const YAML::Node n = parent[key];
    if (n && !n.IsMap()) fail(ErrorCode::wrong_type, source, n, std::string("'") + key + "' must be a mapping");
    if (n) return n;
    return YAML::Node(YAML::NodeType::Map);
}

inline YAML::Node require(const YAML::Node& parent, const char* key, const std::string& source) {
    const YAML::Node n = parent[key];
    if (!n) fail(ErrorCode::missing_field, source, parent, std::string("missing required field '") + key + "'");
    return n;
}

inline double number(const YAML::Node& n, const std::string& source, const std::string& what) {
    if (!n.IsScalar()) fail(ErrorCode::wrong_type, source, n, what + " must be a number");
    double v = 0.0;
    try {
        v = n.as<double>();
    } catch (const YAML::Exception&) {
        fail(ErrorCode::wrong_type, source, n, what + " must be a number");
    }
    if (!std::isfinite(v)) fail(ErrorCode::non_finite_input, source, n, what + " must be finite");
    return v;
}

inline double number_or(const YAML::Node& parent, const char* key, double fallback, const std::string& source) {
    const YAML::Node n = parent[key];
    return n ? number(n, source, key) : fallback;
}

inline long long integer(const YAML::Node& n, const std::string& source, const std::string& what) {
    if (!n.IsScalar()) fail(ErrorCode::wrong_type, source, n, what + " must be an integer");
    try {
        return n.as<long long>();
    } catch (const YAML::Exception&) {
        fail(ErrorCode::wrong_type, source, n, what + " must be an integer");
    }
}

inline bool boolean_or(const YAML::Node& parent, const char* key, bool fallback, const std::string& source) {
    const YAML::Node n = parent[key];
    if (!n) return fallback;
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        fail(ErrorCode::wrong_type, source, n, std::string(key) + " must be true or false");
    }
}

inline Vec2 vec2(const YAML::Node& n, const std::string& source, const std::string& what) {
    if (!n.IsSequence() || n.size() != 2) fail(ErrorCode::wrong_type, source, n, what + " must be a list of 2 numbers");
    return {number(n[0], source, what), number(n[1], source, what)};
}

inline Mat2 mat2(const YAML::Node& n, const std::string& source, const std::string& what) {
    if (!n.IsSequence() || n.size() != 2) fail(ErrorCode::wrong_type, source, n, what + " must be a 2x2 list of rows");
    const Vec2 r0 = vec2(n[0], source, what);
    const Vec2 r1 = vec2(n[1], source, what);
    return {r0.x, r0.y, r1.x, r1.y};
}

inline SymMat2 covariance(const YAML::Node& n, const std::string& source, const std::string& what) {
    const Mat2 m = mat2(n, source, what);
    const double scale = std::max({1.0, std::abs(m.b), std::abs(m.c)});
    if (std::abs(m.b - m.c) > 1e-12 * scale) fail(ErrorCode::asymmetric_matrix, source, n, what + " is not symmetric");
    const SymMat2 s{m.a, m.b, m.d};
    if (!s.is_psd()) fail(ErrorCode::non_psd_covariance, source, n, what + " is not positive semi-definite");
    return s;
}

template <typename Enum>
Enum mode(const YAML::Node& n, std::initializer_list<std::pair<std::string_view, Enum>> options,
          const std::string& source, const std::string& what) {
    if (!n.IsScalar()) fail(ErrorCode::wrong_type, source, n, what + " must be a string");
    const auto text = n.as<std::string>();
    for (const auto& [name, value] : options) {
        if (name == text) return value;
    }
    fail(ErrorCode::unknown_mode, source, n, "unknown " + what + " '" + text + "'");
}

}  // namespace yamlio

/// Parse and validate a scenario document. `source` is used in error messages.
inline Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>") {
    using namespace yamlio;
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::parse_error, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!doc.IsMap()) throw Error(ErrorCode::parse_error, source + ": document must be a mapping");
    check_keys(doc, {"schema_version", "seed", "robot_start", "target", "motion", "sensor", "planner", "prune"}, source);

    const YAML::Node version = require(doc, "schema_version", source);
    if (integer(version, source, "schema_version") != kSchemaVersion) {
        fail(ErrorCode::unsupported_schema, source, version, "unsupported schema_version");
    }

    Scenario s = default_scenario();
    if (const auto n = doc["seed"]) {
        const long long seed = integer(n, source, "seed");
        if (seed < 0) fail(ErrorCode::wrong_type, source, n, "seed must be non-negative");
        s.seed = static_cast<std::uint64_t>(seed);
    }
    s.robot_start = vec2(require(doc, "robot_start", source), source, "robot_start");

    const YAML::Node target = require(doc, "target", source);
    if (!target.IsMap()) fail(ErrorCode::wrong_type, source, target, "'target' must be a mapping");
    check_keys(target, {"mean", "cov", "true_start", "dynamics", "process_noise"}, source);
    s.estimate0.mean = vec2(require(target, "mean", source), source, "target.mean");
    s.estimate0.cov = covariance(require(target, "cov", source), source, "target.cov");
    s.target_true0 = target["true_start"] ? vec2(target["true_start"], source, "target.true_start") : s.estimate0.mean;
    if (target["dynamics"]) s.target.dynamics = mat2(target["dynamics"], source, "target.dynamics");
    if (target["process_noise"]) {
        s.target.process_noise = covariance(target["process_noise"], source, "target.process_noise");
    }

    const YAML::Node motion = section(doc, "motion", source);
    check_keys(motion, {"step_size", "controls"}, source);
    const double step = number_or(motion, "step_size", 1.0, source);
    if (!(step > 0.0)) fail(ErrorCode::invalid_step_size, source, motion["step_size"], "step_size must be > 0");
    if (const auto controls = motion["controls"]) {
        if (!controls.IsSequence()) fail(ErrorCode::wrong_type, source, controls, "controls must be a list");
        if (controls.size() == 0) fail(ErrorCode::empty_control_set, source, controls, "control set is empty");
        s.motion.step_size = step;
        s.motion.controls.clear();
        for (const auto& c : controls) s.motion.controls.push_back(vec2(c, source, "control"));
    } else {
        s.motion = MotionModel::axis_moves(step);
    }

    const YAML::Node sensor = section(doc, "sensor", source);
    check_keys(sensor, {"obs_matrix", "base_var", "slope_var", "range", "ceiling"}, source);
    if (sensor["obs_matrix"]) s.sensor.obs_matrix = mat2(sensor["obs_matrix"], source, "sensor.obs_matrix");
    s.sensor.base_var = number_or(sensor, "base_var", s.sensor.base_var, source);
    s.sensor.slope_var = number_or(sensor, "slope_var", s.sensor.slope_var, source);
    s.sensor.range = number_or(sensor, "range", s.sensor.range, source);
    s.sensor.ceiling = number_or(sensor, "ceiling", s.sensor.ceiling, source);
    if (s.sensor.base_var < 0.0) fail(ErrorCode::negative_variance, source, sensor["base_var"], "base_var must be >= 0");
    if (s.sensor.slope_var < 0.0) fail(ErrorCode::negative_variance, source, sensor["slope_var"], "slope_var must be >= 0");
    if (!(s.sensor.range > 0.0)) fail(ErrorCode::nonpositive_range, source, sensor["range"], "range must be > 0");
    if (!(s.sensor.ceiling > 0.0)) fail(ErrorCode::nonpositive_ceiling, source, sensor["ceiling"], "ceiling must be > 0");

    const YAML::Node planner = section(doc, "planner", source);
    check_keys(planner, {"horizon", "candidates", "candidate_mode", "node_budget"}, source);
    if (const auto n = planner["horizon"]) {
        const long long h = integer(n, source, "horizon");
        if (h < 1 || h > 64) fail(ErrorCode::invalid_horizon, source, n, "horizon must be in [1, 64]");
        s.horizon = static_cast<int>(h);
    }
    if (const auto n = planner["candidates"]) {
        const long long k = integer(n, source, "candidates");
        if (k < 1 || k > 1000) fail(ErrorCode::invalid_candidate_count, source, n, "candidates must be in [1, 1000]");
        s.candidates = static_cast<int>(k);
    }
    if (const auto n = planner["candidate_mode"]) {
        s.candidate_mode = mode<CandidateMode>(
            n, {{"deterministic_quantile", CandidateMode::deterministic_quantile},
                {"seeded_gaussian", CandidateMode::seeded_gaussian}},
            source, "candidate_mode");
    }
    if (const auto n = planner["node_budget"]) {
        const long long b = integer(n, source, "node_budget");
        if (b < 1) fail(ErrorCode::invalid_argument, source, n, "node_budget must be >= 1");
        s.node_budget = static_cast<std::uint64_t>(b);
    }

    const YAML::Node prune = section(doc, "prune", source);
    check_keys(prune, {"eps1", "eps2", "alpha", "redundancy", "domination", "grid_resolution"}, source);
    s.prune.eps1 = number_or(prune, "eps1", 0.0, source);
    s.prune.eps2 = number_or(prune, "eps2", 0.0, source);
    if (s.prune.eps1 < 0.0) fail(ErrorCode::negative_epsilon, source, prune["eps1"], "eps1 must be >= 0");
    if (s.prune.eps2 < 0.0) fail(ErrorCode::negative_epsilon, source, prune["eps2"], "eps2 must be >= 0");
    s.prune.alpha_enabled = boolean_or(prune, "alpha", true, source);
    s.prune.redundancy_enabled = boolean_or(prune, "redundancy", true, source);
    if (const auto n = prune["domination"]) {
        s.prune.domination = mode<DominationMode>(
            n, {{"pairwise", DominationMode::pairwise}, {"simplex_grid", DominationMode::simplex_grid}}, source,
            "domination mode");
    }
    if (const auto n = prune["grid_resolution"]) {
        const long long r = integer(n, source, "grid_resolution");
        if (r < 1 || r > 1000) fail(ErrorCode::invalid_grid_resolution, source, n, "grid_resolution must be in [1, 1000]");
        s.prune.grid_resolution = static_cast<int>(r);
    }
    return s;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_text_file(path), path.string());
}

namespace yamlio {

inline void emit(YAML::Emitter& out, Vec2 v) { out << YAML::Flow << YAML::BeginSeq << v.x << v.y << YAML::EndSeq; }

inline void emit(YAML::Emitter& out, const Mat2& m) {
    out << YAML::Flow << YAML::BeginSeq;
    out << YAML::Flow << YAML::BeginSeq << m.a << m.b << YAML::EndSeq;
    out << YAML::Flow << YAML::BeginSeq << m.c << m.d << YAML::EndSeq;
    out << YAML::EndSeq;
}

}  // namespace yamlio

/// Serialise with every field explicit; parse_scenario(to_yaml(s)) == s.
inline std::string to_yaml(const Scenario& s) {
    using yamlio::emit;
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "schema_version" << YAML::Value << kSchemaVersion;
    out << YAML::Key << "seed" << YAML::Value << s.seed;
    out << YAML::Key << "robot_start" << YAML::Value;
    emit(out, s.robot_start);

    out << YAML::Key << "target" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mean" << YAML::Value;
    emit(out, s.estimate0.mean);
    out << YAML::Key << "cov" << YAML::Value;
    emit(out, s.estimate0.cov.full());
    out << YAML::Key << "true_start" << YAML::Value;
    emit(out, s.target_true0);
    out << YAML::Key << "dynamics" << YAML::Value;
    emit(out, s.target.dynamics);
    out << YAML::Key << "process_noise" << YAML::Value;
    emit(out, s.target.process_noise.full());
    out << YAML::EndMap;

    out << YAML::Key << "motion" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "step_size" << YAML::Value << s.motion.step_size;
    out << YAML::Key << "controls" << YAML::Value << YAML::BeginSeq;
    for (const auto& u : s.motion.controls) emit(out, u);
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "sensor" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "obs_matrix" << YAML::Value;
    emit(out, s.sensor.obs_matrix);
    out << YAML::Key << "base_var" << YAML::Value << s.sensor.base_var;
    out << YAML::Key << "slope_var" << YAML::Value << s.sensor.slope_var;
    out << YAML::Key << "range" << YAML::Value << s.sensor.range;
    out << YAML::Key << "ceiling" << YAML::Value << s.sensor.ceiling;
    out << YAML::EndMap;

    out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << s.horizon;
    out << YAML::Key << "candidates" << YAML::Value << s.candidates;
    out << YAML::Key << "candidate_mode" << YAML::Value << std::string(to_string(s.candidate_mode));
    out << YAML::Key << "node_budget" << YAML::Value << s.node_budget;
    out << YAML::EndMap;

    out << YAML::Key << "prune" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "eps1" << YAML::Value << s.prune.eps1;
    out << YAML::Key << "eps2" << YAML::Value << s.prune.eps2;
    out << YAML::Key << "alpha" << YAML::Value << s.prune.alpha_enabled;
    out << YAML::Key << "redundancy" << YAML::Value << s.prune.redundancy_enabled;
    out << YAML::Key << "domination" << YAML::Value << std::string(to_string(s.prune.domination));
    out << YAML::Key << "grid_resolution" << YAML::Value << s.prune.grid_resolution;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    f << to_yaml(s);
}

}  // namespace mmtrack
