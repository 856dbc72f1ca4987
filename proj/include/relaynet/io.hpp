#pragma once

// =============================================================================
// relaynet - Config parsing and CSV emission
// =============================================================================
// JSON schema:
//   { "plant":    { "A": [[...]] | number, "B": [[...]] | number (optional),
//                   "noise_var": number | [[...]], "init_var": number | [[...]] },
//     "topology": { "kind": "cascade" | "parallel" | "half_duplex" | "two_hop"
//                           | "full_duplex", ...kind-specific fields },
//     "lambda":   number (optional), "capacity": number (optional),
//     "scheme":   string (optional), "sweep": {...} (optional) }
// Unknown keys are rejected. CSV output uses '.' decimals, ',' separators, a
// header row, and 12 significant digits.
// =============================================================================

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relaynet/mc.hpp"
#include "relaynet/model.hpp"

namespace relaynet {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    std::string variable;  ///< "L", "Pr", "Ps", or "lambda"
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
};

struct RunConfig {
    PlantModel plant;
    NetworkTopology topology;
    std::optional<double> lambda;
    std::optional<double> capacity;
    std::optional<std::string> scheme;
    std::optional<SweepSpec> sweep;
};

namespace detail_io {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key \"" + std::string(key) + "\" in " + where);
    if (!obj[key].is_number()) throw ConfigError("key \"" + std::string(key) + "\" in " + where + " must be a number");
    return obj[key].get<double>();
}

inline std::vector<double> require_array(const json& obj, const char* key,
                                         const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key \"" + std::string(key) + "\" in " + where);
    const auto& v = obj[key];
    if (!v.is_array()) throw ConfigError("key \"" + std::string(key) + "\" in " + where + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError("non-numeric entry under \"" + std::string(key) + "\" in " + where);
        out.push_back(e.get<double>());
    }
    return out;
}

/// number -> broadcast to n; array -> as-is (size checked by validation)
inline std::optional<std::vector<double>> optional_powers(const json& obj, const char* key,
                                                          size_t n, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const auto& v = obj[key];
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    if (v.is_array()) return require_array(obj, key, where);
    throw ConfigError("key \"" + std::string(key) + "\" in " + where + " must be a number or array");
}

inline Eigen::MatrixXd parse_matrix(const json& v, const std::string& where) {
    if (v.is_number()) return Eigen::MatrixXd::Constant(1, 1, v.get<double>());
    if (!v.is_array() || v.empty() || !v[0].is_array())
        throw ConfigError(where + " must be a number or row-major array of arrays");
    const size_t rows = v.size();
    const size_t cols = v[0].size();
    Eigen::MatrixXd m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        if (!v[i].is_array() || v[i].size() != cols)
            throw ConfigError(where + " has ragged rows");
        for (size_t j = 0; j < cols; ++j) {
            if (!v[i][j].is_number()) throw ConfigError(where + " has a non-numeric entry");
            m(Eigen::Index(i), Eigen::Index(j)) = v[i][j].get<double>();
        }
    }
    return m;
}

inline Eigen::MatrixXd parse_cov(const json& v, Eigen::Index n, const std::string& where) {
    if (v.is_number()) {
        return Eigen::MatrixXd::Identity(n, n) * v.get<double>();
    }
    return parse_matrix(v, where);
}

}  // namespace detail_io

inline PlantModel parse_plant(const json& obj) {
    using namespace detail_io;
    if (!obj.is_object()) throw ConfigError("\"plant\" must be an object");
    reject_unknown(obj, {"A", "B", "noise_var", "init_var"}, "plant");
    if (!obj.contains("A")) throw ConfigError("missing key \"A\" in plant");
    PlantModel p;
    p.a_matrix = parse_matrix(obj["A"], "plant.A");
    const Eigen::Index n = p.a_matrix.rows();
    p.b_matrix = obj.contains("B") ? parse_matrix(obj["B"], "plant.B")
                                   : Eigen::MatrixXd::Identity(n, n);
    if (!obj.contains("noise_var")) throw ConfigError("missing key \"noise_var\" in plant");
    if (!obj.contains("init_var")) throw ConfigError("missing key \"init_var\" in plant");
    p.process_noise = parse_cov(obj["noise_var"], n, "plant.noise_var");
    p.init_cov = parse_cov(obj["init_var"], n, "plant.init_var");
    return p;
}

inline NetworkTopology parse_topology(const json& obj) {
    using namespace detail_io;
    if (!obj.is_object()) throw ConfigError("\"topology\" must be an object");
    if (!obj.contains("kind") || !obj["kind"].is_string())
        throw ConfigError("topology needs a string \"kind\"");
    const std::string kind = obj["kind"].get<std::string>();

    if (kind == "cascade") {
        reject_unknown(obj, {"kind", "hops", "sensor_power", "relay_budget", "relay_powers",
                             "noise_vars"},
                       "cascade topology");
        Cascade t;
        t.hops = int(require_number(obj, "hops", "cascade topology"));
        t.sensor_power = require_number(obj, "sensor_power", "cascade topology");
        t.relay_budget = require_number(obj, "relay_budget", "cascade topology");
        t.noise_vars = require_array(obj, "noise_vars", "cascade topology");
        t.relay_powers = optional_powers(obj, "relay_powers",
                                         t.hops >= 1 ? size_t(t.hops - 1) : 0, "cascade topology");
        return t;
    }
    if (kind == "parallel") {
        reject_unknown(obj, {"kind", "sensor_power", "relay_budget", "relay_powers",
                             "relay_noise", "ctrl_noise"},
                       "parallel topology");
        Parallel t;
        t.sensor_power = require_number(obj, "sensor_power", "parallel topology");
        t.relay_budget = require_number(obj, "relay_budget", "parallel topology");
        t.relay_noise = require_array(obj, "relay_noise", "parallel topology");
        if (obj.contains("ctrl_noise") && obj["ctrl_noise"].is_number())
            t.ctrl_noise.assign(t.relay_noise.size(), obj["ctrl_noise"].get<double>());
        else
            t.ctrl_noise = require_array(obj, "ctrl_noise", "parallel topology");
        t.relay_powers =
            optional_powers(obj, "relay_powers", t.relay_noise.size(), "parallel topology");
        return t;
    }
    if (kind == "half_duplex" || kind == "two_hop") {
        const bool twohop = kind == "two_hop";
        if (twohop)
            reject_unknown(obj, {"kind", "sensor_power", "relay_budget", "relay_powers",
                                 "relay_noise", "ctrl_noise", "relay_gains"},
                           "two_hop topology");
        else
            reject_unknown(obj, {"kind", "sensor_power", "relay_budget", "relay_powers", "beta",
                                 "relay_noise", "ctrl_noise", "direct_gain", "relay_gains"},
                           "half_duplex topology");
        HalfDuplex t;
        t.sensor_power = require_number(obj, "sensor_power", kind);
        t.relay_budget = require_number(obj, "relay_budget", kind);
        t.relay_noise = require_array(obj, "relay_noise", kind);
        t.ctrl_noise = require_number(obj, "ctrl_noise", kind);
        t.relay_gains = require_array(obj, "relay_gains", kind);
        t.relay_powers = optional_powers(obj, "relay_powers", t.relay_noise.size(), kind);
        if (twohop) {
            t.direct_gain = 0.0;
            t.beta = 1.0;
            t.two_hop = true;
        } else {
            t.direct_gain = require_number(obj, "direct_gain", kind);
            if (obj.contains("beta")) t.beta = require_number(obj, "beta", kind);
        }
        return t;
    }
    if (kind == "full_duplex") {
        reject_unknown(obj, {"kind", "sensor_power", "relay_budget", "relay_powers",
                             "relay_noise", "ctrl_noise", "direct_gain", "relay_gains"},
                       "full_duplex topology");
        FullDuplex t;
        t.sensor_power = require_number(obj, "sensor_power", kind);
        t.relay_budget = require_number(obj, "relay_budget", kind);
        t.relay_noise = require_array(obj, "relay_noise", kind);
        t.ctrl_noise = require_number(obj, "ctrl_noise", kind);
        t.direct_gain = require_number(obj, "direct_gain", kind);
        t.relay_gains = require_array(obj, "relay_gains", kind);
        t.relay_powers = optional_powers(obj, "relay_powers", t.relay_noise.size(), kind);
        return t;
    }
    throw ConfigError("unknown topology kind \"" + kind + "\"");
}

inline RunConfig parse_config(const json& root) {
    using namespace detail_io;
    if (!root.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(root, {"plant", "topology", "lambda", "capacity", "scheme", "sweep"}, "config");
    if (!root.contains("plant")) throw ConfigError("missing key \"plant\"");
    if (!root.contains("topology")) throw ConfigError("missing key \"topology\"");
    RunConfig cfg;
    cfg.plant = parse_plant(root["plant"]);
    cfg.topology = parse_topology(root["topology"]);
    if (root.contains("lambda")) cfg.lambda = require_number(root, "lambda", "config");
    if (root.contains("capacity")) cfg.capacity = require_number(root, "capacity", "config");
    if (root.contains("scheme")) {
        if (!root["scheme"].is_string()) throw ConfigError("\"scheme\" must be a string");
        cfg.scheme = root["scheme"].get<std::string>();
    }
    if (root.contains("sweep")) {
        const auto& s = root["sweep"];
        reject_unknown(s, {"var", "from", "to", "steps"}, "sweep");
        SweepSpec sw;
        if (!s.contains("var") || !s["var"].is_string())
            throw ConfigError("sweep needs a string \"var\"");
        sw.variable = s["var"].get<std::string>();
        sw.from = require_number(s, "from", "sweep");
        sw.to = require_number(s, "to", "sweep");
        sw.steps = int(require_number(s, "steps", "sweep"));
        cfg.sweep = sw;
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
    return parse_config(root);
}

// =============================================================================
// CSV formatting
// =============================================================================

/// 12 significant digits, '.' decimal point (locale-independent).
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string moment_trace_csv(const MomentTrace& t) {
    std::ostringstream out;
    out << "checkpoint,moment,stderr,n_divergent_trials\n";
    for (size_t i = 0; i < t.checkpoints.size(); ++i) {
        out << t.checkpoints[i] << ',' << csv_num(t.moments[i]) << ',' << csv_num(t.stderrs[i])
            << ',' << t.divergent_count[i] << '\n';
    }
    return out.str();
}

}  // namespace relaynet
