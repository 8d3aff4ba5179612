// Experiment configuration: a sectioned key=value format (JSON also
// accepted), validated against a per-experiment parameter registry with
// defaults.  Parsing rejects unknown keys and reports the key and line; the
// fully resolved configuration can be emitted back out, which is how run
// directories get their config echo.
#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stllab/rng.hpp"

namespace stllab {

inline constexpr int kSchemaVersion = 1;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ParamType { Int, Double, Bool, String, List };

struct ParamSpec {
    std::string name;
    ParamType type;
    std::string default_value;
    // optional numeric range check (applied to Int/Double and List elements)
    bool has_range = false;
    double lo = 0.0, hi = 0.0;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string experiment;
    std::uint64_t seed = 1;
    std::map<std::string, std::string> params;

    bool operator==(const ExperimentConfig&) const = default;

    const std::string& raw(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw ConfigError("missing key '" + key + "'");
        return it->second;
    }
    long long get_int(const std::string& key) const { return std::stoll(raw(key)); }
    double get_double(const std::string& key) const { return std::stod(raw(key)); }
    bool get_bool(const std::string& key) const { return raw(key) == "true" || raw(key) == "1"; }
    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        std::istringstream ss(raw(key));
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(std::stod(tok));
        return out;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline bool parses_as(ParamType t, const std::string& v) {
    try {
        std::size_t pos = 0;
        switch (t) {
            case ParamType::Int:
                (void)std::stoll(v, &pos);
                return pos == v.size();
            case ParamType::Double:
                (void)std::stod(v, &pos);
                return pos == v.size();
            case ParamType::Bool:
                return v == "true" || v == "false" || v == "0" || v == "1";
            case ParamType::String:
                return true;
            case ParamType::List: {
                std::istringstream ss(v);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    if (tok.empty()) continue;
                    pos = 0;
                    (void)std::stod(tok, &pos);
                    if (pos != tok.size()) return false;
                }
                return true;
            }
        }
    } catch (...) {
        return false;
    }
    return false;
}

}  // namespace detail

// Registry of experiments and their parameters.
inline const std::map<std::string, std::vector<ParamSpec>>& experiment_registry() {
    static const std::map<std::string, std::vector<ParamSpec>> reg = {
        {"gmm-stl",
         {{"n", ParamType::Int, "500", true, 8, 1e9},
          {"d", ParamType::Int, "2", true, 1, 64},
          {"alpha", ParamType::Double, "0.5", true, 0.0, 1.0},
          {"generations", ParamType::Int, "10", true, 0, 1000},
          {"sigma2", ParamType::Double, "1.0", true, 1e-9, 1e9},
          {"classifier_m", ParamType::Int, "0", true, 0, 1e9},  // 0 = ceil(sqrt(n))
          {"stratified", ParamType::Bool, "false"},
          {"fixed_real_subset", ParamType::Bool, "false"},
          {"oversample_factor", ParamType::Double, "1.0", true, 1.0, 100.0},
          {"variance_floor", ParamType::Double, "1e-12", true, 0.0, 1.0},
          {"seeds", ParamType::Int, "1", true, 1, 100000}}},
        {"gauss-collapse",
         {{"n", ParamType::Int, "100", true, 4, 1e9},
          {"generations", ParamType::Int, "20", true, 1, 1000},
          {"mu0", ParamType::Double, "0.0"},
          {"sigma0", ParamType::Double, "1.0", true, 1e-12, 1e9},
          {"seeds", ParamType::Int, "1", true, 1, 100000}}},
        {"tf-stability",
         {{"n_list", ParamType::List, "8,16,32"},
          {"l_list", ParamType::List, "1,2"},
          {"bw_list", ParamType::List, "0.25,0.5"},
          {"alpha_list", ParamType::List, "0,0.25,0.5"},
          {"gen_list", ParamType::List, "1,2,3"},
          {"trials", ParamType::Int, "50", true, 1, 100000},
          {"d", ParamType::Int, "5", true, 2, 64},
          {"seeds", ParamType::Int, "1", true, 1, 100000}}},
        {"icl-stl",
         {{"d", ParamType::Int, "5", true, 1, 64},
          {"context_n", ParamType::Int, "40", true, 4, 100000},
          {"alpha", ParamType::Double, "0.5", true, 0.0, 1.0},
          {"loops", ParamType::Int, "6", true, 1, 100},
          {"tasks", ParamType::Int, "32", true, 1, 100000},
          {"noise_real", ParamType::Double, "0.5", true, 0.0, 100.0},
          {"noise_synth", ParamType::Double, "1.0", true, 0.0, 100.0},
          {"eval_queries", ParamType::Int, "32", true, 1, 100000},
          {"ridge", ParamType::Double, "0.0", true, 0.0, 1e12},
          {"seeds", ParamType::Int, "10", true, 1, 100000}}},
        {"sgd-stability",
         {{"n_list", ParamType::List, "64,128,256,512"},
          {"trials", ParamType::Int, "200", true, 1, 100000},
          {"probe", ParamType::Int, "512", true, 1, 1000000},
          {"t_mult", ParamType::Int, "4", true, 1, 1000},
          {"d", ParamType::Int, "5", true, 1, 64},
          {"radius", ParamType::Double, "10.0", true, 1e-6, 1e6},
          {"c_eta", ParamType::Double, "1.0", true, 1e-6, 1e6},
          {"x_radius", ParamType::Double, "1.0", true, 1e-6, 1e6},
          {"w_scale", ParamType::Double, "2.0", true, 0.0, 1e6},
          {"seeds", ParamType::Int, "1", true, 1, 100000}}},
        {"bounds",
         {{"theorem", ParamType::String, "thm1"},  // thm1|thm3|thm4|gmm-stability|gmm-generalization|tf
          {"n", ParamType::Double, "1000", true, 1, 1e15},
          {"n_list", ParamType::List, ""},
          {"alpha", ParamType::Double, "0.5", true, 0.0, 1.0},
          {"i", ParamType::Int, "5", true, 0, 10000},
          {"lambda", ParamType::Double, "1.0", true, 1e-12, 1e12},
          {"delta", ParamType::Double, "0.1", true, 1e-15, 1.0},
          {"M", ParamType::Double, "1.0", true, 0.0, 1e12},
          {"rho", ParamType::Double, "1.0", true, 0.0, 1e12},
          {"kappa", ParamType::Double, "1.0", true, 0.0, 1e12},
          {"B_W", ParamType::Double, "0.5", true, 0.0, 100.0},
          {"L", ParamType::Int, "2", true, 1, 1000},
          {"dim", ParamType::Double, "2", true, 1, 1e6},
          {"d_tv", ParamType::Double, "0.0", true, 0.0, 1.0},
          {"beta_n", ParamType::Double, "0.0", true, 0.0, 1e12},
          {"gamma_n_i", ParamType::Double, "0.0", true, 0.0, 1e12},
          {"proof_form", ParamType::Bool, "false"},
          {"seeds", ParamType::Int, "1", true, 1, 1}}},
        {"lambda-star",
         {{"n", ParamType::Double, "1000", true, 1, 1e15},
          {"n_list", ParamType::List, ""},
          {"i", ParamType::Int, "5", true, 0, 10000},
          {"rho", ParamType::Double, "1.0", true, 0.0, 1e12},
          {"M", ParamType::Double, "1.0", true, 0.0, 1e12},
          {"B_W", ParamType::Double, "0.5", true, 0.0, 100.0},
          {"L", ParamType::Int, "2", true, 1, 1000},
          {"delta", ParamType::Double, "0.1", true, 1e-15, 1.0},
          {"c_list", ParamType::List, "0.5,1,2"},
          {"seeds", ParamType::Int, "1", true, 1, 1}}},
    };
    return reg;
}

// Applies defaults and validates names, types and ranges.  `lines` carries
// the source line of each key for error messages (may be empty).
inline ExperimentConfig resolve_config(ExperimentConfig cfg,
                                       const std::map<std::string, int>& lines = {}) {
    auto where = [&](const std::string& key) {
        auto it = lines.find(key);
        return it == lines.end() ? std::string() : " (line " + std::to_string(it->second) + ")";
    };
    const auto& reg = experiment_registry();
    const auto found = reg.find(cfg.experiment);
    if (cfg.experiment.empty()) throw ConfigError("missing required key 'experiment'");
    if (found == reg.end()) throw ConfigError("unknown experiment '" + cfg.experiment + "'");
    const auto& specs = found->second;
    for (const auto& [key, value] : cfg.params) {
        const ParamSpec* spec = nullptr;
        for (const auto& s : specs)
            if (s.name == key) spec = &s;
        if (!spec) throw ConfigError("unknown key '" + key + "'" + where(key));
        if (!detail::parses_as(spec->type, value))
            throw ConfigError("type mismatch for key '" + key + "': '" + value + "'" + where(key));
        if (spec->has_range && spec->type != ParamType::String && spec->type != ParamType::Bool) {
            std::vector<double> vals;
            if (spec->type == ParamType::List) {
                ExperimentConfig tmp;
                tmp.params[key] = value;
                vals = tmp.get_list(key);
            } else {
                vals.push_back(std::stod(value));
            }
            for (double v : vals)
                if (v < spec->lo || v > spec->hi) {
                    std::ostringstream range;
                    range << key << " out of [" << spec->lo << "," << spec->hi << "]";
                    throw ConfigError(range.str() + where(key));
                }
        }
    }
    for (const auto& s : specs)
        if (!cfg.params.count(s.name)) cfg.params[s.name] = s.default_value;
    return cfg;
}

// Text format:
//   schema_version = 1
//   experiment = gmm-stl
//   seed = 1
//   [params]
//   n = 500
// Keys outside [params] other than the three header keys are rejected.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, int> lines;
    const std::string trimmed = detail::trim(text);
    if (!trimmed.empty() && trimmed.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(trimmed);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("JSON parse error: ") + e.what());
        }
        auto to_string = [](const nlohmann::json& v) -> std::string {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
            std::ostringstream os;
            os << v;
            return os.str();
        };
        for (const auto& [key, value] : j.items()) {
            if (key == "schema_version")
                cfg.schema_version = value.get<int>();
            else if (key == "experiment")
                cfg.experiment = value.get<std::string>();
            else if (key == "seed")
                cfg.seed = value.get<std::uint64_t>();
            else if (key == "params" && value.is_object())
                for (const auto& [pk, pv] : value.items()) cfg.params[pk] = to_string(pv);
            else
                cfg.params[key] = to_string(value);
        }
    } else {
        std::istringstream ss(text);
        std::string line;
        int lineno = 0;
        std::string section;
        while (std::getline(ss, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[' && t.back() == ']') {
                section = detail::trim(t.substr(1, t.size() - 2));
                if (section != "params")
                    throw ConfigError("unknown section '" + section + "' (line " +
                                      std::to_string(lineno) + ")");
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key=value (line " + std::to_string(lineno) + ")");
            const std::string key = detail::trim(t.substr(0, eq));
            const std::string value = detail::trim(t.substr(eq + 1));
            if (key.empty())
                throw ConfigError("empty key (line " + std::to_string(lineno) + ")");
            if (section.empty()) {
                if (key == "schema_version")
                    cfg.schema_version = std::stoi(value);
                else if (key == "experiment")
                    cfg.experiment = value;
                else if (key == "seed")
                    cfg.seed = std::stoull(value);
                else
                    throw ConfigError("unknown key '" + key + "' outside [params] (line " +
                                      std::to_string(lineno) + ")");
            } else {
                cfg.params[key] = value;
                lines[key] = lineno;
            }
        }
    }
    if (cfg.schema_version != kSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
    return resolve_config(std::move(cfg), lines);
}

// Canonical emission; parse(emit(c)) == c for resolved configs.
inline std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "schema_version = " << cfg.schema_version << "\n";
    os << "experiment = " << cfg.experiment << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "[params]\n";
    for (const auto& [k, v] : cfg.params) os << k << " = " << v << "\n";
    return os.str();
}

// Run metadata appended to config echoes.
inline std::string config_echo(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "# resolved configuration (all defaults applied)\n";
    os << "# rng_algorithm = " << kRngAlgorithm << "\n";
    os << emit_config(cfg);
    return os.str();
}

}  // namespace stllab
