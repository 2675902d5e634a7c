#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pulsefront/errors.hpp"
#include "pulsefront/frontsim.hpp"
#include "pulsefront/medium.hpp"

namespace pulsefront {

/// Flat [section] key = value text config. Sections and keys are
/// case-sensitive; '#' and ';' start comments.
class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str(), path);
    }

    static Config parse_text(const std::string& text, const std::string& origin = "<text>") {
        Config cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[section + "." + key] = val;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        auto it = values_.find(section + "." + key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("field " + section + "." + key + " = '" + it->second +
                              "' is not a number");
        }
    }

    int get_int(const std::string& section, const std::string& key, int fallback) const {
        const double v = get_double(section, key, fallback);
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw ConfigError("field " + section + "." + key + " must be an integer");
        return i;
    }

    /// Record a resolved value so the effective configuration can be dumped.
    void set(const std::string& section, const std::string& key, const std::string& val) {
        values_[section + "." + key] = val;
    }

    /// Deterministic text form: sections and keys sorted.
    std::string serialize() const {
        std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
        for (const auto& [sk, v] : values_) {
            const auto dot = sk.find('.');
            by_section[sk.substr(0, dot)].push_back({sk.substr(dot + 1), v});
        }
        std::string out;
        for (auto& [sec, kvs] : by_section) {
            out += "[" + sec + "]\n";
            std::sort(kvs.begin(), kvs.end());
            for (const auto& [k, v] : kvs) out += k + " = " + v + "\n";
            out += "\n";
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    std::map<std::string, std::string> values_;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// [medium] section -> MediumSpec, with defaults recorded back into cfg.
inline MediumSpec medium_from_config(Config& cfg) {
    MediumSpec spec;
    spec.family = family_from_string(cfg.get_string("medium", "family", "kpp_logistic"));
    spec.a_hr = cfg.get_double("medium", "a_hr", 4.0);
    spec.g0 = cfg.get_double("medium", "g0", 0.0);
    spec.g1 = cfg.get_double("medium", "g1", 0.0);
    spec.rate0 = cfg.get_double("medium", "rate0", 1.0);
    spec.diff0 = cfg.get_double("medium", "diff0", 1.0);
    spec.diff1 = cfg.get_double("medium", "diff1", 0.0);
    spec.q = cfg.get_double("medium", "q", 0.0);
    spec.L = cfg.get_double("medium", "L", 1.0);
    spec.resolution = cfg.get_int("medium", "resolution", 64);
    cfg.set("medium", "family", to_string(spec.family));
    cfg.set("medium", "a_hr", format_double(spec.a_hr));
    cfg.set("medium", "g0", format_double(spec.g0));
    cfg.set("medium", "g1", format_double(spec.g1));
    cfg.set("medium", "rate0", format_double(spec.rate0));
    cfg.set("medium", "diff0", format_double(spec.diff0));
    cfg.set("medium", "diff1", format_double(spec.diff1));
    cfg.set("medium", "q", format_double(spec.q));
    cfg.set("medium", "L", format_double(spec.L));
    cfg.set("medium", "resolution", std::to_string(spec.resolution));
    return spec;
}

/// [sim] section -> SimConfig (grid, scheme, relaxation and extraction knobs).
inline SimConfig sim_from_config(Config& cfg) {
    SimConfig sc;
    sc.h = cfg.get_double("sim", "h", 1.0 / 128.0);
    sc.window = cfg.get_double("sim", "window", 40.0);
    sc.scheme = scheme_from_string(cfg.get_string("sim", "scheme", "explicit"));
    sc.dt = cfg.get_double("sim", "dt", 0.0);
    sc.cfl_explicit = cfg.get_double("sim", "cfl", 0.4);
    sc.dt_fraction = cfg.get_double("sim", "dt_fraction", 0.6);
    sc.level = cfg.get_double("sim", "level", 0.5);
    sc.t_relax_min = cfg.get_double("sim", "t_relax_min", 20.0);
    sc.t_max = cfg.get_double("sim", "t_max", 400.0);
    sc.chunk = cfg.get_double("sim", "chunk", 6.0);
    sc.freeze_drift_tol = cfg.get_double("sim", "freeze_drift_tol", 2e-5);
    sc.speed_drift_tol = cfg.get_double("sim", "speed_drift_tol", 1e-4);
    sc.cols = cfg.get_int("sim", "columns", 0);
    sc.reps = cfg.get_int("sim", "reps", 8);
    sc.s_back = cfg.get_double("sim", "s_back", 0.0);
    sc.s_ahead = cfg.get_double("sim", "s_ahead", 0.0);
    sc.defect_tol = cfg.get_double("sim", "defect_tol", 1e-4);
    sc.store_interval = cfg.get_double("sim", "store_interval", 0.0);
    cfg.set("sim", "h", format_double(sc.h));
    cfg.set("sim", "window", format_double(sc.window));
    cfg.set("sim", "scheme", to_string(sc.scheme));
    cfg.set("sim", "dt", format_double(sc.dt));
    cfg.set("sim", "cfl", format_double(sc.cfl_explicit));
    cfg.set("sim", "dt_fraction", format_double(sc.dt_fraction));
    cfg.set("sim", "level", format_double(sc.level));
    cfg.set("sim", "t_relax_min", format_double(sc.t_relax_min));
    cfg.set("sim", "t_max", format_double(sc.t_max));
    cfg.set("sim", "chunk", format_double(sc.chunk));
    cfg.set("sim", "freeze_drift_tol", format_double(sc.freeze_drift_tol));
    cfg.set("sim", "speed_drift_tol", format_double(sc.speed_drift_tol));
    cfg.set("sim", "columns", std::to_string(sc.cols));
    cfg.set("sim", "reps", std::to_string(sc.reps));
    cfg.set("sim", "s_back", format_double(sc.s_back));
    cfg.set("sim", "s_ahead", format_double(sc.s_ahead));
    cfg.set("sim", "defect_tol", format_double(sc.defect_tol));
    cfg.set("sim", "store_interval", format_double(sc.store_interval));
    return sc;
}

inline InitialDatum datum_from_config(Config& cfg) {
    InitialDatum d;
    const std::string kind = cfg.get_string("sim", "datum", "step");
    if (kind == "step") d.kind = InitialDatum::Kind::step;
    else if (kind == "exp") d.kind = InitialDatum::Kind::exp_tail;
    else throw ConfigError("datum must be 'step' or 'exp'");
    d.x0 = cfg.get_double("sim", "datum_x0", 0.0);
    d.rate = cfg.get_double("sim", "datum_rate", 1.0);
    d.ramp_width = cfg.get_double("sim", "datum_ramp", 0.0);
    cfg.set("sim", "datum", kind);
    cfg.set("sim", "datum_x0", format_double(d.x0));
    cfg.set("sim", "datum_rate", format_double(d.rate));
    cfg.set("sim", "datum_ramp", format_double(d.ramp_width));
    return d;
}

/// FNV-1a over the resolved config text; stable across platforms.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace pulsefront
