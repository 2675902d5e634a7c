#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulsefront/config.hpp"
#include "pulsefront/errors.hpp"
#include "pulsefront/profile.hpp"

namespace pulsefront {

using json = nlohmann::json;

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

/// CSV with a fixed header; all doubles at full round-trip precision.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

constexpr const char* kToolVersion = "0.1.0";

/// profile.csv schema: s, x, phi, phi_s (row-major over the table). The grid
/// geometry and frame data travel in profile.json.
inline void write_profile(const std::filesystem::path& dir, const FrontProfile& p) {
    CsvWriter csv(dir / "profile.csv", {"s", "x", "phi", "phi_s"});
    for (int i = 0; i < p.ns; ++i)
        for (int m = 0; m < p.cols; ++m)
            csv.row({p.s_at(i), p.x_col(m), p.value(i, m), p.slope(i, m)});
    json meta;
    meta["s0"] = p.s0;
    meta["ds"] = p.ds;
    meta["ns"] = p.ns;
    meta["cols"] = p.cols;
    meta["L"] = p.L;
    meta["c"] = p.c;
    meta["t_ref"] = p.t_ref;
    meta["x_anchor"] = p.x_anchor;
    meta["periodicity_defect"] = p.periodicity_defect;
    meta["left_limit_defect"] = p.left_limit_defect;
    meta["right_limit_defect"] = p.right_limit_defect;
    meta["monotone"] = p.monotone();
    write_json(dir / "profile.json", meta);
}

inline FrontProfile read_profile(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "profile.json");
    if (!meta_in) throw ConfigError("missing profile.json in '" + dir.string() + "'");
    json meta = json::parse(meta_in);
    FrontProfile p;
    p.s0 = meta.at("s0");
    p.ds = meta.at("ds");
    p.ns = meta.at("ns");
    p.cols = meta.at("cols");
    p.L = meta.at("L");
    p.c = meta.at("c");
    p.t_ref = meta.at("t_ref");
    p.x_anchor = meta.at("x_anchor");
    p.periodicity_defect = meta.at("periodicity_defect");
    p.left_limit_defect = meta.at("left_limit_defect");
    p.right_limit_defect = meta.at("right_limit_defect");
    p.phi.assign(static_cast<std::size_t>(p.ns) * p.cols, 0.0);
    p.phi_s.assign(static_cast<std::size_t>(p.ns) * p.cols, 0.0);
    std::ifstream in(dir / "profile.csv");
    if (!in) throw ConfigError("missing profile.csv in '" + dir.string() + "'");
    std::string line;
    std::getline(in, line); // header
    for (int i = 0; i < p.ns; ++i)
        for (int m = 0; m < p.cols; ++m) {
            if (!std::getline(in, line))
                throw ConfigError("profile.csv truncated");
            double s, x, phi, phi_s;
            if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg", &s, &x, &phi, &phi_s) != 4)
                throw ConfigError("profile.csv: malformed row '" + line + "'");
            p.phi[p.idx(i, m)] = phi;
            p.phi_s[p.idx(i, m)] = phi_s;
        }
    return p;
}

/// Run manifest: config digest, tool version, file inventory. The timestamp
/// is the only field allowed to differ between identical runs.
inline json make_manifest(const std::string& subcommand, const Config& resolved,
                          const std::vector<std::string>& inputs,
                          const std::vector<std::string>& outputs) {
    json j;
    char hash[19];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a(resolved.serialize())));
    j["config_hash"] = hash;
    j["tool_version"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["timestamp"] = iso_timestamp();
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
}

} // namespace pulsefront
