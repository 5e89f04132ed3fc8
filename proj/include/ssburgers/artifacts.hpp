#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ssburgers/config.hpp"

namespace ssb {

inline constexpr const char* kVersion = "0.1.0";

/// 17 significant digits: doubles survive a round trip through the text.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(std::string_view s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

inline std::string config_hash(const RunConfig& cfg) { return hash_hex(cfg.to_json().dump()); }

/// Write-to-temp then rename; no artifact is ever half-written.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Wide time-series table: one row per recorded checkpoint.
inline std::string trajectory_csv(const Trajectory& traj, int n_modes, const std::string& cfg_hash) {
    std::string s = "# config_hash " + cfg_hash + "\n";
    s += "tau";
    for (int k = 0; k < n_modes; ++k) s += ",u_" + std::to_string(k);
    s += ",mass,sup_norm,l2k,h1k,tail_energy,guard_tripped\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        s += format_g17(traj.times[i]);
        for (int k = 0; k < n_modes; ++k)
            s += "," + format_g17(traj.states[i].coeffs[static_cast<std::size_t>(k)]);
        s += "," + format_g17(traj.mass_series[i]);
        s += "," + format_g17(traj.sup_series[i]);
        s += "," + format_g17(traj.l2k_series[i]);
        s += "," + format_g17(traj.h1k_series[i]);
        s += "," + format_g17(traj.tail_series[i]);
        s += traj.guard_flags[i] ? ",1\n" : ",0\n";
    }
    return s;
}

inline std::string limit_rows_csv(const std::vector<LimitRow>& rows, const std::string& cfg_hash) {
    std::string s = "# config_hash " + cfg_hash + "\n";
    s += "epsilon,functional,tau,ks,w1,n_a,n_b\n";
    for (const auto& r : rows) {
        s += format_g17(r.epsilon) + "," + std::to_string(r.functional) + "," + format_g17(r.time) +
             "," + format_g17(r.ks) + "," + format_g17(r.w1) + "," + std::to_string(r.n_a) + "," +
             std::to_string(r.n_b) + "\n";
    }
    return s;
}

inline nlohmann::json report_json(const Report& rep) {
    nlohmann::json j;
    j["suite"] = rep.suite;
    j["pass"] = rep.passed();
    j["n_paths"] = rep.n_paths;
    j["n_used"] = rep.n_used;
    j["n_tripped"] = rep.n_tripped;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : rep.checks) {
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"statistic", c.statistic},
                               {"threshold", c.threshold},
                               {"n_samples", c.n_samples},
                               {"mandatory", c.mandatory},
                               {"note", c.note}});
    }
    return j;
}

inline std::string report_text(const Report& rep) {
    std::string s = "suite " + rep.suite + ": " + (rep.passed() ? "PASS" : "FAIL") + "\n";
    s += "  paths used " + std::to_string(rep.n_used) + " / " + std::to_string(rep.n_paths) +
         " (tripped " + std::to_string(rep.n_tripped) + ")\n";
    for (const auto& c : rep.checks) {
        s += std::string("  [") + (c.pass ? "PASS" : (c.mandatory ? "FAIL" : "warn")) + "] " + c.name +
             ": statistic " + format_g17(c.statistic) + " vs threshold " + format_g17(c.threshold) +
             " (n=" + std::to_string(c.n_samples) + ")";
        if (!c.note.empty()) s += "  " + c.note;
        s += "\n";
    }
    return s;
}

inline nlohmann::json manifest_json(const RunConfig& cfg, const std::string& command,
                                    double wall_seconds, const nlohmann::json& summary,
                                    const std::vector<std::string>& artifacts,
                                    const std::string& status = "ok") {
    nlohmann::json j;
    j["tool"] = "ssburgers";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = cfg.to_json();
    j["config_hash"] = config_hash(cfg);
    j["root_seed"] = cfg.root_seed;
    j["wall_seconds"] = wall_seconds;
    j["summary"] = summary;
    j["artifacts"] = artifacts;
    j["status"] = status;
    return j;
}

}  // namespace ssb
