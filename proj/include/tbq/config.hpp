// Declarative scenario configuration: an INI-style nested key=value text
// file, schema-validated with unknown keys rejected. The canonical sorted
// rendering of all entries is hashed (FNV-1a) into every output file.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tbq/analysis.hpp"
#include "tbq/chain.hpp"
#include "tbq/montecarlo.hpp"

namespace tbq {

inline constexpr const char* kSchemaVersion = "1";

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size())
            throw Error(ErrorCode::config_error, "");
        return x;
    } catch (...) {
        throw Error(ErrorCode::config_error,
                    "value of '" + key + "' is not a number: '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw Error(ErrorCode::config_error, "");
        return static_cast<std::uint64_t>(x);
    } catch (...) {
        throw Error(ErrorCode::config_error,
                    "value of '" + key + "' is not a non-negative integer: '" +
                        v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::config_error,
                "value of '" + key + "' is not a boolean: '" + v + "'");
}

inline std::vector<double> parse_double_list(const std::string& key,
                                             const std::string& v) {
    std::vector<double> out;
    for (const auto& piece : split(v, ','))
        if (!piece.empty()) out.push_back(parse_double(key, piece));
    if (out.empty())
        throw Error(ErrorCode::config_error, "empty list for '" + key + "'");
    return out;
}

inline std::int64_t ns_to_ps(const std::string& key, double ns) {
    double ps = ns * 1000.0;
    auto rounded = static_cast<std::int64_t>(ps >= 0 ? ps + 0.5 : ps - 0.5);
    if (std::abs(ps - static_cast<double>(rounded)) > 1e-6)
        throw Error(ErrorCode::config_error,
                    "'" + key + "' must resolve to whole picoseconds");
    return rounded;
}

}  // namespace detail

// Flat section.key -> value view of a config file.
using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(ErrorCode::config_error,
                            "malformed section header at line " +
                                std::to_string(lineno));
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::config_error,
                        "expected key = value at line " + std::to_string(lineno));
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw Error(ErrorCode::config_error,
                        "empty key at line " + std::to_string(lineno));
        std::string full = section.empty() ? key : section + "." + key;
        if (!map.emplace(full, value).second)
            throw Error(ErrorCode::config_error, "duplicate key '" + full + "'");
    }
    return map;
}

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys{
        "schema_version",
        "grid.dimension",
        "grid.fine_pitch_ps",
        "grid.coarse_delays_ns",
        "hardware.theta_rad",
        "hardware.delta_phi_rad",
        "hardware.extra_phase_rad",
        "hardware.couplings",
        "hardware.delayed_pol",
        "hardware.prep_compensation",
        "noise.mean_photon_number",
        "noise.jitter_sigma_ps",
        "noise.dark_count_rate_hz",
        "noise.detector_efficiency",
        "noise.rep_rate_hz",
        "run.shots",
        "run.seed",
        "run.shards",
        "run.bases",
        "output.dir",
        "output.format",
        "sweep.parameter",
        "sweep.from",
        "sweep.to",
        "sweep.steps",
    };
    return keys;
}

inline std::string canonical_config_text(const ConfigMap& map) {
    std::string out;
    for (const auto& [k, v] : map) out += k + "=" + v + "\n";
    return out;
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct SweepPlan {
    std::string parameter;
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
};

struct Scenario {
    TimeGrid grid;
    HardwareParams hw;
    NoiseModel noise;
    ExperimentPlan plan;
    std::string output_dir = "out";
    std::string output_format = "csv";
    SweepPlan sweep;
    bool has_sweep = false;
    ConfigMap raw;

    // Provenance hash over everything that affects results; output paths and
    // formats are excluded so relocated runs stay comparable.
    std::uint64_t config_hash() const {
        ConfigMap content;
        for (const auto& [k, v] : raw)
            if (k.rfind("output.", 0) != 0) content.emplace(k, v);
        return fnv1a64(canonical_config_text(content));
    }
};

// Default ladder of polarization time delays: the measured 2.6 ns and 5.6 ns,
// then doubling plus the same 0.4 ns guard so windows stay >= 2.6 ns apart.
inline std::vector<std::int64_t> default_coarse_delays_ps(int stages) {
    std::vector<std::int64_t> out;
    std::int64_t d = 2600;
    for (int k = 0; k < stages; ++k) {
        out.push_back(d);
        d = 2 * d + 400;
    }
    return out;
}

inline Scenario scenario_from_map(const ConfigMap& map) {
    for (const auto& [k, v] : map)
        if (known_config_keys().count(k) == 0)
            throw Error(ErrorCode::config_error, "unknown config key '" + k + "'");

    auto get = [&](const std::string& key,
                   const std::string& fallback) -> std::string {
        auto it = map.find(key);
        return it == map.end() ? fallback : it->second;
    };

    if (get("schema_version", kSchemaVersion) != kSchemaVersion)
        throw Error(ErrorCode::config_error,
                    "unsupported schema_version (expected " +
                        std::string(kSchemaVersion) + ")");

    Scenario s;
    s.raw = map;
    s.raw["schema_version"] = kSchemaVersion;

    int d = static_cast<int>(detail::parse_u64("grid.dimension",
                                               get("grid.dimension", "4")));
    int stages = stage_count_for_dimension(d);

    s.grid.dimension = d;
    s.grid.fine_pitch_ps =
        detail::parse_double("grid.fine_pitch_ps", get("grid.fine_pitch_ps", "2.25"));
    if (map.count("grid.coarse_delays_ns")) {
        for (double ns : detail::parse_double_list(
                 "grid.coarse_delays_ns", map.at("grid.coarse_delays_ns")))
            s.grid.coarse_delays_ps.push_back(
                detail::ns_to_ps("grid.coarse_delays_ns", ns));
    } else {
        s.grid.coarse_delays_ps = default_coarse_delays_ps(stages);
    }
    if (static_cast<int>(s.grid.coarse_delays_ps.size()) < stages)
        throw Error(ErrorCode::config_error,
                    "need " + std::to_string(stages) + " coarse delays for d = " +
                        std::to_string(d));
    s.grid.validate();

    auto stage_list = [&](const std::string& key, double fallback) {
        std::vector<double> v;
        if (map.count(key))
            v = detail::parse_double_list(key, map.at(key));
        else
            v.assign(static_cast<std::size_t>(stages), fallback);
        if (v.size() == 1) v.assign(static_cast<std::size_t>(stages), v.front());
        if (static_cast<int>(v.size()) != stages)
            throw Error(ErrorCode::config_error,
                        "'" + key + "' needs 1 or " + std::to_string(stages) +
                            " entries");
        return v;
    };
    s.hw.theta_rad = stage_list("hardware.theta_rad", std::numbers::pi / 4.0);
    s.hw.delta_phi_rad = stage_list("hardware.delta_phi_rad", std::numbers::pi);
    s.hw.extra_phase_rad = stage_list("hardware.extra_phase_rad", 0.0);
    s.hw.couplings = stage_list("hardware.couplings", 1.0);
    for (double t : s.hw.couplings)
        if (t < 0.0 || t > 1.0)
            throw Error(ErrorCode::config_error, "couplings must lie in [0, 1]");
    std::string pol = get("hardware.delayed_pol", "V");
    if (pol.size() != 1)
        throw Error(ErrorCode::config_error, "delayed_pol must be H or V");
    s.hw.delayed_pol = pol_from_char(pol[0]);
    s.hw.prep_compensation = detail::parse_bool(
        "hardware.prep_compensation", get("hardware.prep_compensation", "true"));

    s.noise.mean_photon_number = detail::parse_double(
        "noise.mean_photon_number", get("noise.mean_photon_number", "0.14"));
    s.noise.jitter_sigma_ps = detail::parse_double(
        "noise.jitter_sigma_ps", get("noise.jitter_sigma_ps", "350"));
    s.noise.dark_count_rate_hz = detail::parse_double(
        "noise.dark_count_rate_hz", get("noise.dark_count_rate_hz", "0"));
    s.noise.detector_efficiency = detail::parse_double(
        "noise.detector_efficiency", get("noise.detector_efficiency", "1.0"));
    s.noise.rep_rate_hz =
        detail::parse_double("noise.rep_rate_hz", get("noise.rep_rate_hz", "80e6"));
    s.noise.validate();

    s.plan.dimension = d;
    s.plan.shots = detail::parse_u64("run.shots", get("run.shots", "100000"));
    s.plan.seed = detail::parse_u64("run.seed", get("run.seed", "1"));
    s.plan.shards =
        static_cast<int>(detail::parse_u64("run.shards", get("run.shards", "1")));
    if (s.plan.shards < 1)
        throw Error(ErrorCode::config_error, "run.shards must be >= 1");

    std::string bases = get("run.bases", "all");
    s.plan.bases.clear();
    if (bases == "all") {
        s.plan.bases = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    } else if (bases == "matched") {
        s.plan.bases = {{0, 0}, {1, 1}};
    } else {
        for (const auto& pair : detail::split(bases, ',')) {
            if (pair.size() != 2 || (pair[0] != '0' && pair[0] != '1') ||
                (pair[1] != '0' && pair[1] != '1'))
                throw Error(ErrorCode::config_error,
                            "run.bases entries must look like 00, 01, 10, 11");
            s.plan.bases.push_back({pair[0] - '0', pair[1] - '0'});
        }
    }

    s.output_dir = get("output.dir", "out");
    s.output_format = get("output.format", "csv");
    if (s.output_format != "csv" && s.output_format != "json")
        throw Error(ErrorCode::config_error, "output.format must be csv or json");

    if (map.count("sweep.parameter")) {
        s.has_sweep = true;
        s.sweep.parameter = map.at("sweep.parameter");
        s.sweep.from = detail::parse_double("sweep.from", get("sweep.from", "0"));
        s.sweep.to = detail::parse_double("sweep.to", get("sweep.to", "0"));
        s.sweep.steps = static_cast<int>(
            detail::parse_u64("sweep.steps", get("sweep.steps", "0")));
        if (s.sweep.steps < 2)
            throw Error(ErrorCode::config_error, "sweep.steps must be >= 2");
        if (known_config_keys().count(s.sweep.parameter) == 0 ||
            s.sweep.parameter.rfind("sweep.", 0) == 0)
            throw Error(ErrorCode::config_error,
                        "sweep.parameter must name a numeric config key");
    }
    return s;
}

inline Scenario scenario_from_text(const std::string& text) {
    return scenario_from_map(parse_config_text(text));
}

// Flag-style overrides ("section.key=value") applied before validation.
inline Scenario scenario_with_overrides(
    const std::string& text, const std::vector<std::string>& overrides) {
    ConfigMap map = parse_config_text(text);
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::config_error,
                        "override must look like key=value: '" + o + "'");
        map[detail::trim(o.substr(0, eq))] = detail::trim(o.substr(eq + 1));
    }
    return scenario_from_map(map);
}

}  // namespace tbq
