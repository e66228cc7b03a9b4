#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "dipnut/errors.hpp"
#include "dipnut/oracle.hpp"
#include "dipnut/system.hpp"

namespace dipnut {

/// Flat key = value run description. Grammar: one `key = value` pair per
/// line; `#` starts a comment (values therefore cannot contain `#`); blank
/// lines ignored; keys may appear at most once; unknown keys are rejected.
/// Every field has a documented default, so a config file only lists
/// overrides. See serialize_config() for the full key set.
struct ExperimentConfig {
    SpinSystem system;                       // system.g_e g_n nuclear_I a_meters f
    double B0 = 0.35;                        // drive.B0_tesla
    double B1 = 1e-3;                        // drive.B1_tesla
    double delta = 0.0;                      // drive.delta_rad_per_s
    std::optional<double> delta_over_delta_hw;  // drive.delta_over_delta_hw
    int cm = 1;                              // lattice.cm
    InitialState state;                      // state.variant state.temperature_kelvin
    int n_points = 1201;                     // run.n_points
    double tau_eff_max_over_pi = 3.0;        // run.tau_eff_max_over_pi
    int periods = 3;                         // run.periods
    int samples_per_period = 40;             // run.samples_per_period
    int mc_realizations = 0;                 // run.mc_realizations
    std::uint64_t seed = 1;                  // run.seed
    std::string out;                         // run.out ("" or "-" means stdout)
    int oracle_n_nuclei = 8;                 // oracle.n_nuclei
    HamiltonianChoice oracle_hamiltonian = HamiltonianChoice::H_P_prime;  // oracle.hamiltonian
    bool oracle_exact_boltzmann = false;     // oracle.exact_boltzmann
    std::string sweep_axis;                  // sweep.axis: f | B1 | delta | cm
    double sweep_min = 0.0;                  // sweep.min
    double sweep_max = 0.0;                  // sweep.max
    int sweep_n = 11;                        // sweep.n
    std::string sweep_scale = "linear";      // sweep.scale: linear | log
    std::optional<double> tdc_delta_max_rad_per_s;  // tdc.delta_max_rad_per_s
    double tdc_delta_max_over_delta_hw = 3.0;       // tdc.delta_max_over_delta_hw
    std::string linewidth_branch = "auto";   // linewidth.branch: auto | gaussian | lorentzian

    std::set<std::string> keys_set;  // keys given explicitly (file or CLI)

    bool was_set(const std::string& key) const { return keys_set.count(key) > 0; }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: " + key + ": not a number: '" + v + "'");
    return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: " + key + ": not an integer: '" + v + "'");
    return x;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    if (!v.empty() && v[0] == '-') throw ConfigError("config: " + key + ": must be non-negative");
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: " + key + ": not an integer: '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: " + key + ": expected true/false, got '" + v + "'");
}

inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace config_detail

/// Applies one key = value pair. Throws ConfigError for unknown keys or
/// malformed values. Used both by the file parser and by CLI overrides.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using namespace config_detail;
    if (!cfg.keys_set.insert(key).second)
        throw ConfigError("config: duplicate key '" + key + "'");

    if (key == "system.g_e") cfg.system.g_e = to_double(key, value);
    else if (key == "system.g_n") cfg.system.g_n = to_double(key, value);
    else if (key == "system.nuclear_I") cfg.system.nuclear_I = to_double(key, value);
    else if (key == "system.a_meters") cfg.system.a = to_double(key, value);
    else if (key == "system.f") cfg.system.f = to_double(key, value);
    else if (key == "drive.B0_tesla") cfg.B0 = to_double(key, value);
    else if (key == "drive.B1_tesla") cfg.B1 = to_double(key, value);
    else if (key == "drive.delta_rad_per_s") cfg.delta = to_double(key, value);
    else if (key == "drive.delta_over_delta_hw") cfg.delta_over_delta_hw = to_double(key, value);
    else if (key == "lattice.cm") cfg.cm = static_cast<int>(to_int(key, value));
    else if (key == "state.variant") {
        if (value == "thermal_both") cfg.state.variant = StateVariant::ThermalBoth;
        else if (value == "electron_down") cfg.state.variant = StateVariant::ElectronDownNuclearThermal;
        else throw ConfigError("config: state.variant must be thermal_both or electron_down");
    }
    else if (key == "state.temperature_kelvin") cfg.state.temperature = to_double(key, value);
    else if (key == "run.n_points") cfg.n_points = static_cast<int>(to_int(key, value));
    else if (key == "run.tau_eff_max_over_pi") cfg.tau_eff_max_over_pi = to_double(key, value);
    else if (key == "run.periods") cfg.periods = static_cast<int>(to_int(key, value));
    else if (key == "run.samples_per_period") cfg.samples_per_period = static_cast<int>(to_int(key, value));
    else if (key == "run.mc_realizations") cfg.mc_realizations = static_cast<int>(to_int(key, value));
    else if (key == "run.seed") cfg.seed = to_u64(key, value);
    else if (key == "run.out") cfg.out = value;
    else if (key == "oracle.n_nuclei") cfg.oracle_n_nuclei = static_cast<int>(to_int(key, value));
    else if (key == "oracle.hamiltonian") {
        if (value == "h_p_prime") cfg.oracle_hamiltonian = HamiltonianChoice::H_P_prime;
        else if (value == "h_1_prime") cfg.oracle_hamiltonian = HamiltonianChoice::H_1_prime;
        else throw ConfigError("config: oracle.hamiltonian must be h_p_prime or h_1_prime");
    }
    else if (key == "oracle.exact_boltzmann") cfg.oracle_exact_boltzmann = to_bool(key, value);
    else if (key == "sweep.axis") {
        if (value != "f" && value != "B1" && value != "delta" && value != "cm")
            throw ConfigError("config: sweep.axis must be one of f, B1, delta, cm");
        cfg.sweep_axis = value;
    }
    else if (key == "sweep.min") cfg.sweep_min = to_double(key, value);
    else if (key == "sweep.max") cfg.sweep_max = to_double(key, value);
    else if (key == "sweep.n") cfg.sweep_n = static_cast<int>(to_int(key, value));
    else if (key == "sweep.scale") {
        if (value != "linear" && value != "log")
            throw ConfigError("config: sweep.scale must be linear or log");
        cfg.sweep_scale = value;
    }
    else if (key == "tdc.delta_max_rad_per_s") cfg.tdc_delta_max_rad_per_s = to_double(key, value);
    else if (key == "tdc.delta_max_over_delta_hw") cfg.tdc_delta_max_over_delta_hw = to_double(key, value);
    else if (key == "linewidth.branch") {
        if (value != "auto" && value != "gaussian" && value != "lorentzian")
            throw ConfigError("config: linewidth.branch must be auto, gaussian, or lorentzian");
        cfg.linewidth_branch = value;
    }
    else throw ConfigError("config: unknown key '" + key + "'");
}

/// Range and consistency checks over the assembled config. Field-level
/// problems are config errors; physics-domain rejections surface later from
/// the modules themselves.
inline void validate_config(const ExperimentConfig& cfg) {
    try {
        cfg.system.validate();
        cfg.state.validate();
    } catch (const ValidityError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!(cfg.B0 > 0.0)) throw ConfigError("config: drive.B0_tesla must be positive");
    if (!(cfg.B1 > 0.0)) throw ConfigError("config: drive.B1_tesla must be positive");
    if (cfg.was_set("drive.delta_rad_per_s") && cfg.was_set("drive.delta_over_delta_hw"))
        throw ConfigError("config: give either drive.delta_rad_per_s or drive.delta_over_delta_hw, not both");
    if (cfg.cm < 1) throw ConfigError("config: lattice.cm must be >= 1");
    if (cfg.n_points < 2) throw ConfigError("config: run.n_points must be >= 2");
    if (!(cfg.tau_eff_max_over_pi > 0.0)) throw ConfigError("config: run.tau_eff_max_over_pi must be positive");
    if (cfg.periods < 1) throw ConfigError("config: run.periods must be >= 1");
    if (cfg.samples_per_period < 40) throw ConfigError("config: run.samples_per_period must be >= 40");
    if (cfg.mc_realizations < 0) throw ConfigError("config: run.mc_realizations must be >= 0");
    if (cfg.oracle_n_nuclei < 0) throw ConfigError("config: oracle.n_nuclei must be >= 0");
    if (cfg.sweep_n < 2) throw ConfigError("config: sweep.n must be >= 2");
    if (cfg.tdc_delta_max_rad_per_s && cfg.was_set("tdc.delta_max_over_delta_hw"))
        throw ConfigError("config: give either tdc.delta_max_rad_per_s or tdc.delta_max_over_delta_hw, not both");
}

inline ExperimentConfig parse_config_text(std::string_view text) {
    using namespace config_detail;
    ExperimentConfig cfg;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        const std::size_t hash = raw.find('#');
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config: line " + std::to_string(lineno) + ": empty key or value");
        apply_config_key(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Canonical serialization of the effective config: every key, fixed order,
/// numbers at 12 significant digits. Reparsing it reproduces the same
/// serialization (the echo in CSV headers round-trips through this).
/// run.out is deliberately absent: where a result is written must not change
/// its bytes or its hash.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    using config_detail::fmt_num;
    std::ostringstream s;
    s << "system.g_e = " << fmt_num(cfg.system.g_e) << '\n';
    s << "system.g_n = " << fmt_num(cfg.system.g_n) << '\n';
    s << "system.nuclear_I = " << fmt_num(cfg.system.nuclear_I) << '\n';
    s << "system.a_meters = " << fmt_num(cfg.system.a) << '\n';
    s << "system.f = " << fmt_num(cfg.system.f) << '\n';
    s << "drive.B0_tesla = " << fmt_num(cfg.B0) << '\n';
    s << "drive.B1_tesla = " << fmt_num(cfg.B1) << '\n';
    if (cfg.delta_over_delta_hw)
        s << "drive.delta_over_delta_hw = " << fmt_num(*cfg.delta_over_delta_hw) << '\n';
    else
        s << "drive.delta_rad_per_s = " << fmt_num(cfg.delta) << '\n';
    s << "lattice.cm = " << cfg.cm << '\n';
    s << "state.variant = "
      << (cfg.state.variant == StateVariant::ThermalBoth ? "thermal_both" : "electron_down") << '\n';
    s << "state.temperature_kelvin = " << fmt_num(cfg.state.temperature) << '\n';
    s << "run.n_points = " << cfg.n_points << '\n';
    s << "run.tau_eff_max_over_pi = " << fmt_num(cfg.tau_eff_max_over_pi) << '\n';
    s << "run.periods = " << cfg.periods << '\n';
    s << "run.samples_per_period = " << cfg.samples_per_period << '\n';
    s << "run.mc_realizations = " << cfg.mc_realizations << '\n';
    s << "run.seed = " << cfg.seed << '\n';
    s << "oracle.n_nuclei = " << cfg.oracle_n_nuclei << '\n';
    s << "oracle.hamiltonian = "
      << (cfg.oracle_hamiltonian == HamiltonianChoice::H_P_prime ? "h_p_prime" : "h_1_prime") << '\n';
    s << "oracle.exact_boltzmann = " << (cfg.oracle_exact_boltzmann ? "true" : "false") << '\n';
    if (!cfg.sweep_axis.empty()) {
        s << "sweep.axis = " << cfg.sweep_axis << '\n';
        s << "sweep.min = " << fmt_num(cfg.sweep_min) << '\n';
        s << "sweep.max = " << fmt_num(cfg.sweep_max) << '\n';
        s << "sweep.n = " << cfg.sweep_n << '\n';
        s << "sweep.scale = " << cfg.sweep_scale << '\n';
    }
    if (cfg.tdc_delta_max_rad_per_s)
        s << "tdc.delta_max_rad_per_s = " << fmt_num(*cfg.tdc_delta_max_rad_per_s) << '\n';
    else
        s << "tdc.delta_max_over_delta_hw = " << fmt_num(cfg.tdc_delta_max_over_delta_hw) << '\n';
    s << "linewidth.branch = " << cfg.linewidth_branch << '\n';
    return s.str();
}

/// FNV-1a 64 over the canonical serialization.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace dipnut
