#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dipnut/config.hpp"
#include "dipnut/dynamics.hpp"
#include "dipnut/lattice.hpp"
#include "dipnut/linewidth.hpp"
#include "dipnut/oracle.hpp"
#include "dipnut/version.hpp"

namespace dipnut {

struct RunContext {
    int threads = 1;
};

namespace runner_detail {

inline std::string fmt(double x) {
    if (x == 0.0) x = 0.0;  // drop the sign of negative zero
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string hex64(std::uint64_t x) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// `#`-prefixed metadata block: tool version, command, config hash, constants,
/// and the full effective config (reparseable after stripping "# cfg ").
inline void write_header(std::ostringstream& os, const std::string& command,
                         const ExperimentConfig& cfg) {
    os << "# dipnut " << kVersion << '\n';
    os << "# command: " << command << '\n';
    os << "# config_hash: " << hex64(config_hash(cfg)) << '\n';
    os << "# constants: mu0_over_4pi=" << fmt(constants.mu0_over_4pi) << " mu_B=" << fmt(constants.mu_B)
       << " mu_N=" << fmt(constants.mu_N) << " hbar=" << fmt(constants.hbar)
       << " k_B=" << fmt(constants.k_B) << '\n';
    std::istringstream cfg_lines(serialize_config(cfg));
    std::string line;
    while (std::getline(cfg_lines, line)) os << "# cfg " << line << '\n';
}

inline LineRegime effective_regime(const ExperimentConfig& cfg, double m2, double m4) {
    if (cfg.linewidth_branch == "gaussian") return LineRegime::Gaussian;
    if (cfg.linewidth_branch == "lorentzian") return LineRegime::CutoffLorentzian;
    return ratio_and_regime(m2, m4, cfg.system.f).regime;
}

/// Half-width used wherever a detuning is expressed in units of delta_hw.
inline double resolve_half_width(const ExperimentConfig& cfg, const LatticeSums& sums) {
    const double m2 = second_moment(sums, cfg.system);
    const double m4 = fourth_moment(sums, cfg.system);
    return half_width(m2, m4, effective_regime(cfg, m2, m4), cfg.system.f).delta;
}

inline DriveParams resolve_drive(const ExperimentConfig& cfg, const LatticeSums& sums) {
    DriveParams d;
    d.B0 = cfg.B0;
    d.B1 = cfg.B1;
    d.delta = cfg.delta_over_delta_hw ? *cfg.delta_over_delta_hw * resolve_half_width(cfg, sums)
                                      : cfg.delta;
    return d;
}

inline LatticeSums sums_of(const LatticeCluster& c) { return LatticeSums{c.s2, c.s4, c.s_cross}; }

}  // namespace runner_detail

/// columns: cm, n_sites, s2, s4, s_cross (one row per cutoff up to lattice.cm)
inline std::string run_sums(const ExperimentConfig& cfg) {
    using runner_detail::fmt;
    std::ostringstream os;
    runner_detail::write_header(os, "sums", cfg);
    os << "cm,n_sites,s2,s4,s_cross\n";
    for (int cm = 1; cm <= cfg.cm; ++cm) {
        const LatticeCluster c = generate_cluster(cm);
        os << cm << ',' << c.size() << ',' << fmt(c.s2) << ',' << fmt(c.s4) << ',' << fmt(c.s_cross)
           << '\n';
    }
    return os.str();
}

/// columns: tau_eff_over_pi, pi[, mc_mean, mc_stderr]. pi is the mean-field
/// product at the configured filling; the optional Monte Carlo columns give
/// the exact disorder average over run.mc_realizations occupations.
inline std::string run_pi(const ExperimentConfig& cfg, const RunContext& ctx = {}) {
    using runner_detail::fmt;
    const LatticeCluster c = generate_cluster(cfg.cm);
    std::ostringstream os;
    runner_detail::write_header(os, "pi", cfg);
    const bool mc = cfg.mc_realizations > 0;
    os << (mc ? "tau_eff_over_pi,pi,mc_mean,mc_stderr\n" : "tau_eff_over_pi,pi\n");
    for (int i = 0; i < cfg.n_points; ++i) {
        const double x = cfg.tau_eff_max_over_pi * static_cast<double>(i) / (cfg.n_points - 1);
        const double tau_eff = M_PI * x;
        os << fmt(x) << ',' << fmt(pi_factor(c.k_values, tau_eff, cfg.system.f));
        if (mc) {
            const MonteCarloEstimate est =
                pi_factor_mc(c, cfg.system.f, tau_eff, cfg.mc_realizations, cfg.seed, ctx.threads);
            os << ',' << fmt(est.mean) << ',' << fmt(est.std_error);
        }
        os << '\n';
    }
    return os.str();
}

/// columns: t_seconds, tau_eff, pi, sx_over_sx0, sy, sz. The header records
/// the dimensionless Rabi rate omega_r_eff = hbar Omega_R/(cos^2 theta K_0en).
inline std::string run_signals(const ExperimentConfig& cfg) {
    using runner_detail::fmt;
    const LatticeCluster c = generate_cluster(cfg.cm);
    const DriveParams drive = runner_detail::resolve_drive(cfg, runner_detail::sums_of(c));
    const EffectiveField ef = effective_field(cfg.system, drive);
    const std::vector<double> grid = make_time_grid(cfg.system, drive, cfg.periods, cfg.samples_per_period);
    const NutationSignal sig = signals(cfg.state, cfg.system, drive, c.k_values, grid);

    const double c2 = ef.cos_theta * ef.cos_theta;
    const double omega_r_eff = constants.hbar * ef.omega_R / (c2 * k0en(cfg.system));

    std::ostringstream os;
    runner_detail::write_header(os, "signals", cfg);
    os << "# resolved: delta_rad_per_s = " << fmt(drive.delta) << '\n';
    os << "# omega_r_eff: " << fmt(omega_r_eff) << '\n';
    if (sig.flags.hta_warning)
        os << "# warning: high-temperature approximation strained (hbar*omega0/kT > 0.2)\n";
    if (sig.flags.redfield_warning)
        os << "# warning: weak dipolar coupling condition strained (K_0en/(hbar*omega1) > 0.1)\n";
    os << "t_seconds,tau_eff,pi,sx_over_sx0,sy,sz\n";
    for (std::size_t i = 0; i < sig.t.size(); ++i) {
        const double ratio = sig.pi[i] * std::cos(ef.omega_R * sig.t[i]);
        os << fmt(sig.t[i]) << ',' << fmt(sig.tau_eff[i]) << ',' << fmt(sig.pi[i]) << ','
           << fmt(ratio) << ',' << fmt(sig.sy[i]) << ',' << fmt(sig.sz[i]) << '\n';
    }
    return os.str();
}

/// one row: k0en_J, m2, m4, ratio, regime, delta_rad_per_s, delta_b_tesla,
/// tdc_at_delta_s. linewidth.branch = gaussian|lorentzian forces the width
/// formula; the Lorentzian branch at f = 1 is rejected.
inline std::string run_moments(const ExperimentConfig& cfg) {
    using runner_detail::fmt;
    const LatticeCluster c = generate_cluster(cfg.cm);
    const SpinSystem& sys = cfg.system;
    const double m2 = second_moment(c, sys);
    const double m4 = fourth_moment(c, sys);
    const double ratio = m4 / (m2 * m2);
    const LineRegime regime = runner_detail::effective_regime(cfg, m2, m4);
    const HalfWidth hw = half_width(m2, m4, regime, sys.f);
    const double gamma_e = sys.g_e * constants.mu_B / constants.hbar;
    const double delta_b = hw.delta / gamma_e;

    DriveParams at_delta;
    at_delta.B0 = cfg.B0;
    at_delta.B1 = cfg.B1;
    at_delta.delta = hw.delta;
    const CoherenceTime ct = coherence_time(sys, at_delta);
    const double tdc = (regime == LineRegime::Gaussian && sys.f == 1.0)
                           ? 3.39 * cfg.B1 * cfg.B1 / (gamma_e * delta_b * delta_b * delta_b)
                           : ct.t_dc;

    std::ostringstream os;
    runner_detail::write_header(os, "moments", cfg);
    if (hw.outside_validity)
        os << "# warning: cut-off Lorentzian width evaluated outside its dilute domain (f > 0.05)\n";
    if (cfg.linewidth_branch == "auto" && regime == LineRegime::Intermediate) {
        const HalfWidth lor = half_width(m2, m4, LineRegime::CutoffLorentzian, sys.f);
        os << "# warning: intermediate regime; quoting the Gaussian width, Lorentzian would be "
           << fmt(lor.delta) << " rad/s\n";
    }
    os << "k0en_J,m2_rad2_per_s2,m4_rad4_per_s4,ratio,regime,delta_rad_per_s,delta_b_tesla,tdc_at_delta_s\n";
    os << fmt(k0en(sys)) << ',' << fmt(m2) << ',' << fmt(m4) << ',' << fmt(ratio) << ','
       << to_string(regime) << ',' << fmt(hw.delta) << ',' << fmt(delta_b) << ',' << fmt(tdc) << '\n';
    return os.str();
}

/// columns: delta_rad_per_s, t_dc_s, t_dc_small_delta_s, small_delta_valid.
/// Symmetric grid about delta = 0 (where t_DC is infinite).
inline std::string run_tdc(const ExperimentConfig& cfg) {
    using runner_detail::fmt;
    const LatticeCluster c = generate_cluster(cfg.cm);
    const double delta_max = cfg.tdc_delta_max_rad_per_s
                                 ? *cfg.tdc_delta_max_rad_per_s
                                 : cfg.tdc_delta_max_over_delta_hw *
                                       runner_detail::resolve_half_width(cfg, runner_detail::sums_of(c));
    if (!(delta_max > 0.0)) throw ConfigError("tdc: the detuning range must be positive");
    const int n = cfg.n_points | 1;  // odd, so delta = 0 is on the grid

    std::ostringstream os;
    runner_detail::write_header(os, "tdc", cfg);
    os << "# resolved: delta_max_rad_per_s = " << fmt(delta_max) << '\n';
    os << "delta_rad_per_s,t_dc_s,t_dc_small_delta_s,small_delta_valid\n";
    for (int i = 0; i < n; ++i) {
        DriveParams d;
        d.B0 = cfg.B0;
        d.B1 = cfg.B1;
        d.delta = delta_max * (2.0 * i / (n - 1) - 1.0);
        if (std::abs(d.delta) < 1e-300) d.delta = 0.0;
        const CoherenceTime ct = coherence_time(cfg.system, d);
        os << fmt(d.delta) << ',' << fmt(ct.t_dc) << ',' << fmt(ct.t_dc_small_delta) << ','
           << (ct.small_delta_valid ? 1 : 0) << '\n';
    }
    return os.str();
}

/// one row: the maximum deviation between the closed-form transients and the
/// exact evolution on the oracle.n_nuclei strongest-coupled sites.
inline std::string run_oracle(const ExperimentConfig& cfg) {
    using runner_detail::fmt;
    if (cfg.system.f != 1.0)
        throw ConfigError("oracle: exact evolution uses fully occupied subsets; set system.f = 1");
    const LatticeCluster c = generate_cluster(cfg.cm);
    if (static_cast<std::size_t>(cfg.oracle_n_nuclei) > c.size())
        throw ConfigError("oracle: oracle.n_nuclei exceeds the cluster size");
    const std::vector<double> subset = strongest_k_values(c, cfg.oracle_n_nuclei);
    const DriveParams drive = runner_detail::resolve_drive(cfg, runner_detail::sums_of(c));
    const std::vector<double> grid = make_time_grid(cfg.system, drive, cfg.periods, cfg.samples_per_period);

    const ClusterOperatorSet ops = build_operators(subset, cfg.system, drive);
    const Eigen::VectorXd rho0 = initial_density_diag(ops, cfg.state, cfg.oracle_exact_boltzmann);
    const OracleSignal exact = evolve_and_reduce(ops, rho0, cfg.oracle_hamiltonian, grid);
    const NutationSignal closed = signals(cfg.state, cfg.system, drive, subset, grid);

    double dev[3] = {0.0, 0.0, 0.0}, scale = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dev[0] = std::max(dev[0], std::abs(exact.sx[i] - closed.sx[i]));
        dev[1] = std::max(dev[1], std::abs(exact.sy[i] - closed.sy[i]));
        dev[2] = std::max(dev[2], std::abs(exact.sz[i] - closed.sz[i]));
        scale = std::max({scale, std::abs(closed.sx[i]), std::abs(closed.sy[i]), std::abs(closed.sz[i])});
    }
    const double max_abs = std::max({dev[0], dev[1], dev[2]});

    std::ostringstream os;
    runner_detail::write_header(os, "oracle", cfg);
    os << "# resolved: delta_rad_per_s = " << fmt(drive.delta) << '\n';
    os << "n_nuclei,hamiltonian,variant,exact_boltzmann,n_times,max_abs_dev_sx,max_abs_dev_sy,"
          "max_abs_dev_sz,scale,max_rel_dev\n";
    os << cfg.oracle_n_nuclei << ','
       << (cfg.oracle_hamiltonian == HamiltonianChoice::H_P_prime ? "h_p_prime" : "h_1_prime") << ','
       << (cfg.state.variant == StateVariant::ThermalBoth ? "thermal_both" : "electron_down") << ','
       << (cfg.oracle_exact_boltzmann ? "true" : "false") << ',' << grid.size() << ',' << fmt(dev[0])
       << ',' << fmt(dev[1]) << ',' << fmt(dev[2]) << ',' << fmt(scale) << ','
       << fmt(max_abs / scale) << '\n';
    return os.str();
}

/// one declared axis (f | B1 | delta | cm) varies, all else fixed; each row
/// reports the standard derived quantities at that point.
inline std::string run_sweep(const ExperimentConfig& cfg) {
    using runner_detail::fmt;
    if (cfg.sweep_axis.empty()) throw ConfigError("sweep: sweep.axis is required");
    if (cfg.sweep_axis == "delta" && cfg.delta_over_delta_hw)
        throw ConfigError("sweep: cannot sweep delta while drive.delta_over_delta_hw is set");
    if (!(cfg.sweep_max > cfg.sweep_min)) throw ConfigError("sweep: need sweep.max > sweep.min");
    if (cfg.sweep_scale == "log" && !(cfg.sweep_min > 0.0))
        throw ConfigError("sweep: log scale needs sweep.min > 0");

    std::vector<double> values(static_cast<std::size_t>(cfg.sweep_n));
    for (int i = 0; i < cfg.sweep_n; ++i) {
        const double u = static_cast<double>(i) / (cfg.sweep_n - 1);
        values[static_cast<std::size_t>(i)] =
            cfg.sweep_scale == "log"
                ? cfg.sweep_min * std::pow(cfg.sweep_max / cfg.sweep_min, u)
                : cfg.sweep_min + (cfg.sweep_max - cfg.sweep_min) * u;
    }
    if (cfg.sweep_axis == "cm") {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::round(values[i]);
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] <= values[i - 1])
                throw ConfigError("sweep: cm grid is not strictly increasing; lower sweep.n");
        if (values.front() < 1.0) throw ConfigError("sweep: cm must be >= 1");
    }

    std::ostringstream os;
    runner_detail::write_header(os, "sweep", cfg);
    os << "axis,value,n_sites,k0en_J,s2,s4,s_cross,m2_rad2_per_s2,m4_rad4_per_s4,ratio,regime,"
          "delta_hw_rad_per_s,delta_b_tesla,t_dc_s,t_dc_small_delta_s\n";

    LatticeCluster cluster = generate_cluster(cfg.cm);
    for (double v : values) {
        ExperimentConfig row = cfg;
        if (cfg.sweep_axis == "f") {
            if (!(v > 0.0) || v > 1.0) throw ConfigError("sweep: f values must be in (0, 1]");
            row.system.f = v;
        } else if (cfg.sweep_axis == "B1") {
            if (!(v > 0.0)) throw ConfigError("sweep: B1 values must be positive");
            row.B1 = v;
        } else if (cfg.sweep_axis == "delta") {
            row.delta = v;
            row.delta_over_delta_hw.reset();
        } else {
            row.cm = static_cast<int>(v);
            cluster = generate_cluster(row.cm);
        }
        const LatticeSums sums = runner_detail::sums_of(cluster);
        const double m2 = second_moment(sums, row.system);
        const double m4 = fourth_moment(sums, row.system);
        const LineRegime regime = runner_detail::effective_regime(row, m2, m4);
        const HalfWidth hw = half_width(m2, m4, regime, row.system.f);
        const double gamma_e = row.system.g_e * constants.mu_B / constants.hbar;
        const DriveParams drive = runner_detail::resolve_drive(row, sums);
        const CoherenceTime ct = coherence_time(row.system, drive);
        os << cfg.sweep_axis << ',' << fmt(v) << ',' << cluster.size() << ',' << fmt(k0en(row.system))
           << ',' << fmt(sums.s2) << ',' << fmt(sums.s4) << ',' << fmt(sums.s_cross) << ',' << fmt(m2)
           << ',' << fmt(m4) << ',' << fmt(m4 / (m2 * m2)) << ',' << to_string(regime) << ','
           << fmt(hw.delta) << ',' << fmt(hw.delta / gamma_e) << ',' << fmt(ct.t_dc) << ','
           << fmt(ct.t_dc_small_delta) << '\n';
    }
    return os.str();
}

inline std::string run_command(const std::string& command, const ExperimentConfig& cfg,
                               const RunContext& ctx = {}) {
    if (command == "sums") return run_sums(cfg);
    if (command == "pi") return run_pi(cfg, ctx);
    if (command == "signals") return run_signals(cfg);
    if (command == "moments") return run_moments(cfg);
    if (command == "tdc") return run_tdc(cfg);
    if (command == "oracle") return run_oracle(cfg);
    if (command == "sweep") return run_sweep(cfg);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace dipnut
