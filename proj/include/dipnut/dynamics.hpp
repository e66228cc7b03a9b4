#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "dipnut/constants.hpp"
#include "dipnut/errors.hpp"
#include "dipnut/lattice.hpp"
#include "dipnut/system.hpp"

namespace dipnut {

/// Nutation decay factor: product over the supplied coefficients of
/// cos(f_scale * tau_eff * k_j / 2). f_scale < 1 is the mean-field treatment
/// of dilution (every site kept, coupling scaled by f). An empty coefficient
/// list gives 1: no dipolar coupling, no decay.
inline double pi_factor(std::span<const double> k_values, double tau_eff, double f_scale = 1.0) {
    if (!(tau_eff >= 0.0)) throw std::invalid_argument("pi_factor: tau_eff must be >= 0");
    if (!(f_scale > 0.0) || !(f_scale <= 1.0))
        throw std::invalid_argument("pi_factor: f_scale must be in (0, 1]");
    const double half = 0.5 * f_scale * tau_eff;
    double p = 1.0;
    for (double k : k_values) p *= std::cos(half * k);
    return p;
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

namespace detail {

// product over the sites kept by realization r of the (seed-derived) dilution
// mask; the mask bits are exactly those of sample_occupation with seed
// SplitMix64(seed).at(r)
inline double diluted_pi_one_realization(std::span<const double> k_values, double f,
                                         double tau_eff, SplitMix64 stream) {
    const double half = 0.5 * tau_eff;
    double p = 1.0;
    for (std::size_t i = 0; i < k_values.size(); ++i)
        if (stream.u01_at(i) < f) p *= std::cos(half * k_values[i]);
    return p;
}

}  // namespace detail

/// Disorder average of the exact diluted product over random site occupations.
/// Deterministic for fixed (seed, n_realizations) regardless of thread count:
/// realization r always uses the same counter-based substream, and the
/// reduction runs in realization order.
inline MonteCarloEstimate pi_factor_mc(std::span<const double> k_values, double f, double tau_eff,
                                       int n_realizations, std::uint64_t seed, int threads = 1) {
    if (!(f > 0.0) || !(f <= 1.0)) throw std::invalid_argument("pi_factor_mc: f must be in (0, 1]");
    if (n_realizations < 1) throw std::invalid_argument("pi_factor_mc: need at least one realization");
    if (!(tau_eff >= 0.0)) throw std::invalid_argument("pi_factor_mc: tau_eff must be >= 0");

    const SplitMix64 base(seed);
    std::vector<double> values(static_cast<std::size_t>(n_realizations));
    auto worker = [&](int lo, int hi) {
        for (int r = lo; r < hi; ++r)
            values[static_cast<std::size_t>(r)] =
                detail::diluted_pi_one_realization(k_values, f, tau_eff,
                                                   base.substream(static_cast<std::uint64_t>(r)));
    };
    if (threads <= 1 || n_realizations < 2 * threads) {
        worker(0, n_realizations);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_realizations + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * chunk;
            const int hi = std::min(n_realizations, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // shifted accumulation: exact when every realization is identical (f = 1),
    // better conditioned otherwise
    MonteCarloEstimate est;
    const double ref = values[0];
    double acc = 0.0;
    for (double v : values) acc += v - ref;
    est.mean = ref + acc / n_realizations;
    if (n_realizations > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - est.mean) * (v - est.mean);
        est.std_error = std::sqrt(ss / (static_cast<double>(n_realizations) * (n_realizations - 1)));
    }
    return est;
}

inline MonteCarloEstimate pi_factor_mc(const LatticeCluster& cluster, double f, double tau_eff,
                                       int n_realizations, std::uint64_t seed, int threads = 1) {
    return pi_factor_mc(std::span<const double>(cluster.k_values), f, tau_eff, n_realizations, seed,
                        threads);
}

struct SignalFlags {
    bool hta_warning = false;       // hbar*omega0/kT > 0.2
    bool redfield_warning = false;  // K_0en/(hbar*omega1) > 0.1
};

/// Transient nutation of the central spin over a time grid. sx and sy
/// oscillate at the Rabi frequency under the envelope A sin(theta) Pi; sz is
/// constant. amplitude_A is hbar*omega0/(4 k T) for the thermal start and 1
/// for the electron-|-> start (whose expectation values carry the extra 1/2
/// from the spin-1/2 trace normalization).
struct NutationSignal {
    std::vector<double> t;         // s
    std::vector<double> tau_eff;
    std::vector<double> pi;
    std::vector<double> sx, sy, sz;
    double amplitude_A = 1.0;
    SignalFlags flags;
};

inline SignalFlags validity_flags(const InitialState& state, const SpinSystem& sys,
                                  const DriveParams& drive) {
    const EffectiveField ef = effective_field(sys, drive);
    SignalFlags flags;
    flags.hta_warning = constants.hbar * ef.omega0 / (constants.k_B * state.temperature) > 0.2;
    flags.redfield_warning = k0en(sys) / (constants.hbar * ef.omega1) > 0.1;
    return flags;
}

inline NutationSignal signals(const InitialState& state, const SpinSystem& sys,
                              const DriveParams& drive, std::span<const double> k_values,
                              std::span<const double> time_grid) {
    sys.validate();
    drive.validate();
    state.validate();
    if (std::abs(sys.nuclear_I - 0.5) > 1e-12)
        throw ValidityError("signals: closed-form transients require nuclear spin I = 1/2");

    const EffectiveField ef = effective_field(sys, drive);
    const double K = k0en(sys);
    const double c2 = ef.cos_theta * ef.cos_theta;

    NutationSignal out;
    out.flags = validity_flags(state, sys, drive);

    double coef;  // multiplies Pi sin(theta) in <s_x>, and cos(theta) in -<s_z>
    if (state.variant == StateVariant::ThermalBoth) {
        out.amplitude_A = constants.hbar * ef.omega0 / (4.0 * constants.k_B * state.temperature);
        coef = out.amplitude_A;
    } else {
        out.amplitude_A = 1.0;
        coef = 0.5;
    }

    const std::size_t n = time_grid.size();
    out.t.assign(time_grid.begin(), time_grid.end());
    out.tau_eff.resize(n);
    out.pi.resize(n);
    out.sx.resize(n);
    out.sy.resize(n);
    out.sz.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = time_grid[i];
        const double te = t * K / constants.hbar * c2;
        const double p = pi_factor(k_values, te, sys.f);
        const double phase = ef.omega_R * t;
        out.tau_eff[i] = te;
        out.pi[i] = p;
        out.sx[i] = coef * p * ef.sin_theta * std::cos(phase);
        out.sy[i] = coef * p * ef.sin_theta * std::sin(phase);
        out.sz[i] = -coef * ef.cos_theta;
    }
    return out;
}

/// Uniform grid of periods*samples_per_period + 1 points covering `periods`
/// Rabi periods, at least 40 samples per period. Even samples_per_period puts
/// every oscillation extremum exactly on the grid.
inline std::vector<double> make_time_grid(const SpinSystem& sys, const DriveParams& drive,
                                          int periods, int samples_per_period = 40) {
    if (periods < 1) throw std::invalid_argument("make_time_grid: need at least one period");
    if (samples_per_period < 40)
        throw std::invalid_argument("make_time_grid: need >= 40 samples per period");
    const EffectiveField ef = effective_field(sys, drive);
    const double period = 2.0 * M_PI / ef.omega_R;
    const int n = periods * samples_per_period;
    std::vector<double> t(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        t[static_cast<std::size_t>(i)] = period * static_cast<double>(i) / samples_per_period;
    return t;
}

/// Dipolar coherence time (1/f) pi hbar / (2 K_0en cos^2 theta): the instant
/// of the first zero of the decay product. Infinite at exact resonance.
/// t_dc_small_delta is the |delta| << omega1 approximation
/// (1/f)(pi hbar/2K_0en)(omega1/delta)^2; the exact value equals it times
/// (1 + delta^2/omega1^2).
struct CoherenceTime {
    double t_dc = 0.0;
    double t_dc_small_delta = 0.0;
    bool small_delta_valid = true;  // |delta|/omega1 <= 0.1
};

inline CoherenceTime coherence_time(const SpinSystem& sys, const DriveParams& drive) {
    sys.validate();
    drive.validate();
    const EffectiveField ef = effective_field(sys, drive);
    const double K = k0en(sys);
    CoherenceTime ct;
    if (drive.delta == 0.0) {
        ct.t_dc = std::numeric_limits<double>::infinity();
        ct.t_dc_small_delta = std::numeric_limits<double>::infinity();
        ct.small_delta_valid = true;
        return ct;
    }
    const double base = M_PI * constants.hbar / (2.0 * K * sys.f);
    const double c2 = ef.cos_theta * ef.cos_theta;
    ct.t_dc = base / c2;
    const double ratio = ef.omega1 / drive.delta;
    ct.t_dc_small_delta = base * ratio * ratio;
    ct.small_delta_valid = std::abs(drive.delta) / ef.omega1 <= 0.1;
    return ct;
}

/// Coefficient of s_y in the reduced density operator coming from keeping the
/// secular dipolar term in the thermal initial state:
///   sum_m (K_0en k_m / 4kT) sin(theta) cos(theta) sin(tau_eff k_m/2)
///         prod_{j != m} cos(tau_eff k_j/2).
/// The expectation-value excess <s_y> is half of this. Bounds the error of
/// dropping that term from rho(0).
inline double initial_state_correction(const SpinSystem& sys, const DriveParams& drive,
                                       std::span<const double> k_values, double temperature,
                                       double tau_eff) {
    sys.validate();
    if (std::abs(sys.nuclear_I - 0.5) > 1e-12)
        throw ValidityError("initial_state_correction: requires nuclear spin I = 1/2");
    if (!(temperature > 0.0)) throw ValidityError("initial_state_correction: temperature must be positive");
    const EffectiveField ef = effective_field(sys, drive);
    const double K = k0en(sys);
    const double kt = constants.k_B * temperature;
    const std::size_t n = k_values.size();
    if (n == 0) return 0.0;

    // prefix/suffix cosine products avoid dividing by factors that may vanish
    std::vector<double> pre(n + 1, 1.0), suf(n + 1, 1.0);
    for (std::size_t m = 0; m < n; ++m) pre[m + 1] = pre[m] * std::cos(0.5 * tau_eff * k_values[m]);
    for (std::size_t m = n; m > 0; --m) suf[m - 1] = suf[m] * std::cos(0.5 * tau_eff * k_values[m - 1]);

    double sum = 0.0;
    for (std::size_t m = 0; m < n; ++m)
        sum += (K * k_values[m] / (4.0 * kt)) * std::sin(0.5 * tau_eff * k_values[m]) * pre[m] * suf[m + 1];
    return sum * ef.sin_theta * ef.cos_theta;
}

}  // namespace dipnut
