#pragma once

#include <cmath>
#include <string>

#include "dipnut/constants.hpp"
#include "dipnut/errors.hpp"

namespace dipnut {

inline bool is_half_integer(double x) {
    return std::abs(2.0 * x - std::round(2.0 * x)) < 1e-9;
}

/// Physical parameters of a cluster: central electron spin at the origin of a
/// simple cubic lattice of nuclear neighbours, each site occupied with
/// probability f.
struct SpinSystem {
    double g_e = 2.0;
    double g_n = 5.586;      // proton by default
    double nuclear_I = 0.5;  // half-integer
    double a = 3e-10;        // lattice constant, m
    double f = 1.0;          // site occupation probability, (0, 1]

    void validate() const {
        if (!(g_e > 0.0)) throw ValidityError("SpinSystem: g_e must be positive");
        if (!(g_n > 0.0)) throw ValidityError("SpinSystem: g_n must be positive");
        if (!(a > 0.0)) throw ValidityError("SpinSystem: lattice constant must be positive");
        if (!(f > 0.0) || !(f <= 1.0)) throw ValidityError("SpinSystem: f must be in (0, 1]");
        if (!(nuclear_I >= 0.5) || !is_half_integer(nuclear_I))
            throw ValidityError("SpinSystem: nuclear_I must be a half-integer >= 1/2");
    }
};

/// K_0en = (mu0/4pi) g_e g_n mu_B mu_N / a^3: dipolar energy scale at one
/// lattice constant, in joules.
inline double k0en(const SpinSystem& s) {
    return constants.mu0_over_4pi * s.g_e * s.g_n * constants.mu_B * constants.mu_N / (s.a * s.a * s.a);
}

/// Static field B0 along z, rotating drive component of amplitude B1, and the
/// detuning delta = omega0 - omega of the drive from the electron resonance.
struct DriveParams {
    double B0 = 0.35;   // T
    double B1 = 1e-3;   // T
    double delta = 0.0; // rad/s

    void validate() const {
        if (!(B0 > 0.0)) throw ValidityError("DriveParams: B0 must be positive");
        if (!(B1 > 0.0)) throw ValidityError("DriveParams: B1 must be positive");
        if (!std::isfinite(delta)) throw ValidityError("DriveParams: delta must be finite");
    }
};

/// Geometry of the rotated picture: the effective field makes an angle theta
/// with the static-field axis, cos(theta) = delta/Omega_R, sin(theta) =
/// omega1/Omega_R. B1 > 0 keeps sin(theta) > 0 and theta in (0, pi); at exact
/// resonance theta = pi/2 and cos(theta) = 0 exactly.
struct EffectiveField {
    double omega0 = 0.0;    // electron Zeeman, rad/s
    double omega0n = 0.0;   // nuclear Zeeman, rad/s
    double omega1 = 0.0;    // drive coupling, rad/s
    double omega_R = 0.0;   // Rabi frequency sqrt(omega1^2 + delta^2)
    double theta = 0.0;
    double cos_theta = 0.0;
    double sin_theta = 0.0;
    double delta_n = 0.0;   // -omega0n - omega, rad/s (omega = omega0 - delta)
};

inline EffectiveField effective_field(const SpinSystem& sys, const DriveParams& d) {
    sys.validate();
    d.validate();
    EffectiveField ef;
    ef.omega0 = sys.g_e * constants.mu_B * d.B0 / constants.hbar;
    ef.omega0n = sys.g_n * constants.mu_N * d.B0 / constants.hbar;
    ef.omega1 = sys.g_e * constants.mu_B * d.B1 / constants.hbar;
    ef.omega_R = std::hypot(ef.omega1, d.delta);
    ef.theta = std::atan2(ef.omega1, d.delta);
    ef.cos_theta = d.delta / ef.omega_R;
    ef.sin_theta = ef.omega1 / ef.omega_R;
    ef.delta_n = -ef.omega0n - (ef.omega0 - d.delta);
    return ef;
}

enum class StateVariant { ThermalBoth, ElectronDownNuclearThermal };

struct InitialState {
    StateVariant variant = StateVariant::ThermalBoth;
    double temperature = 4.2;  // K

    void validate() const {
        if (!(temperature > 0.0)) throw ValidityError("InitialState: temperature must be positive");
    }
};

/// tau = t K_0en / hbar, tau_eff = tau cos^2(theta)
struct ReducedTime {
    double tau = 0.0;
    double tau_eff = 0.0;
};

inline ReducedTime reduced_time(double t_seconds, const SpinSystem& sys, const DriveParams& d) {
    const EffectiveField ef = effective_field(sys, d);
    ReducedTime rt;
    rt.tau = t_seconds * k0en(sys) / constants.hbar;
    rt.tau_eff = rt.tau * ef.cos_theta * ef.cos_theta;
    return rt;
}

inline double time_from_tau(double tau, const SpinSystem& sys) {
    return tau * constants.hbar / k0en(sys);
}

inline double time_from_tau_eff(double tau_eff, const SpinSystem& sys, const DriveParams& d) {
    const EffectiveField ef = effective_field(sys, d);
    const double c2 = ef.cos_theta * ef.cos_theta;
    return tau_eff * constants.hbar / (k0en(sys) * c2);
}

}  // namespace dipnut
