#pragma once

#include <cmath>
#include <string>

#include "dipnut/constants.hpp"
#include "dipnut/dynamics.hpp"
#include "dipnut/errors.hpp"
#include "dipnut/lattice.hpp"
#include "dipnut/system.hpp"

namespace dipnut {

/// Second moment of the unsaturated resonance line, (rad/s)^2:
///   hbar^2 M2' = (1/3) f K_0en^2 I(I+1) sum_j k_j^2
inline double second_moment(const LatticeSums& sums, const SpinSystem& sys) {
    sys.validate();
    const double K_over_hbar = k0en(sys) / constants.hbar;
    const double ii1 = sys.nuclear_I * (sys.nuclear_I + 1.0);
    return (1.0 / 3.0) * sys.f * ii1 * sums.s2 * K_over_hbar * K_over_hbar;
}

inline double second_moment(const LatticeCluster& c, const SpinSystem& sys) {
    return second_moment(LatticeSums{c.s2, c.s4, c.s_cross}, sys);
}

/// Fourth moment, (rad/s)^4, for general nuclear spin I:
///   hbar^4 M4' = (K_0en^4 I(I+1)/15) [ f (3I^2+3I-1) sum_j k_j^4
///                                     + 5 f^2 I(I+1) sum_{j,l!=j} k_j^2 k_l^2 ]
/// At I = 1/2 this reduces to (K_0en^4/16)(f s4 + 3 f^2 s_cross).
inline double fourth_moment(const LatticeSums& sums, const SpinSystem& sys) {
    sys.validate();
    const double K_over_hbar = k0en(sys) / constants.hbar;
    const double k4 = K_over_hbar * K_over_hbar * K_over_hbar * K_over_hbar;
    const double I = sys.nuclear_I;
    const double ii1 = I * (I + 1.0);
    const double fI = 3.0 * I * I + 3.0 * I - 1.0;
    return (ii1 / 15.0) * (sys.f * fI * sums.s4 + 5.0 * sys.f * sys.f * ii1 * sums.s_cross) * k4;
}

inline double fourth_moment(const LatticeCluster& c, const SpinSystem& sys) {
    return fourth_moment(LatticeSums{c.s2, c.s4, c.s_cross}, sys);
}

enum class LineRegime { Gaussian, CutoffLorentzian, Intermediate };

inline const char* to_string(LineRegime r) {
    switch (r) {
        case LineRegime::Gaussian: return "gaussian";
        case LineRegime::CutoffLorentzian: return "cutoff_lorentzian";
        default: return "intermediate";
    }
}

struct RatioRegime {
    double ratio = 0.0;  // M4'/M2'^2
    LineRegime regime = LineRegime::Gaussian;
};

/// M4'/M2'^2 and the line-shape classification. The shape is certified only
/// at the extremes: undiluted (f = 1, ratio near 3, Gaussian) and dilute
/// (f <= 0.05, ratio >= 6, cut-off Lorentzian). Anything between is reported
/// as Intermediate and callers should quote both half-widths.
inline RatioRegime ratio_and_regime(double m2, double m4, double f) {
    if (!(m2 > 0.0)) throw ValidityError("ratio_and_regime: M2' must be positive");
    RatioRegime rr;
    rr.ratio = m4 / (m2 * m2);
    if (f == 1.0)
        rr.regime = LineRegime::Gaussian;
    else if (f <= 0.05)
        rr.regime = LineRegime::CutoffLorentzian;
    else
        rr.regime = LineRegime::Intermediate;
    return rr;
}

struct HalfWidth {
    double delta = 0.0;             // rad/s
    bool outside_validity = false;  // Lorentzian branch evaluated at f > 0.05
};

/// Half-width at half maximum of the line, rad/s.
/// Gaussian branch: 1.18 sqrt(M2') (1.18 ~= sqrt(2 ln 2)).
/// Cut-off Lorentzian branch: (pi/(2 sqrt(3))) M2'^{3/2}/sqrt(M4'), derived
/// for f <~ 0.05; evaluating it at f = 1 is rejected, and f > 0.05 is flagged.
inline HalfWidth half_width(double m2, double m4, LineRegime regime, double f) {
    if (!(m2 > 0.0) || !(m4 > 0.0)) throw ValidityError("half_width: moments must be positive");
    HalfWidth hw;
    switch (regime) {
        case LineRegime::Gaussian:
        case LineRegime::Intermediate:
            hw.delta = 1.18 * std::sqrt(m2);
            break;
        case LineRegime::CutoffLorentzian:
            if (f == 1.0)
                throw ValidityError(
                    "half_width: the cut-off Lorentzian width is a dilute-limit result; "
                    "evaluating it at f = 1 is forbidden");
            hw.delta = (M_PI / (2.0 * std::sqrt(3.0))) * m2 * std::sqrt(m2) / std::sqrt(m4);
            hw.outside_validity = f > 0.05;
            break;
    }
    return hw;
}

/// Coherence time at detuning equal to the line half-width.
/// Undiluted (Gaussian): the closed form 3.39 B1^2 / (|gamma_e| delta_B^3).
/// Dilute: (1/f) pi hbar / (2 K_0en cos^2 theta) at delta from the Lorentzian
/// width. t_dc_exact and t_dc_small_delta give both routes for any regime;
/// they differ by the factor 1 + (delta/omega1)^2 exactly.
struct CoherenceAtHalfWidth {
    double t_dc = 0.0;              // primary route for the regime, s
    double t_dc_exact = 0.0;        // (1/f) pi hbar/(2 K cos^2 theta) at Delta = delta
    double t_dc_small_delta = 0.0;  // (1/f) (pi hbar/2K) (omega1/delta)^2
    double delta = 0.0;             // rad/s
    double delta_b = 0.0;           // T
    LineRegime regime = LineRegime::Gaussian;
    bool lorentzian_outside_validity = false;
};

inline CoherenceAtHalfWidth tdc_at_half_width(const LatticeSums& sums, const SpinSystem& sys,
                                              double B1) {
    sys.validate();
    if (!(B1 > 0.0)) throw ValidityError("tdc_at_half_width: B1 must be positive");

    const double m2 = second_moment(sums, sys);
    const double m4 = fourth_moment(sums, sys);
    const RatioRegime rr = ratio_and_regime(m2, m4, sys.f);
    const HalfWidth hw = half_width(m2, m4, rr.regime, sys.f);

    const double gamma_e = sys.g_e * constants.mu_B / constants.hbar;
    CoherenceAtHalfWidth out;
    out.regime = rr.regime;
    out.delta = hw.delta;
    out.delta_b = hw.delta / gamma_e;
    out.lorentzian_outside_validity = hw.outside_validity;

    DriveParams at_delta;
    at_delta.B0 = 1.0;  // t_DC does not depend on B0
    at_delta.B1 = B1;
    at_delta.delta = hw.delta;
    const CoherenceTime ct = coherence_time(sys, at_delta);
    out.t_dc_exact = ct.t_dc;
    out.t_dc_small_delta = ct.t_dc_small_delta;

    if (rr.regime == LineRegime::Gaussian)
        out.t_dc = 3.39 * B1 * B1 / (gamma_e * out.delta_b * out.delta_b * out.delta_b);
    else
        out.t_dc = out.t_dc_exact;
    return out;
}

inline CoherenceAtHalfWidth tdc_at_half_width(const LatticeCluster& c, const SpinSystem& sys,
                                              double B1) {
    return tdc_at_half_width(LatticeSums{c.s2, c.s4, c.s_cross}, sys, B1);
}

/// Everything the moments pipeline produces for one parameter set.
struct MomentReport {
    double m2 = 0.0;     // (rad/s)^2
    double m4 = 0.0;     // (rad/s)^4
    double ratio = 0.0;  // M4'/M2'^2
    LineRegime regime = LineRegime::Gaussian;
    double delta = 0.0;         // regime half-width, rad/s
    double delta_b = 0.0;       // delta hbar/(g_e mu_B), T
    double tdc_at_delta = 0.0;  // s
    // Intermediate regime carries both widths; the Lorentzian one is NaN at
    // f = 1 where its formula is invalid by construction.
    double delta_lorentzian = 0.0;
    bool lorentzian_outside_validity = false;
};

inline MomentReport moment_report(const LatticeSums& sums, const SpinSystem& sys, double B1) {
    MomentReport rep;
    rep.m2 = second_moment(sums, sys);
    rep.m4 = fourth_moment(sums, sys);
    const RatioRegime rr = ratio_and_regime(rep.m2, rep.m4, sys.f);
    rep.ratio = rr.ratio;
    rep.regime = rr.regime;
    const CoherenceAtHalfWidth tw = tdc_at_half_width(sums, sys, B1);
    rep.delta = tw.delta;
    rep.delta_b = tw.delta_b;
    rep.tdc_at_delta = tw.t_dc;
    rep.lorentzian_outside_validity = tw.lorentzian_outside_validity;
    if (rr.regime == LineRegime::CutoffLorentzian) {
        rep.delta_lorentzian = tw.delta;
    } else if (rr.regime == LineRegime::Intermediate) {
        rep.delta_lorentzian = half_width(rep.m2, rep.m4, LineRegime::CutoffLorentzian, sys.f).delta;
        rep.lorentzian_outside_validity = true;
    } else {
        rep.delta_lorentzian = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

inline MomentReport moment_report(const LatticeCluster& c, const SpinSystem& sys, double B1) {
    return moment_report(LatticeSums{c.s2, c.s4, c.s_cross}, sys, B1);
}

}  // namespace dipnut
