#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "dipnut/dynamics.hpp"
#include "dipnut/lattice.hpp"

using namespace dipnut;

namespace {

SpinSystem proton_system() {
    SpinSystem s;
    s.g_e = 2.0;
    s.g_n = 5.586;
    s.nuclear_I = 0.5;
    s.a = 3e-10;
    s.f = 1.0;
    return s;
}

}  // namespace

TEST_CASE("k0en magnitude and scaling") {
    SpinSystem s = proton_system();
    CHECK_THAT(k0en(s), Catch::Matchers::WithinRel(1.94e-27, 0.005));

    SpinSystem doubled = s;
    doubled.a = 2.0 * s.a;
    CHECK_THAT(k0en(doubled), Catch::Matchers::WithinRel(k0en(s) / 8.0, 1e-12));

    SpinSystem p31 = s;
    p31.g_n = 2.261;
    CHECK_THAT(k0en(p31), Catch::Matchers::WithinRel(k0en(s) * 2.261 / 5.586, 1e-12));
    CHECK_THAT(k0en(p31), Catch::Matchers::WithinRel(7.85e-28, 0.005));
}

TEST_CASE("reduced time map and its inverse") {
    const SpinSystem sys = proton_system();
    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 1e-3;
    d.delta = 0.0;

    CHECK(reduced_time(0.0, sys, d).tau == 0.0);
    CHECK(reduced_time(0.0, sys, d).tau_eff == 0.0);

    // at resonance cos(theta) = 0 exactly, so tau_eff vanishes at any t
    CHECK(reduced_time(1.0, sys, d).tau_eff == 0.0);
    CHECK(reduced_time(1.0, sys, d).tau > 0.0);

    // delta = omega1/sqrt(3) gives cos^2 theta = 1/4
    const EffectiveField ef0 = effective_field(sys, d);
    d.delta = ef0.omega1 / std::sqrt(3.0);
    const double t_ref = constants.hbar / k0en(sys);
    const ReducedTime rt = reduced_time(t_ref, sys, d);
    CHECK_THAT(rt.tau, Catch::Matchers::WithinRel(1.0, 1e-12));
    CHECK_THAT(rt.tau_eff, Catch::Matchers::WithinRel(0.25, 1e-12));

    CHECK_THAT(time_from_tau(rt.tau, sys), Catch::Matchers::WithinRel(t_ref, 1e-12));
    CHECK_THAT(time_from_tau_eff(rt.tau_eff, sys, d), Catch::Matchers::WithinRel(t_ref, 1e-12));
}

TEST_CASE("pi factor: boundary values and frozen golden") {
    const auto c = generate_cluster(1);
    CHECK(pi_factor(c.k_values, 0.0) == 1.0);

    // the axial k = -2 pair crosses zero first, at tau_eff = pi/2
    CHECK(std::abs(pi_factor(c.k_values, M_PI / 2.0)) < 1e-15);

    // independent high-precision evaluation of the 26-factor product
    CHECK_THAT(pi_factor(c.k_values, 0.3 * M_PI),
               Catch::Matchers::WithinRel(0.2002943876795821, 1e-12));

    CHECK_THROWS_AS(pi_factor(c.k_values, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(pi_factor(c.k_values, 1.0, 0.0), std::invalid_argument);

    // no neighbours, no decay
    const std::vector<double> none;
    CHECK(pi_factor(none, 12.3) == 1.0);
}

TEST_CASE("pi factor is non-negative on full symmetric clusters") {
    const SplitMix64 rng(2024);
    std::uint64_t ctr = 0;
    for (int cm = 1; cm <= 3; ++cm) {
        const auto c = generate_cluster(cm);
        for (int trial = 0; trial < 200; ++trial) {
            const double tau_eff = 12.0 * M_PI * rng.u01_at(ctr++);
            CHECK(pi_factor(c.k_values, tau_eff) >= 0.0);
        }
    }
}

TEST_CASE("Monte Carlo dilution: f = 1 and tau_eff = 0 are exact") {
    const auto c = generate_cluster(2);
    const auto full = pi_factor_mc(c, 1.0, 1.7, 64, 99);
    CHECK(full.mean == pi_factor(c.k_values, 1.7));
    CHECK(full.std_error == 0.0);

    const auto zero = pi_factor_mc(c, 0.4, 0.0, 64, 99);
    CHECK(zero.mean == 1.0);
    CHECK(zero.std_error == 0.0);

    CHECK_THROWS_AS(pi_factor_mc(c, 0.0, 1.0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(pi_factor_mc(c, 0.5, 1.0, 0, 1), std::invalid_argument);
}

TEST_CASE("Monte Carlo dilution against exhaustive enumeration, 12 sites") {
    const auto c = generate_cluster(1);
    const std::vector<double> k12(c.k_values.begin(), c.k_values.begin() + 12);
    const double f = 0.3;
    const double tau_eff = 0.8 * M_PI;

    // brute force over all 2^12 occupations
    double exact = 0.0;
    for (unsigned mask = 0; mask < 4096u; ++mask) {
        double w = 1.0, p = 1.0;
        for (int j = 0; j < 12; ++j) {
            if (mask & (1u << j)) {
                w *= f;
                p *= std::cos(0.5 * tau_eff * k12[static_cast<std::size_t>(j)]);
            } else {
                w *= 1.0 - f;
            }
        }
        exact += w * p;
    }
    CHECK_THAT(exact, Catch::Matchers::WithinRel(0.5750377915825786, 1e-12));

    const auto est = pi_factor_mc(k12, f, tau_eff, 200000, 31415);
    CHECK(est.std_error > 0.0);
    CHECK(std::abs(est.mean - exact) < 3.0 * est.std_error);

    // identical estimate when run with several workers
    const auto est4 = pi_factor_mc(k12, f, tau_eff, 200000, 31415, 4);
    CHECK(est4.mean == est.mean);
    CHECK(est4.std_error == est.std_error);
}

TEST_CASE("Monte Carlo dilution at f = 0.05, cm = 2 against frozen reference") {
    const auto c = generate_cluster(2);
    // independent-site average prod_j [(1-f) + f cos(tau k_j/2)], frozen from
    // a high-precision script and re-derived here
    double exact = 1.0;
    for (double k : c.k_values) exact = exact * (0.95 + 0.05 * std::cos(0.5 * M_PI * k));
    CHECK_THAT(exact, Catch::Matchers::WithinRel(0.6127714185129183, 1e-12));

    const auto est = pi_factor_mc(c, 0.05, M_PI, 20000, 7777);
    CHECK(est.std_error > 0.0);
    CHECK(std::abs(est.mean - exact) < 3.0 * est.std_error);
}

TEST_CASE("mean-field dilution agrees with the disorder average for small tau_eff (1-f)") {
    // documented regime: f near 1 and tau_eff small; the mean-field bias
    // scales like tau_eff^2 f (1-f) and stays below the MC resolution here
    const auto c = generate_cluster(1);
    const double f = 0.995, tau_eff = 0.2 * M_PI;
    const double mean_field = pi_factor(c.k_values, tau_eff, f);
    const auto est = pi_factor_mc(c, f, tau_eff, 150, 555);
    CHECK(est.std_error > 0.0);
    CHECK(std::abs(est.mean - mean_field) < 3.0 * est.std_error);
}

TEST_CASE("thermal transients: structure, envelope, resonance") {
    const SpinSystem sys = proton_system();
    const auto c = generate_cluster(1);
    InitialState state;
    state.temperature = 4.2;

    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 1e-3;
    const EffectiveField ef0 = effective_field(sys, d);
    d.delta = 0.5 * ef0.omega1;
    const EffectiveField ef = effective_field(sys, d);

    const auto grid = make_time_grid(sys, d, 3, 40);
    const NutationSignal sig = signals(state, sys, d, c.k_values, grid);

    const double A = constants.hbar * ef.omega0 / (4.0 * constants.k_B * state.temperature);
    CHECK_THAT(sig.amplitude_A, Catch::Matchers::WithinRel(A, 1e-12));
    CHECK(sig.pi[0] == 1.0);
    CHECK_THAT(sig.sx[0], Catch::Matchers::WithinRel(A * ef.sin_theta, 1e-12));
    CHECK(sig.sy[0] == 0.0);

    for (std::size_t i = 0; i < sig.t.size(); ++i) {
        // sz constant, transverse envelope A sin(theta)|Pi|
        CHECK(sig.sz[i] == sig.sz[0]);
        CHECK_THAT(std::hypot(sig.sx[i], sig.sy[i]),
                   Catch::Matchers::WithinAbs(A * ef.sin_theta * std::abs(sig.pi[i]),
                                              1e-12 * A * ef.sin_theta));
        // ratio identity sx/sx(0) = Pi cos(Omega_R t)
        const double ratio = sig.sx[i] / sig.sx[0];
        CHECK_THAT(ratio, Catch::Matchers::WithinAbs(sig.pi[i] * std::cos(ef.omega_R * sig.t[i]), 1e-9));
    }
    CHECK_THAT(sig.sz[0], Catch::Matchers::WithinRel(-A * ef.cos_theta, 1e-12));

    SECTION("exact resonance: no damping, sz = 0") {
        d.delta = 0.0;
        const auto sig0 = signals(state, sys, d, c.k_values, grid);
        for (std::size_t i = 0; i < sig0.t.size(); ++i) {
            CHECK(sig0.pi[i] == 1.0);
            CHECK(sig0.sz[i] == 0.0);
            CHECK_THAT(sig0.sx[i],
                       Catch::Matchers::WithinAbs(A * std::cos(ef0.omega1 * sig0.t[i]), A * 1e-12));
        }
    }

    SECTION("no lattice: undamped sinusoid") {
        const std::vector<double> none;
        const auto sigf = signals(state, sys, d, none, grid);
        for (double p : sigf.pi) CHECK(p == 1.0);
    }

    SECTION("general I rejected") {
        SpinSystem s52 = sys;
        s52.nuclear_I = 2.5;
        CHECK_THROWS_AS(signals(state, s52, d, c.k_values, grid), ValidityError);
    }
}

TEST_CASE("electron-down transients carry unit prefactor and the spin-1/2 trace factor") {
    const SpinSystem sys = proton_system();
    const auto c = generate_cluster(1);
    InitialState state;
    state.variant = StateVariant::ElectronDownNuclearThermal;
    state.temperature = 4.2;

    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 1e-3;
    d.delta = 0.7 * effective_field(sys, d).omega1;
    const EffectiveField ef = effective_field(sys, d);

    const auto grid = make_time_grid(sys, d, 2, 40);
    const NutationSignal sig = signals(state, sys, d, c.k_values, grid);
    CHECK(sig.amplitude_A == 1.0);
    CHECK_THAT(sig.sx[0], Catch::Matchers::WithinRel(0.5 * ef.sin_theta, 1e-12));
    CHECK_THAT(sig.sz[0], Catch::Matchers::WithinRel(-0.5 * ef.cos_theta, 1e-12));
}

TEST_CASE("validity flags") {
    const SpinSystem sys = proton_system();
    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 2e-3;
    d.delta = 0.0;
    InitialState state;

    state.temperature = 4.2;  // hbar omega0 / kT = 0.11
    CHECK_FALSE(validity_flags(state, sys, d).hta_warning);
    state.temperature = 2.0;  // 0.235
    CHECK(validity_flags(state, sys, d).hta_warning);

    CHECK_FALSE(validity_flags(state, sys, d).redfield_warning);  // K/(hbar omega1) = 0.052
    d.B1 = 2e-4;
    CHECK(validity_flags(state, sys, d).redfield_warning);
}

TEST_CASE("coherence time: resonance divergence, 1/f scaling, parity, monotonicity") {
    SpinSystem sys = proton_system();
    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 1e-3;
    d.delta = 0.0;

    CHECK(std::isinf(coherence_time(sys, d).t_dc));

    d.delta = 3e7;
    const double full = coherence_time(sys, d).t_dc;
    sys.f = 0.5;
    CHECK_THAT(coherence_time(sys, d).t_dc, Catch::Matchers::WithinRel(2.0 * full, 1e-12));
    sys.f = 1.0;

    // exact form equals the small-delta form times 1 + (delta/omega1)^2
    const EffectiveField ef = effective_field(sys, d);
    const CoherenceTime ct = coherence_time(sys, d);
    const double x2 = d.delta * d.delta / (ef.omega1 * ef.omega1);
    CHECK_THAT(ct.t_dc, Catch::Matchers::WithinRel(ct.t_dc_small_delta * (1.0 + x2), 1e-12));
    CHECK(ct.small_delta_valid == (std::abs(d.delta) / ef.omega1 <= 0.1));

    DriveParams dneg = d;
    dneg.delta = -d.delta;
    CHECK(coherence_time(sys, dneg).t_dc == ct.t_dc);

    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10; ++i) {
        DriveParams di = d;
        di.delta = ef.omega1 * i / 10.0;
        const double t = coherence_time(sys, di).t_dc;
        CHECK(t < prev);
        prev = t;
    }
}

TEST_CASE("initial-state dipolar correction term") {
    const SpinSystem sys = proton_system();
    const auto c = generate_cluster(1);

    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 1e-3;
    d.delta = 0.6 * effective_field(sys, d).omega1;
    const EffectiveField ef = effective_field(sys, d);

    // representative K_0en/kT = 1e-5
    const double temperature = k0en(sys) / (1e-5 * constants.k_B);

    SECTION("vanishes at resonance and at tau_eff = 0") {
        DriveParams res = d;
        res.delta = 0.0;
        CHECK(initial_state_correction(sys, res, c.k_values, temperature, 2.2) == 0.0);
        CHECK(initial_state_correction(sys, d, c.k_values, temperature, 0.0) == 0.0);
    }

    SECTION("matches a direct term-by-term evaluation") {
        const double tau_eff = 0.3 * M_PI;
        const double got = initial_state_correction(sys, d, c.k_values, temperature, tau_eff);

        const double K = k0en(sys);
        const double kt = constants.k_B * temperature;
        double direct = 0.0;
        for (std::size_t m = 0; m < c.k_values.size(); ++m) {
            double prod = 1.0;
            for (std::size_t j = 0; j < c.k_values.size(); ++j)
                if (j != m) prod *= std::cos(0.5 * tau_eff * c.k_values[j]);
            direct += (K * c.k_values[m] / (4.0 * kt)) * std::sin(0.5 * tau_eff * c.k_values[m]) * prod;
        }
        direct *= ef.sin_theta * ef.cos_theta;
        CHECK_THAT(got, Catch::Matchers::WithinRel(direct, 1e-12));

        // negligible next to the main transverse coefficient at that instant
        const double main_coef = (constants.hbar * ef.omega0 / (2.0 * kt)) *
                                 pi_factor(c.k_values, tau_eff) * ef.sin_theta;
        CHECK(std::abs(got) < 0.01 * std::abs(main_coef));
    }
}

TEST_CASE("time grid construction") {
    const SpinSystem sys = proton_system();
    DriveParams d;
    d.B0 = 0.35;
    d.B1 = 1e-3;
    d.delta = 0.0;
    const EffectiveField ef = effective_field(sys, d);

    const auto grid = make_time_grid(sys, d, 2, 40);
    REQUIRE(grid.size() == 81);
    CHECK(grid[0] == 0.0);
    CHECK_THAT(grid.back(), Catch::Matchers::WithinRel(2.0 * 2.0 * M_PI / ef.omega_R, 1e-12));
    CHECK_THROWS_AS(make_time_grid(sys, d, 0, 40), std::invalid_argument);
    CHECK_THROWS_AS(make_time_grid(sys, d, 2, 39), std::invalid_argument);
}
