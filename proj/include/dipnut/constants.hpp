#pragma once

namespace dipnut {

// CODATA 2018. Fixed here once; never recomputed elsewhere.
struct PhysicalConstants {
    double mu0_over_4pi = 1e-7;          // T^2 m^3 / J (exact)
    double mu_B = 9.2740100783e-24;      // Bohr magneton, J/T
    double mu_N = 5.0507837461e-27;      // nuclear magneton, J/T
    double hbar = 1.054571817e-34;       // J s
    double k_B = 1.380649e-23;           // J/K (exact)
};

inline constexpr PhysicalConstants constants{};

}  // namespace dipnut
