#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dipnut/rng.hpp"

namespace dipnut {

/// Lattice site in units of the lattice constant. The origin is the central
/// electron spin and is never a valid neighbour site.
struct SiteIndex {
    int i = 0, j = 0, k = 0;

    bool operator==(const SiteIndex&) const = default;
};

/// Dimensionless dipolar coefficient (1 - 3 cos^2 xi)/R^3 for a neighbour
/// site, with z along the static field (the four-fold axis). The numerator
/// R^2 - 3k^2 is formed in integer arithmetic, so symmetry-related sites get
/// bit-identical values and magic-angle sites give exactly zero.
inline double dipolar_coefficient(SiteIndex s) {
    const long long r2i = 1LL * s.i * s.i + 1LL * s.j * s.j + 1LL * s.k * s.k;
    if (r2i == 0)
        throw std::invalid_argument(
            "dipolar_coefficient: the origin hosts the central spin, not a neighbour");
    const long long num = r2i - 3LL * s.k * s.k;
    const double r2 = static_cast<double>(r2i);
    return static_cast<double>(num) / (r2 * r2 * std::sqrt(r2));
}

struct LatticeSums {
    double s2 = 0.0;       // sum k_j^2
    double s4 = 0.0;       // sum k_j^4
    double s_cross = 0.0;  // sum_{j,l != j} k_j^2 k_l^2 = s2^2 - s4
};

/// Accumulates in the given order (fixed, so results are bit-stable).
inline LatticeSums lattice_sums(std::span<const double> k_values) {
    LatticeSums s;
    for (double k : k_values) {
        const double k2 = k * k;
        s.s2 += k2;
        s.s4 += k2 * k2;
    }
    s.s_cross = s.s2 * s.s2 - s.s4;
    return s;
}

/// All sites with max(|i|,|j|,|k|) <= cm except the origin, in lexicographic
/// (i,j,k) order, with their dipolar coefficients and lattice sums.
/// Immutable after construction; safe for concurrent reads.
struct LatticeCluster {
    int cm = 0;
    std::vector<SiteIndex> sites;
    std::vector<double> k_values;
    double s2 = 0.0, s4 = 0.0, s_cross = 0.0;

    std::size_t size() const { return sites.size(); }
};

inline LatticeCluster generate_cluster(int cm) {
    if (cm < 1)
        throw std::invalid_argument("generate_cluster: cm must be >= 1 (cm = 0 has no neighbour sites)");
    LatticeCluster c;
    c.cm = cm;
    const std::size_t n_sites = static_cast<std::size_t>(2 * cm + 1) * (2 * cm + 1) * (2 * cm + 1) - 1;
    c.sites.reserve(n_sites);
    c.k_values.reserve(n_sites);
    for (int i = -cm; i <= cm; ++i)
        for (int j = -cm; j <= cm; ++j)
            for (int k = -cm; k <= cm; ++k) {
                if (i == 0 && j == 0 && k == 0) continue;
                const SiteIndex s{i, j, k};
                c.sites.push_back(s);
                c.k_values.push_back(dipolar_coefficient(s));
            }
    const LatticeSums sums = lattice_sums(c.k_values);
    c.s2 = sums.s2;
    c.s4 = sums.s4;
    c.s_cross = sums.s_cross;
    return c;
}

/// The n coefficients of largest |k|, descending, ties broken by site order.
/// Used to pick the dominant neighbours for small exact-evolution clusters.
inline std::vector<double> strongest_k_values(const LatticeCluster& c, int n) {
    if (n < 0 || static_cast<std::size_t>(n) > c.size())
        throw std::invalid_argument("strongest_k_values: n out of range");
    std::vector<std::size_t> order(c.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(c.k_values[a]) > std::abs(c.k_values[b]);
    });
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) out[static_cast<std::size_t>(m)] = c.k_values[order[static_cast<std::size_t>(m)]];
    return out;
}

/// Random occupation of the cluster's sites, each independently with
/// probability f. Site i is occupied iff SplitMix64(seed).u01_at(i) < f,
/// so a (seed, f) pair reproduces the mask bit-for-bit.
struct Occupation {
    std::vector<bool> occupied;
    double f = 1.0;
    std::uint64_t seed = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), true));
    }
};

inline Occupation sample_occupation(const LatticeCluster& cluster, double f, std::uint64_t seed) {
    if (!(f > 0.0) || !(f <= 1.0))
        throw std::invalid_argument("sample_occupation: f must be in (0, 1]");
    Occupation occ;
    occ.f = f;
    occ.seed = seed;
    occ.occupied.resize(cluster.size());
    const SplitMix64 rng(seed);
    for (std::size_t i = 0; i < cluster.size(); ++i) occ.occupied[i] = rng.u01_at(i) < f;
    return occ;
}

}  // namespace dipnut
