#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "dipnut/lattice.hpp"

using namespace dipnut;

TEST_CASE("site counts follow (2cm+1)^3 - 1") {
    CHECK(generate_cluster(1).size() == 26);
    CHECK(generate_cluster(2).size() == 124);
    CHECK(generate_cluster(5).size() == 1330);
    for (int cm = 1; cm <= 10; ++cm) {
        const auto c = generate_cluster(cm);
        const std::size_t expect = static_cast<std::size_t>(2 * cm + 1) * (2 * cm + 1) * (2 * cm + 1) - 1;
        CHECK(c.size() == expect);
        CHECK(c.k_values.size() == expect);
    }
    CHECK_THROWS_AS(generate_cluster(0), std::invalid_argument);
}

TEST_CASE("dipolar coefficients at reference sites") {
    CHECK(dipolar_coefficient({0, 0, 1}) == -2.0);
    CHECK(dipolar_coefficient({0, 0, -1}) == -2.0);
    CHECK(dipolar_coefficient({1, 0, 0}) == 1.0);
    CHECK(dipolar_coefficient({0, -1, 0}) == 1.0);
    CHECK(dipolar_coefficient({1, 1, 1}) == 0.0);  // magic angle, exactly zero
    CHECK_THAT(dipolar_coefficient({1, 1, 0}),
               Catch::Matchers::WithinRel(1.0 / (2.0 * std::sqrt(2.0)), 1e-14));
    CHECK_THAT(dipolar_coefficient({1, 0, 1}),
               Catch::Matchers::WithinRel(-1.0 / (4.0 * std::sqrt(2.0)), 1e-14));
    CHECK_THAT(dipolar_coefficient({0, 0, 2}), Catch::Matchers::WithinRel(-0.25, 1e-14));
    CHECK_THROWS_AS(dipolar_coefficient({0, 0, 0}), std::invalid_argument);
}

TEST_CASE("cm=1 sums match the hand evaluation") {
    const auto c = generate_cluster(1);
    // 2*4 + 4*1 + 4*(1/8) + 8*(1/32) + 8*0
    CHECK_THAT(c.s2, Catch::Matchers::WithinRel(12.75, 1e-13));
    // 2*16 + 4*1 + 4/64 + 8/1024
    CHECK_THAT(c.s4, Catch::Matchers::WithinRel(36.0703125, 1e-13));
    CHECK_THAT(c.s_cross, Catch::Matchers::WithinRel(12.75 * 12.75 - 36.0703125, 1e-13));
}

TEST_CASE("s_cross equals the explicit double sum") {
    for (int cm : {1, 2}) {
        const auto c = generate_cluster(cm);
        double brute = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j)
            for (std::size_t l = 0; l < c.size(); ++l) {
                if (j == l) continue;
                brute += c.k_values[j] * c.k_values[j] * c.k_values[l] * c.k_values[l];
            }
        CHECK_THAT(c.s_cross, Catch::Matchers::WithinRel(brute, 1e-12));
    }
}

TEST_CASE("converged sums at cm=50") {
    const auto c = generate_cluster(50);
    CHECK_THAT(c.s2, Catch::Matchers::WithinRel(13.35, 0.01));
    CHECK_THAT(c.s4, Catch::Matchers::WithinRel(36.1, 0.01));
    CHECK_THAT(c.s_cross, Catch::Matchers::WithinRel(142.1, 0.02));
    // regression against an independent high-precision evaluation
    CHECK_THAT(c.s2, Catch::Matchers::WithinRel(13.3572611711, 1e-11));
    CHECK_THAT(c.s4, Catch::Matchers::WithinRel(36.0819917598, 1e-11));
    CHECK_THAT(c.s_cross, Catch::Matchers::WithinRel(142.334434233, 1e-10));
}

TEST_CASE("cluster is closed under the symmetry group fixing the field axis") {
    for (int cm : {1, 2, 3}) {
        const auto c = generate_cluster(cm);
        std::set<std::tuple<int, int, int>> present;
        for (const auto& s : c.sites) present.insert({s.i, s.j, s.k});
        for (const auto& s : c.sites)
            for (int sx = -1; sx <= 1; sx += 2)
                for (int sy = -1; sy <= 1; sy += 2)
                    for (int sz = -1; sz <= 1; sz += 2) {
                        REQUIRE(present.count({sx * s.i, sy * s.j, sz * s.k}) == 1);
                        REQUIRE(present.count({sx * s.j, sy * s.i, sz * s.k}) == 1);
                    }
    }
}

TEST_CASE("every k value occurs an even number of times") {
    for (int cm : {1, 2, 3}) {
        const auto c = generate_cluster(cm);
        std::map<double, int> counts;
        for (double k : c.k_values) ++counts[k];
        for (const auto& [k, n] : counts) {
            INFO("k = " << k);
            CHECK(n % 2 == 0);
        }
    }
}

TEST_CASE("sum convergence: s2 nondecreasing, s4 shell increments fall off fast") {
    std::vector<double> s2s, s4s;
    for (int cm = 1; cm <= 8; ++cm) {
        const auto c = generate_cluster(cm);
        s2s.push_back(c.s2);
        s4s.push_back(c.s4);
    }
    for (std::size_t i = 1; i < s2s.size(); ++i) CHECK(s2s[i] >= s2s[i - 1]);
    // shell at cutoff cm adds ~ cm^2 sites with k^4 ~ cm^-12
    for (std::size_t i = 3; i < s4s.size(); ++i) {
        const double d_prev = s4s[i - 1] - s4s[i - 2];
        const double d_here = s4s[i] - s4s[i - 1];
        const double cm_prev = static_cast<double>(i);  // index i holds cutoff cm = i+1
        const double cm_here = static_cast<double>(i + 1);
        CHECK(d_here > 0.0);
        CHECK(d_here <= d_prev * std::pow(cm_prev / cm_here, 10.0) * 2.0);
    }
}

TEST_CASE("occupation sampling: determinism, f=1, binomial mean") {
    const auto c = generate_cluster(5);

    const auto full = sample_occupation(c, 1.0, 7);
    CHECK(full.count() == c.size());

    const auto a = sample_occupation(c, 0.5, 123456789);
    const auto b = sample_occupation(c, 0.5, 123456789);
    CHECK(a.occupied == b.occupied);
    const auto other = sample_occupation(c, 0.5, 987654321);
    CHECK(a.occupied != other.occupied);

    CHECK_THROWS_AS(sample_occupation(c, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_occupation(c, 1.5, 1), std::invalid_argument);

    const int n_real = 10000;
    const double f = 0.05;
    double total = 0.0;
    const SplitMix64 base(42);
    for (int r = 0; r < n_real; ++r)
        total += static_cast<double>(sample_occupation(c, f, base.at(static_cast<std::uint64_t>(r))).count());
    const double mean = total / n_real;
    const double expect = f * static_cast<double>(c.size());
    const double sem = std::sqrt(expect * (1.0 - f) / n_real);
    CHECK(std::abs(mean - expect) < 3.0 * sem);
}

TEST_CASE("strongest_k_values picks dominant couplings in order") {
    const auto c = generate_cluster(1);
    const auto k4 = strongest_k_values(c, 4);
    REQUIRE(k4.size() == 4);
    CHECK(k4[0] == -2.0);
    CHECK(k4[1] == -2.0);
    CHECK(k4[2] == 1.0);
    CHECK(k4[3] == 1.0);
    CHECK_THROWS_AS(strongest_k_values(c, 27), std::invalid_argument);
}
