#include <cmath>
#include <vector>

#include "crit/dynamics.hpp"
#include "crit/measures.hpp"
#include "crit/oracles.hpp"
#include "crit/survival.hpp"
#include "doctest.h"

using namespace crit;

TEST_CASE("Otter-Dwass tail") {
    const std::vector<double> none = otter_dwass_tail({2, 0.0}, 3);
    CHECK(none[0] == 1.0);
    CHECK(none[1] == 0.0);
    CHECK(otter_dwass_pmf({2, 0.5}, 1)[0] == doctest::Approx(0.25).epsilon(1e-14));
    const std::vector<double> crit = otter_dwass_tail({2, 0.5}, 10000);
    CHECK(std::sqrt(10000.0) * crit[9999] == doctest::Approx(2.0 / std::sqrt(M_PI)).epsilon(0.01));
    CHECK(otter_dwass_amplitude({2, 0.5}) == doctest::Approx(2.0 / std::sqrt(M_PI)).epsilon(1e-14));
}

TEST_CASE("property: progeny law plus survival sums to one") {
    for (double p : {0.2, 0.4}) {
        double s = 0.0;
        for (double x : otter_dwass_pmf({2, p}, 100000)) s += x;
        CHECK(std::abs(s - 1.0) < 1e-10);
    }
    for (double p : {0.6, 0.8}) {
        double s = 0.0;
        for (double x : otter_dwass_pmf({2, p}, 100000)) s += x;
        CHECK(std::abs(s + gw_survival({2, p}, 1e-14) - 1.0) < 1e-10);
    }
}

TEST_CASE("gw_survival") {
    CHECK(gw_survival({2, 0.5}, 1e-12) == 0.0);
    CHECK(gw_survival({3, 0.2}, 1e-12) == 0.0);
    CHECK(gw_survival({2, 1.0}, 1e-12) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(std::abs(gw_survival({2, 0.6}, 1e-12) - 0.2 / 0.36) < 1e-11);
    double prev = 0.0;
    for (double p = 0.3; p <= 1.0; p += 0.05) {
        const double s2 = gw_survival({2, p}, 1e-12);
        CHECK(s2 >= prev);
        CHECK(gw_survival({3, p}, 1e-12) >= s2);
        prev = s2;
    }
}

TEST_CASE("mc_z") {
    const Measure u = uniform_measure(0.0, 1.0);
    CHECK(mc_z(u, 2, 0.9, 5, 1000, 1).value == 0.0);
    const Estimate two = mc_z(u, 2, 1.0, 2, 10'000'000, 2);
    CHECK(std::abs(two.value - 0.3125) < 4 * two.std_error);
    const Measure g = gap_measure(2, 0.8, 0.4, 0.05);
    const Estimate ten = mc_z(g, 2, 1.0, 10, 10'000'000, 3);
    CHECK(std::abs(ten.value - std::pow(0.4, 10)) < 4 * ten.std_error);
    for (double theta : {1.0, 1.3, 1.9}) {
        const Estimate one = mc_z(u, 2, theta, 1, 1'000'000, 4);
        CHECK(std::abs(one.value - u.mass(1.0 - theta / 2, 1.0)) < 4 * one.std_error);
    }
}

TEST_CASE("mc_z agrees with propagate") {
    const Measure m = mix(uniform_measure(0.0, 1.0), gap_measure(3, 0.9, 0.5, 0.05), 0.5);
    const std::vector<Estimate> mc = mc_z_profile(m, 3, 1.2, 12, 4'000'000, 5);
    const PropagateResult pr = propagate(m, 3, 1.2, 12, 4096);
    for (int k = 0; k <= 12; ++k) {
        CHECK(std::abs(mc[k].value - pr.Z[k]) <= 4 * mc[k].std_error + 1e-12);
    }
}

TEST_CASE("percolation reduction detection") {
    const auto r = percolation_reduction(gap_measure(2, 0.8, 0.4, 0.05), 2, 1.0);
    REQUIRE(r.has_value());
    CHECK(r->spec.p == doctest::Approx(0.4));
    CHECK(r->root == doctest::Approx(1.0));
    CHECK_FALSE(percolation_reduction(uniform_measure(0.0, 1.0), 2, 0.5).has_value());
}

TEST_CASE("property: gap avalanches are Galton-Watson clusters") {
    // v = 0.5 lies in (1 - x_star, theta_b - x_star]: the root topples with probability p
    for (double p : {0.4, 0.5, 0.6}) {
        const Measure g = gap_measure(2, 0.8, p, 0.05);
        const auto red = percolation_reduction(g, 2, 0.5);
        REQUIRE(red.has_value());
        const std::int64_t N = 200000;
        const TailTable t = mc_tail(g, 2, 0.5, N, 10000, 77, 0, 101);
        const std::vector<double> pmf = otter_dwass_pmf(red->spec, 100);
        for (int n = 1; n <= 100; ++n) {
            const double emp = t.rows[n - 1].p - t.rows[n].p;
            const double exact = red->root * pmf[n - 1];
            const double se = std::sqrt(std::max(exact * (1 - exact), 1e-12) / N);
            CHECK(std::abs(emp - exact) <= 4 * se);
        }
    }
}
