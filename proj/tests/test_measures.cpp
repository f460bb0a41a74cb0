#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "crit/errors.hpp"
#include "crit/measures.hpp"
#include "doctest.h"

using namespace crit;

TEST_CASE("uniform_measure") {
    const Measure u = uniform_measure(0.0, 1.0);
    CHECK(u.density()(0.3) == 1.0);
    CHECK(uniform_measure(0.0, 0.4).density()(0.2) == doctest::Approx(2.5));
    CHECK_THROWS_AS(uniform_measure(0.5, 0.5), ValidationError);
    CHECK_THROWS_AS(uniform_measure(-0.1, 0.5), ValidationError);
}

TEST_CASE("gap_measure") {
    const Measure g = gap_measure(2, 0.8, 0.4, 0.05);
    CHECK(g.mass(0.5, 0.8) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(g.mass(0.0, 0.05) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(g.mass(0.2, 0.5, true, false) == 0.0);
    const MeasureSummary s = summary(g, 2);
    CHECK(s.x_star == 0.8);
    CHECK(s.theta_b == doctest::Approx(1.6).epsilon(1e-15));

    const Measure top = gap_measure(2, 1.0, 1.0, 0.0);
    CHECK(top.mass(0.5, 1.0) == doctest::Approx(1.0));
    CHECK(top.density()(0.75) == doctest::Approx(2.0));

    CHECK_THROWS_AS(gap_measure(2, 0.8, 0.4, 0.3), ValidationError);
    CHECK_THROWS_AS(gap_measure(2, 0.8, 0.4, 0.0), ValidationError);
    CHECK_THROWS_AS(gap_measure(2, 0.5, 0.4, 0.05), ValidationError);
}

TEST_CASE("mix") {
    const Measure a = uniform_measure(0.0, 1.0);
    const Measure g = gap_measure(2, 0.8, 0.4, 0.05);
    CHECK(mix(a, g, 0.0).density()(0.3) == 1.0);
    CHECK(mix(a, g, 1.0).density()(0.3) == 0.0);
    const Measure same = mix(a, a, 0.37);
    for (double x : {0.01, 0.4, 0.99}) CHECK(same.density()(x) == doctest::Approx(1.0).epsilon(1e-15));
    const Measure m = mix(uniform_measure(0.0, 0.4), g, 0.5);
    CHECK(summary(m, 2).x_star == 0.8);
    CHECK(m.mass(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(mix(a, g, 1.5), ValidationError);
}

TEST_CASE("mass with endpoint inclusion at atoms") {
    const Measure m({{0.0, 0.5, 1.0, 1.0}}, {{0.7, 0.5}});
    CHECK(m.mass(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(m.mass(0.7, 0.9, false, true) == doctest::Approx(0.0));
    CHECK(m.mass(0.7, 0.9, true, true) == doctest::Approx(0.5));
    CHECK(m.mass(0.2, 0.7, true, false) == doctest::Approx(0.3));
    CHECK(m.mass(0.2, 0.7, true, true) == doctest::Approx(0.8));
    CHECK(std::isinf(m.density_sup()));
    CHECK_FALSE(summary(m, 2).mflat);
}

TEST_CASE("invalid measures are rejected") {
    CHECK_THROWS_AS(Measure({{0.0, 0.5, 1.0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(Measure({{0.0, 1.0, 2.0, -0.0001}}), ValidationError);
    CHECK_THROWS_AS(Measure({{0.0, 1.2, 1.0 / 1.2, 1.0 / 1.2}}), ValidationError);
    CHECK_THROWS_AS(Measure({}, {{0.5, 0.0}, {0.6, 1.0}}), ValidationError);
}

TEST_CASE("sample") {
    CHECK(uniform_measure(0.0, 1.0).sample(0.25) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(uniform_measure(0.5, 1.0).sample(0.5) == doctest::Approx(0.75).epsilon(1e-15));
    const Measure atom({}, {{0.7, 1.0}});
    for (double u : {0.0, 0.3, 0.999}) CHECK(atom.sample(u) == 0.7);
    // sloped piece: F(x) = x^2 on [0,1]
    const Measure ramp({{0.0, 1.0, 0.0, 2.0}});
    CHECK(ramp.sample(0.25) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ramp.sample(0.81) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("summary") {
    const MeasureSummary u = summary(uniform_measure(0.0, 1.0), 2);
    CHECK(u.x_star == 1.0);
    CHECK(u.theta_b == 2.0);
    CHECK(u.mflat);
    const MeasureSummary low = summary(uniform_measure(0.0, 0.4), 2);
    CHECK(low.x_star == 0.4);
    CHECK(low.mass_top == 0.0);
    CHECK_FALSE(low.mflat);
    CHECK(summary(uniform_measure(0.0, 0.5), 2).marginal);
    // zero-density pieces do not extend the support
    const Measure padded({{0.0, 0.6, 1.0 / 0.6, 1.0 / 0.6}, {0.6, 0.9, 0.0, 0.0}});
    CHECK(summary(padded, 2).x_star == 0.6);
    CHECK_THROWS_AS(require_flat(uniform_measure(0.0, 0.5), 2, "test"), NotFlatError);
}

TEST_CASE("property: total mass and monotone CDF") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::vector<Measure> ms = {uniform_measure(0.0, 1.0), gap_measure(3, 0.9, 0.55, 0.05),
                                     mix(uniform_measure(0.1, 0.9), gap_measure(2, 0.8, 0.6, 0.05), 0.3),
                                     Measure({{0.0, 0.3, 0.0, 2.0}, {0.3, 0.9, 2.0, 0.0}}, {{0.5, 0.1}})};
    for (const Measure& m : ms) {
        CHECK(m.mass(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
        double prev = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double c = m.mass(0.0, i / 1000.0);
            CHECK(c >= prev - 1e-15);
            prev = c;
        }
    }
}

TEST_CASE("property: inverse-CDF sampling reproduces interval masses") {
    const Measure m = mix(Measure({{0.0, 0.3, 0.0, 2.0}, {0.3, 0.9, 2.0, 0.0}}, {{0.5, 0.1}}),
                          gap_measure(2, 0.8, 0.4, 0.05), 0.4);
    const int N = 1'000'000;
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> xs(N);
    for (double& x : xs) x = m.sample(U(gen));
    std::sort(xs.begin(), xs.end());
    int bad = 0;
    for (int k = 0; k < 100; ++k) {
        double a = U(gen);
        double c = U(gen);
        if (a > c) std::swap(a, c);
        const double p = m.mass(a, c);
        const auto cnt = std::upper_bound(xs.begin(), xs.end(), c) - std::lower_bound(xs.begin(), xs.end(), a);
        const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / N);
        if (std::abs(static_cast<double>(cnt) / N - p) > 4 * se) ++bad;
    }
    CHECK(bad == 0);
}
