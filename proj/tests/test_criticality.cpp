#include <cmath>
#include <vector>

#include "doctest.h"

#include "crit/criticality.hpp"
#include "crit/errors.hpp"
#include "crit/dynamics.hpp"
#include "crit/survival.hpp"

using namespace crit;

namespace {

MixtureFamily gap_family() { return {gap_measure(2, 0.8, 0.3, 0.05), gap_measure(2, 0.8, 0.7, 0.05), 2}; }

}  // namespace

TEST_CASE("power-law fit recovers exact laws") {
    std::vector<double> x;
    std::vector<double> y;
    for (double t = 1.0; t <= 100.0; t *= 1.5) {
        x.push_back(t);
        y.push_back(3.0 * std::pow(t, -0.5));
    }
    const ScalingFit f = fit_power_law(x, y, 1.0, 100.0);
    CHECK(f.exponent == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.stderr_exponent < 1e-10);

    CHECK_THROWS_AS(fit_power_law({1.0, 2.0}, {1.0, 2.0}, 0.0, 10.0), ValidationError);
    CHECK_THROWS_AS(fit_power_law({1.0, 2.0, 50.0}, {1.0, 2.0, 3.0}, 0.0, 10.0), ValidationError);
}

TEST_CASE("z increases along the gap family") {
    const MixtureFamily fam = gap_family();
    double prev = 0.0;
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double z = z_of_rho(fam.at(a), 2, 1e-12, 1024).z;
        CHECK(z > prev);
        CHECK(z == doctest::Approx(0.3 + 0.4 * a).epsilon(1e-6));
        prev = z;
    }
}

TEST_CASE("critical alpha of the gap family") {
    CHECK(find_critical_alpha(gap_family(), 1e-8, 1024) == doctest::Approx(0.5).epsilon(1e-6));

    const MixtureFamily sub{gap_measure(2, 0.8, 0.2, 0.05), gap_measure(2, 0.8, 0.4, 0.05), 2};
    CHECK_THROWS_AS(find_critical_alpha(sub, 1e-8, 1024), ValidationError);
}

TEST_CASE("gamma scan on the gap family") {
    const GammaScan g = gamma_scan(gap_family(), 1.0, {0.1, 0.2, 0.3, 0.4, 0.45}, 1024, 1e-8);
    CHECK(g.fit.exponent == doctest::Approx(-1.0).epsilon(1e-3));
    for (const GammaPoint& p : g.points) CHECK(p.product == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(g.tau_empirical == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(g.tau_formula == doctest::Approx(0.5).epsilon(1e-3));

    CHECK_THROWS_AS(gamma_scan(gap_family(), 1.0, {0.2}, 1024), ValidationError);
    CHECK_THROWS_AS(gamma_scan(gap_family(), 1.0, {0.1, 0.2, 0.7}, 1024), ValidationError);
}

TEST_CASE("amplitudes at the critical gap") {
    const Amplitudes a = amplitudes(gap_measure(2, 0.8, 0.5, 0.05), 2, 1.0, 2048);
    CHECK(a.critical);
    CHECK(a.tau == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(a.c == doctest::Approx(std::sqrt(8.0)).epsilon(0.01));
    CHECK(a.theta == doctest::Approx(std::sqrt(8.0) / std::sqrt(M_PI)).epsilon(0.01));
    CHECK(a.tee == doctest::Approx(16.0).epsilon(0.02));
}

TEST_CASE("percolation verdicts") {
    CHECK(percolation_verdict(gap_measure(2, 0.8, 0.6, 0.05), 2).verdict == Verdict::infinite_for_large_v);
    CHECK(percolation_verdict(uniform_measure(0.0, 1.0), 2).verdict == Verdict::inconclusive);
    CHECK(percolation_verdict(uniform_measure(0.0, 1.0), 3).verdict == Verdict::inconclusive);
    CHECK(percolation_verdict(uniform_measure(0.0, 0.5), 2).verdict == Verdict::marginal);
    CHECK(percolation_verdict(gap_measure(2, 0.8, 0.4, 0.05), 2).verdict == Verdict::finite_always);
    CHECK(percolation_verdict(uniform_measure(0.0, 0.4), 2).verdict == Verdict::finite_always);
}

TEST_CASE("delta scan: exponents agree on two critical measures") {
    const MixtureFamily mixed{gap_measure(2, 0.8, 0.3, 0.05), uniform_measure(0.0, 1.0), 2};
    const Measure tuned = mixed.at(find_critical_alpha(mixed, 1e-10, 2048));
    const Measure critical_gap = gap_measure(2, 0.8, 0.5, 0.05);
    DeltaOptions o;
    o.samples = 50'000;
    o.n_lo = 30;
    o.n_hi = 3000;
    o.fit_points = 15;
    o.nodes = 1024;

    // tail points share samples, so the error bar comes from independent replicates
    auto replicate = [&](const Measure& m) {
        std::vector<double> e;
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            o.seed = seed;
            e.push_back(delta_scan(m, 2, 1.0, o).fit.exponent);
        }
        double mean = 0.0;
        for (double x : e) mean += x / 4;
        double var = 0.0;
        for (double x : e) var += (x - mean) * (x - mean) / 3;
        return std::pair{mean, std::sqrt(var / 4)};
    };
    const auto [eg, sg] = replicate(critical_gap);
    const auto [em, sm] = replicate(tuned);
    MESSAGE("gap " << eg << " +- " << sg << ", mixed " << em << " +- " << sm);
    CHECK(std::abs(eg - em) <= 4 * std::hypot(sg, sm));

    o.seed = 1;
    CHECK(delta_scan(critical_gap, 2, 1.0, o).fit_ratio.has_value());
    CHECK_FALSE(delta_scan(tuned, 2, 1.0, o).fit_ratio.has_value());
    CHECK_THROWS_AS(delta_scan(gap_measure(2, 0.8, 0.45, 0.05), 2, 1.0, o), ValidationError);
}

TEST_CASE("chi divergence and deep survival switch on at the same alpha") {
    const MixtureFamily fam = gap_family();
    const double a_star = find_critical_alpha(fam, 1e-10, 1024);
    double first_infinite = -1.0;
    double first_survival = -1.0;
    for (int k = 47; k <= 53; ++k) {
        const double a = 0.01 * k;
        const Measure m = fam.at(a);
        if (first_infinite < 0 && chi_quadrature(m, 2, 1.0, 1e-12, 1024).infinite) first_infinite = a;
        if (first_survival < 0 && mc_survival(m, 2, 1.0, 100'000, 1000, 1, 0).p > 0.0) first_survival = a;
    }
    CHECK(std::abs(first_infinite - a_star) <= 0.01 + 1e-12);
    CHECK(std::abs(first_survival - a_star) <= 0.01 + 1e-12);
}
