#include <cmath>
#include <vector>

#include "crit/errors.hpp"
#include "crit/fixedpoint.hpp"
#include "crit/measures.hpp"
#include "crit/survival.hpp"
#include "doctest.h"

using namespace crit;

namespace {
const double kSqrt8 = std::sqrt(8.0);
}

TEST_CASE("phi_b") {
    CHECK(phi_b(0.0, 3) == 0.0);
    CHECK(phi_b(1.0, 3) == 1.0);
    CHECK(phi_b(0.5, 2) == 0.75);
    CHECK_THROWS_AS(phi_b(1.5, 2), ValidationError);
}

TEST_CASE("Psi_1 is the tail of rho on every node") {
    const Measure u = uniform_measure(0.0, 1.0);
    const PsiSequence s = psi_sequence(u, 2, 0.0, 1001, 1, 1e-6);
    const GridFunction& p1 = s.iterates[1];
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const double t = p1.node(i);
        CHECK(p1.values()[i] == doctest::Approx(u.mass(std::max(0.0, 1.0 - t), 1.0)).epsilon(1e-14));
    }
    CHECK(p1(0.3) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("Psi verdicts on gap measures") {
    const PsiSequence sub = psi_sequence(gap_measure(2, 0.8, 0.4, 0.05), 2, 0.0, 1024, 200, 1e-6);
    CHECK(sub.verdict == PsiVerdict::vanishes);

    const PsiSequence sup = psi_sequence(gap_measure(2, 0.8, 0.6, 0.05), 2, 0.0, 2048, 200, 1e-6);
    REQUIRE(sup.verdict == PsiVerdict::persists);
    REQUIRE(sup.threshold.has_value());
    CHECK(std::abs(*sup.threshold - 0.2) <= sup.iterates.back().spacing());
    CHECK(psi_residual(gap_measure(2, 0.8, 0.6, 0.05), 2, sup.iterates.back()) < 1e-9);
}

TEST_CASE("property: Psi iterates are distribution functions decreasing in n") {
    for (const Measure& m : {uniform_measure(0.0, 1.0), gap_measure(2, 0.8, 0.6, 0.05)}) {
        const PsiSequence s = psi_sequence(m, 2, 0.0, 512, 60, 1e-6);
        for (std::size_t n = 0; n < s.iterates.size(); ++n) {
            const auto v = s.iterates[n].values();
            for (std::size_t i = 0; i < v.size(); ++i) {
                CHECK(v[i] >= 0.0);
                CHECK(v[i] <= 1.0);
                if (i > 0) CHECK(v[i] >= v[i - 1] - 1e-14);
                if (n > 0) CHECK(v[i] <= s.iterates[n - 1].values()[i] + 1e-14);
            }
        }
    }
}

TEST_CASE("Q_infinity on a gap measure") {
    const Measure g = gap_measure(2, 0.8, 0.4, 0.05);
    const QLaw q = q_infinity(g, 2, 1024, 1e-12, 10000);
    CHECK(q.density.integral() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(q.z_hat - 0.4) < 1e-6);
    CHECK(q.density.hi() == doctest::Approx(1.6).epsilon(1e-14));
    CHECK(q.residual < 1e-10);
}

TEST_CASE("property: Q_infinity agrees with z_of_rho, forgets theta, has no atom at 1") {
    for (const Measure& m : {uniform_measure(0.0, 1.0), mix(uniform_measure(0.0, 1.0), gap_measure(2, 0.8, 0.4, 0.05), 0.5)}) {
        const QLaw a = q_infinity(m, 2, 2048, 1e-12, 10000, 1.0);
        const QLaw c = q_infinity(m, 2, 2048, 1e-12, 10000, summary(m, 2).theta_b);
        const double z = z_of_rho(m, 2, 1e-12, 2048).z;
        CHECK(std::abs(a.z_hat - z) < 1e-5);
        CHECK(sup_distance(a.density, c.density) < 1e-9);
        const double h = a.density.spacing();
        CHECK(a.density.integral(1.0 - h, 1.0 + h) < 2 * h * summary(m, 2).density_sup * 2);
    }
}

TEST_CASE("B_infinity basics") {
    const Measure u = uniform_measure(0.0, 1.0);
    const StepProfile one = b_infinity(u, 2, 1.0, 0.0, 256, 1e-12);
    for (double v : one.above.values()) CHECK(v == 1.0);
    const StepProfile b = b_infinity(u, 2, 0.3, 0.0, 256, 1e-12);
    CHECK(b(0.5) == 0.3);
    const StepProfile b2 = b_infinity(u, 2, 0.4, 0.0, 256, 1e-12);
    const auto v = b.above.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(v[i] >= 0.3);
        if (i > 0) CHECK(v[i] >= v[i - 1] - 1e-14);
        CHECK(b2.above.values()[i] >= v[i]);
    }
}

TEST_CASE("critical gap: external-field constants") {
    const Measure g = gap_measure(2, 0.8, 0.5, 0.05);
    const double lambda = 1e-6;
    const std::size_t nodes = 512;
    const StepProfile B = b_infinity(g, 2, lambda, 0.0, nodes, 1e-14);
    CHECK(B(1.0) / std::sqrt(lambda) == doctest::Approx(kSqrt8).epsilon(0.02));

    const QLaw q = q_infinity(g, 2, nodes, 1e-12, 10000);
    const KappaBstar kb = kappa_and_bstar(g, 2, lambda, q, B);
    CHECK(0.5 * kb.kappa / lambda == doctest::Approx(1.0).epsilon(0.02));
    CHECK(kb.kappa <= B.above.sup_abs() * B.above.sup_abs());

    const StepProfile ps = psi(g, 2, 0.0, nodes);
    const CRho c = c_rho(g, 2, q, ps);
    CHECK(c.critical);
    CHECK(std::abs(c.c - kSqrt8) < 1e-6);
    CHECK(B(1.0) / (std::sqrt(lambda) * ps(1.0)) == doctest::Approx(c.c).epsilon(0.03));

    StepProfile doubled = ps;
    for (double& v : doubled.above.mutable_values()) v *= 2.0;
    CHECK(c_rho(g, 2, q, doubled).c == doctest::Approx(c.c / 2).epsilon(1e-12));

    const StepProfile coarse = b_infinity(g, 2, lambda, 0.0, 256, 1e-10);
    CHECK_THROWS_AS(kappa_and_bstar(g, 2, lambda, q, coarse), ValidationError);
}

TEST_CASE("lambda = 0 below criticality") {
    const Measure g = gap_measure(2, 0.8, 0.4, 0.05);
    const StepProfile B = b_infinity(g, 2, 0.0, 0.0, 256, 1e-12);
    const QLaw q = q_infinity(g, 2, 256, 1e-12, 10000);
    const KappaBstar kb = kappa_and_bstar(g, 2, 0.0, q, B);
    CHECK(kb.kappa == 0.0);
    CHECK(kb.b_star == 0.0);
}

TEST_CASE("mutation: an off-by-one Phi_b is caught") {
    const PhiFn bad = [](double y, int b) { return 1.0 - std::pow(1.0 - y, b + 1); };
    const Measure g = gap_measure(2, 0.8, 0.5, 0.05);
    const StepProfile B = b_infinity(g, 2, 1e-6, 0.0, 256, 1e-14, 1'000'000, bad);
    CHECK(std::abs(B(1.0) / 1e-3 - kSqrt8) > 0.02 * kSqrt8);
    const PsiSequence good = psi_sequence(uniform_measure(0.0, 1.0), 2, 0.0, 256, 4, 1e-6);
    const PsiSequence wrong = psi_sequence(uniform_measure(0.0, 1.0), 2, 0.0, 256, 4, 1e-6, 1e-10, bad);
    CHECK(sup_distance(good.iterates[4], wrong.iterates[4]) > 0.01);
}
