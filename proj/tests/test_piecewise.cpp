#include <cmath>
#include <stdexcept>

#include "crit/piecewise.hpp"
#include "doctest.h"

using namespace crit;

namespace {

// midpoint rule with many cells, independent of the exact moment code
template <class F>
double brute(F&& f, double a, double c, int cells = 200000) {
    const double h = (c - a) / cells;
    double s = 0.0;
    for (int i = 0; i < cells; ++i) s += f(a + (i + 0.5) * h);
    return s * h;
}

PiecewiseLinear tent() { return PiecewiseLinear({{0.0, 0.5, 0.0, 2.0}, {0.5, 1.0, 2.0, 0.0}}); }

}  // namespace

TEST_CASE("integral and first moment of a tent") {
    const PiecewiseLinear f = tent();
    CHECK(f.total() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.integral(0.0, 0.25) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(f.first_moment(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f.integral(-3.0, 5.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.integral(0.7, 0.2) == 0.0);
}

TEST_CASE("value at a shared breakpoint takes the right piece") {
    const PiecewiseLinear f({{0.0, 1.0, 1.0, 1.0}, {1.0, 2.0, 3.0, 3.0}});
    CHECK(f(1.0) == 3.0);
    CHECK(f(2.0) == 3.0);
    CHECK(f(2.5) == 0.0);
    CHECK(f(-0.1) == 0.0);
}

TEST_CASE("overlapping pieces are rejected") {
    CHECK_THROWS_AS(PiecewiseLinear({{0.0, 1.0, 1.0, 1.0}, {0.5, 2.0, 1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({{1.0, 1.0, 1.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("uniform grid lookup agrees with the interpolant") {
    const GridFunction g = GridFunction::sample(1.0, 2.6, 1001, [](double x) { return std::sin(3 * x); });
    const PiecewiseLinear f = g.to_piecewise();
    for (double x = 1.0; x <= 2.6; x += 0.0123) CHECK(f(x) == doctest::Approx(g(x)).epsilon(1e-12));
    CHECK(f.integral(1.3, 2.2) == doctest::Approx(brute([&](double x) { return g(x); }, 1.3, 2.2)).epsilon(1e-8));

    // a leading piece of another width keeps lookups right
    const StepProfile sp{0.25, 1.0, g};
    const PiecewiseLinear h = sp.as_piecewise(0.0);
    CHECK(h(0.5) == 0.25);
    for (double x = 1.0; x <= 2.6; x += 0.0371) CHECK(h(x) == doctest::Approx(g(x)).epsilon(1e-12));
}

TEST_CASE("grid evaluation outside the domain is an error") {
    const GridFunction g(0.0, 1.0, {0.0, 1.0});
    CHECK(g(0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)g(1.5), std::out_of_range);
    CHECK_THROWS_AS((void)g(-0.1), std::out_of_range);
    CHECK_THROWS_AS(GridFunction(1.0, 1.0, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("correlate matches brute-force quadrature") {
    const PiecewiseLinear F({{0.0, 1.0, 0.5, 1.5}, {1.0, 3.0, 2.0, 0.0}});
    const PiecewiseLinear w = tent();
    for (double s : {-0.3, 0.1, 0.8}) {
        for (double k : {1.0, 0.5, 1.0 / 3.0}) {
            const double exact = correlate(F, w, k, s, 0.2);
            const double ref = brute([&](double x) { return F(k * x + s) * w(x); }, 0.2, 1.0);
            CHECK(exact == doctest::Approx(ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("convolve_at and tail_transfer match brute force") {
    const PiecewiseLinear f({{1.0, 1.6, 1.0, 0.6667}});
    const PiecewiseLinear w = tent();
    const double b = 2.0;
    for (double t : {0.6, 1.0, 1.2, 1.5}) {
        const double ref = brute([&](double q) { return f(q) * w(t - q / b); }, 1.0, 1.6);
        CHECK(convolve_at(f, w, b, t) == doctest::Approx(ref).epsilon(1e-8));
    }
    const double tail = tail_transfer(f, w, b, 1.0);
    const double ref = brute([&](double q) { return f(q) * w.integral(1.0 - q / b, 2.0); }, 1.0, 1.6, 20000);
    CHECK(tail == doctest::Approx(ref).epsilon(1e-8));
}
