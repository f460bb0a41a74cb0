#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace crit {

/// A linear segment f(x) = y0 + (y1 - y0) (x - x0) / (x1 - x0) on [x0, x1].
struct Piece {
    double x0 = 0.0;
    double x1 = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;

    [[nodiscard]] double width() const { return x1 - x0; }
    [[nodiscard]] double slope() const { return (y1 - y0) / (x1 - x0); }
    [[nodiscard]] double at(double x) const { return y0 + slope() * (x - x0); }
};

/// Piecewise-linear function with sorted, non-overlapping pieces; zero off
/// the pieces. Jumps are allowed at shared breakpoints.
///
/// Cumulative zeroth and first moments are precomputed so that
/// integral(a, c) and first_moment(a, c) are exact and cost O(log pieces).
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    explicit PiecewiseLinear(std::vector<Piece> pieces);

    [[nodiscard]] std::span<const Piece> pieces() const { return pieces_; }
    [[nodiscard]] bool empty() const { return pieces_.empty(); }
    [[nodiscard]] double lo() const;
    [[nodiscard]] double hi() const;

    /// Value at x; at a breakpoint shared by two pieces the right piece wins.
    [[nodiscard]] double operator()(double x) const;

    /// Exact integral of f over [a, c] (a <= c).
    [[nodiscard]] double integral(double a, double c) const;
    /// Exact integral of x f(x) over [a, c] (a <= c).
    [[nodiscard]] double first_moment(double a, double c) const;
    [[nodiscard]] double total() const { return cum0_.empty() ? 0.0 : cum0_.back(); }
    [[nodiscard]] double sup_abs() const;

    /// Breakpoints (all piece endpoints, sorted, deduplicated).
    [[nodiscard]] std::vector<double> breakpoints() const;

private:
    // index of the last piece with x0 <= x, or npos
    [[nodiscard]] std::size_t locate(double x) const;
    [[nodiscard]] double cumulative0(double x) const;
    [[nodiscard]] double cumulative1(double x) const;

    std::vector<Piece> pieces_;
    std::vector<double> cum0_;
    std::vector<double> cum1_;
    double uniform_step_ = 0.0;
    std::size_t uniform_from_ = 0;
};

/// Real function sampled at uniformly spaced nodes on [lo, hi]; evaluation
/// interpolates linearly and is an error outside the interval.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(double lo, double hi, std::vector<double> values);
    /// Nodes on [lo, hi], values from f(node).
    template <class F>
    static GridFunction sample(double lo, double hi, std::size_t nodes, F&& f) {
        std::vector<double> v(nodes);
        GridFunction g(lo, hi, std::vector<double>(nodes, 0.0));
        for (std::size_t i = 0; i < nodes; ++i) v[i] = f(g.node(i));
        g.values_ = std::move(v);
        return g;
    }

    [[nodiscard]] double lo() const { return lo_; }
    [[nodiscard]] double hi() const { return hi_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] double spacing() const { return (hi_ - lo_) / static_cast<double>(values_.size() - 1); }
    [[nodiscard]] double node(std::size_t i) const;
    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::vector<double>& mutable_values() { return values_; }
    [[nodiscard]] bool contains(double x) const;

    [[nodiscard]] double operator()(double x) const;
    /// Exact integral of the interpolant over [a, c] within [lo, hi].
    [[nodiscard]] double integral(double a, double c) const;
    [[nodiscard]] double integral() const { return integral(lo_, hi_); }
    [[nodiscard]] double sup_abs() const;

    [[nodiscard]] PiecewiseLinear to_piecewise() const;

private:
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<double> values_;
};

/// Constant `below` on (-inf, cut), grid interpolant on [cut, above.hi()].
/// Shape of psi (0 below 1) and of B(., lambda) (lambda below 1).
struct StepProfile {
    double below = 0.0;
    double cut = 1.0;
    GridFunction above;

    [[nodiscard]] double operator()(double x) const { return x < cut ? below : above(x); }
    /// Piecewise form starting at `from` (< cut); the constant part becomes one piece.
    [[nodiscard]] PiecewiseLinear as_piecewise(double from) const;
};

/// Largest absolute nodal difference; grids must share domain and node count.
double sup_distance(const GridFunction& a, const GridFunction& b);

/// Integral of F(k x + s) w(x) over x in [x_lo, +inf), where w is a
/// piecewise-linear weight (typically a density). Exact for piecewise-linear F.
double correlate(const PiecewiseLinear& F, const PiecewiseLinear& w, double k, double s,
                 double x_lo = -std::numeric_limits<double>::infinity());

/// Integral of f(q) w(t - q / b) over q, i.e. the density of X + Q/b at t when
/// X ~ w and Q ~ f. Exact for piecewise-linear f and w.
double convolve_at(const PiecewiseLinear& f, const PiecewiseLinear& w, double b, double t);

/// Integral of f(q) * W(q) dq where W(q) = integral of w over [c - q / b, +inf).
/// This is the mass that X + Q/b puts on [c, +inf). Exact (Gauss-Legendre on
/// the common refinement).
double tail_transfer(const PiecewiseLinear& f, const PiecewiseLinear& w, double b, double c);

}  // namespace crit
