#pragma once

#include <span>
#include <vector>

#include "crit/piecewise.hpp"

namespace crit {

struct Atom {
    double x = 0.0;
    double mass = 0.0;
};

/// Probability measure on [0,1]: a piecewise-linear density plus point masses.
/// Immutable after construction.
class Measure {
public:
    /// Validates bounds, non-negativity and total mass (1 within 1e-12).
    Measure(std::vector<Piece> pieces, std::vector<Atom> atoms = {});

    [[nodiscard]] const PiecewiseLinear& density() const { return density_; }
    [[nodiscard]] std::span<const Atom> atoms() const { return atoms_; }
    [[nodiscard]] bool has_atoms() const { return !atoms_.empty(); }
    /// Sup of the density; +inf when atoms are present.
    [[nodiscard]] double density_sup() const;
    /// Infimum / supremum of the support. Zero-density pieces do not count.
    [[nodiscard]] double support_lo() const;
    [[nodiscard]] double support_hi() const;

    /// Measure of the interval between a and c with explicit endpoint inclusion.
    [[nodiscard]] double mass(double a, double c, bool include_left = true, bool include_right = true) const;

    /// Generalized inverse CDF, inf{x : F(x) > u}, for u in [0,1).
    [[nodiscard]] double sample(double u) const;

private:
    struct Segment {
        double cum_after = 0.0;  // CDF just after this segment
        double mass = 0.0;
        int piece = -1;          // index into density pieces, or -1 for an atom
        double atom_x = 0.0;
    };

    PiecewiseLinear density_;
    std::vector<Atom> atoms_;
    std::vector<Segment> segments_;
};

struct MeasureSummary {
    double x_star = 0.0;
    double theta_b = 0.0;
    double density_sup = 0.0;
    bool mflat = false;
    double mass_top = 0.0;  // mass of [1 - 1/b, 1]
    /// x_star == 1 - 1/b, i.e. theta_b == 1; excluded from all downstream analysis.
    bool marginal = false;
};

Measure uniform_measure(double lo, double hi);

/// Uniform mass p on [(b-1)/b, x_star] and 1-p on [0, low_cap], leaving the
/// window [1 - theta_b/b, (b-1)/b) empty. On such measures the avalanche is an
/// independent site-percolation cluster.
Measure gap_measure(int b, double x_star, double p, double low_cap);

/// (1 - alpha) rho0 + alpha rho1.
Measure mix(const Measure& rho0, const Measure& rho1, double alpha);

MeasureSummary summary(const Measure& measure, int b);

/// Throws NotFlatError unless the measure is in the bounded-density class for
/// this b and is not marginal.
void require_flat(const Measure& measure, int b, const char* operation);

}  // namespace crit
