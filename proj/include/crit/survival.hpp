#pragma once

#include <cstddef>
#include <vector>

#include "crit/measures.hpp"
#include "crit/piecewise.hpp"

namespace crit {

/// Sub-probability density of Q_n on the event that the path survived n steps.
struct SurvivalDensity {
    double theta = 0.0;
    int n = 0;
    GridFunction density;  // on [1, max(theta_b, theta)]
    double mass = 0.0;     // Z_n(theta)
};

struct PropagateResult {
    std::vector<double> Z;  // Z[0..n]
    SurvivalDensity final;
};

/// Forward recursion of the survival density started from the point mass at
/// theta. The first step is exact; later steps convolve the grid interpolant
/// with the density exactly and resample. Z[k] is the exact mass that step k
/// leaves above 1. theta_max = 0 means max(theta_b, theta).
PropagateResult propagate(const Measure& measure, int b, double theta, int n, std::size_t nodes,
                          double theta_max = 0.0);

/// Z_n(theta) on a theta grid over [1, theta_max], by the backward recursion
///   Z_{n+1}(theta) = 1{theta >= 1} * integral Z_n(x + theta/b) rho(dx).
/// Values are kept as exp(log_scale) * profile with max(profile) = 1 so that
/// long runs do not underflow. Requires theta_max >= theta_b.
class ThetaProfile {
public:
    ThetaProfile(const Measure& measure, int b, double theta_max, std::size_t nodes);

    void step();
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] bool dead() const { return dead_; }
    [[nodiscard]] double log_scale() const { return log_scale_; }
    [[nodiscard]] const GridFunction& profile() const { return profile_; }
    [[nodiscard]] const PiecewiseLinear& profile_piecewise() const { return piecewise_; }
    /// Z_n(theta); 0 below 1. theta must not exceed theta_max.
    [[nodiscard]] double value(double theta) const;
    /// log Z_n(theta), -inf when zero.
    [[nodiscard]] double log_value(double theta) const;

private:
    const Measure* measure_;
    int b_;
    int n_ = 0;
    bool dead_ = false;
    double log_scale_ = 0.0;
    GridFunction profile_;
    PiecewiseLinear piecewise_;
};

struct ZetaRow {
    int n = 0;
    double Z_theta1 = 0.0;
    double Z_thetab = 0.0;
    double ratio1 = 0.0;
    double ratio2 = 0.0;
};

struct ZetaResult {
    double z = 0.0;
    double half_width = 0.0;  // max of |ratio1 - ratio2| / 2 and the last Cauchy steps
    double bracket_lo = 0.0;  // Z_n(1)^{1/n}
    double bracket_hi = 0.0;  // Z_n(theta_b)^{1/n}
    int iterations = 0;
    std::vector<ZetaRow> rows;
};

/// z(rho) from consecutive ratios Z_{n+1}/Z_n at theta = 1 and theta = theta_b.
/// Returns z = 0 at once when rho puts no mass on [1 - 1/b, 1]. Throws
/// ConvergenceError (with the bracket in the message) after iter_cap steps.
ZetaResult z_of_rho(const Measure& measure, int b, double tol, std::size_t nodes = 4096, int iter_cap = 20000);

/// psi(theta) = lim Z_n(theta) / z^n on [1, theta_hi] (0 below 1). The product
/// stops once every factor is within 1e-12 of 1, or after 500 factors.
/// theta_hi = 0 means theta_b.
StepProfile psi(const Measure& measure, int b, double theta_hi = 0.0, std::size_t nodes = 4096);

struct ChiResult {
    double value = 0.0;  // +inf when b z >= 1
    bool infinite = false;
    double z = 0.0;
    int terms = 0;
};

/// Expected avalanche size sum_n b^n integral Z_n(x + v) rho(dx).
ChiResult chi_quadrature(const Measure& measure, int b, double v, double tol, std::size_t nodes = 4096);

struct ConditionedDensity {
    GridFunction density;  // mass 1
    bool degenerate = false;  // n = 0: the point mass at theta as a one-node spike
};

/// Law of Q_n given survival of n steps, started at theta.
ConditionedDensity conditioned_density(const Measure& measure, int b, double theta, int n, std::size_t nodes = 4096);

/// Density of X + Q/b with X ~ rho and Q ~ density (no conditioning), on
/// [inf supp + lo/b, sup supp + hi/b].
GridFunction unconditioned_step(const Measure& measure, int b, const GridFunction& density);

}  // namespace crit
