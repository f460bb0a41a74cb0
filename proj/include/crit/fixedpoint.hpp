#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "crit/measures.hpp"
#include "crit/piecewise.hpp"

namespace crit {

/// 1 - (1 - y)^b: probability that at least one of b independent events of
/// probability y occurs.
double phi_b(double y, int b);

/// Replaceable Phi_b, for mutation tests of the solvers below.
using PhiFn = std::function<double(double, int)>;

enum class PsiVerdict { vanishes, persists, undecided };
const char* to_string(PsiVerdict v);

struct PsiSequence {
    std::vector<GridFunction> iterates;  // Psi_0, Psi_1, ... on [0, theta_max]
    PsiVerdict verdict = PsiVerdict::undecided;
    std::optional<double> threshold;     // inf{theta : Psi(theta) > eps} when persists
    double last_change = 0.0;
};

/// Distribution functions of V_n on a grid over [0, theta_max]:
///   Psi_{n+1}(t) = integral Phi_b(Psi_n((x + t)/b)) 1{x >= 1 - t} rho(dx).
/// Stops as "vanishes" once sup Psi_n < eps, as "persists" once the sup-norm
/// change drops below stable_tol while sup Psi_n >= eps. theta_max = 0 means
/// theta_b + 1.
PsiSequence psi_sequence(const Measure& measure, int b, double theta_max, std::size_t nodes, int n_max,
                         double eps, double stable_tol = 1e-10, const PhiFn& phi = phi_b);

/// Sup-norm residual of Psi = R(Psi) for one application of the recursion.
double psi_residual(const Measure& measure, int b, const GridFunction& psi, const PhiFn& phi = phi_b);

struct QLaw {
    GridFunction density;  // on [q_min, theta_b]; 1 and theta_b are nodes
    double z_hat = 0.0;    // exact mass that X + Q/b puts above 1
    double residual = 0.0; // sup |h - T(h)| at the returned density
    int iterations = 0;
};

/// Stationary law of the conditioned shift: fixed point of
///   T(h)(w) = integral_{q >= 1} h(q) phi(w - q/b) dq / integral_{q >= 1} h,
/// renormalised to unit mass on the grid. Starts from the survival density
/// after 8 steps from init_theta pushed one unconditioned step.
QLaw q_infinity(const Measure& measure, int b, std::size_t nodes, double tol, int iter_cap, double init_theta = 1.0);

/// Fixed point of B = lambda + (1 - lambda) 1{theta >= 1} Phi_b(E B(X + theta/b))
/// by monotone iteration from B = lambda. Equal to lambda below 1.
/// theta_max = 0 means theta_b.
StepProfile b_infinity(const Measure& measure, int b, double lambda, double theta_max, std::size_t nodes, double tol,
                       int iter_cap = 1'000'000, const PhiFn& phi = phi_b);

struct KappaBstar {
    double kappa = 0.0;
    double b_star = 0.0;
};

/// kappa = E^[(E B(X + Q/b))^2 | Q >= 1]; b_star = E^ B(Q). Grids must have the
/// same node count.
KappaBstar kappa_and_bstar(const Measure& measure, int b, double lambda, const QLaw& qlaw, const StepProfile& binf);

struct CRho {
    double c = 0.0;
    bool critical = false;  // z_hat within 1e-6 of 1/b
};

/// c with 1/c^2 = ((b-1)/2) E^[(integral psi(x + Q/b) rho(dx))^2 | Q >= 1].
CRho c_rho(const Measure& measure, int b, const QLaw& qlaw, const StepProfile& psi);

}  // namespace crit
