#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crit/measures.hpp"

namespace crit {

/// rho_alpha = mix(rho0, rho1, alpha).
struct MixtureFamily {
    Measure rho0;
    Measure rho1;
    int b = 2;

    [[nodiscard]] Measure at(double alpha) const { return mix(rho0, rho1, alpha); }
};

/// y ~ amplitude * x^exponent by ordinary least squares on (log x, log y)
/// over the points with x in [window_lo, window_hi].
struct ScalingFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double stderr_exponent = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double r2 = 0.0;
    int points = 0;
};

/// Needs at least 3 points with positive x and y inside the window.
ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double window_lo,
                         double window_hi);

/// Bisection on alpha until |z(rho_alpha) - 1/b| < tol.
double find_critical_alpha(const MixtureFamily& family, double tol, std::size_t nodes = 4096);

struct GammaPoint {
    double alpha = 0.0;
    double z = 0.0;
    double chi = 0.0;
    double product = 0.0;  // chi * (1/b - z)
};

struct GammaScan {
    ScalingFit fit;
    double tau_empirical = 0.0;
    double tau_formula = 0.0;
    double alpha_critical = 0.0;
    std::vector<GammaPoint> points;
};

/// chi_quadrature along subcritical family members against 1/b - z.
GammaScan gamma_scan(const MixtureFamily& family, double v, const std::vector<double>& alphas,
                     std::size_t nodes = 4096, double crit_tol = 1e-10);

struct TailPoint {
    std::int64_t n = 0;
    double p = 0.0;
    double std_error = 0.0;
};

struct DeltaScan {
    ScalingFit fit;
    double z = 0.0;
    double theta_formula = 0.0;
    std::optional<double> oracle_amplitude;   // exact Otter-Dwass tail fitted on the same points
    std::optional<double> oracle_exponent;
    std::optional<double> oracle_asymptotic;  // r sqrt(2 / (pi sigma^2))
    std::optional<double> fit_ratio;          // fitted amplitude / oracle_amplitude
    std::optional<double> formula_ratio;      // theta_formula / oracle_asymptotic
    std::vector<TailPoint> points;
    std::int64_t truncated = 0;
};

struct DeltaOptions {
    std::int64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 0;
    int depth_cap = 10000;
    double n_lo = 100;
    double n_hi = 10000;
    int fit_points = 21;  // log-spaced sizes in [n_lo, n_hi]
    double crit_tol = 1e-4;
    std::size_t nodes = 4096;
};

/// Tail of |A| for a critical measure, fitted over [n_lo, n_hi].
DeltaScan delta_scan(const Measure& measure, int b, double v, const DeltaOptions& opt);

struct BetaPoint {
    double alpha = 0.0;
    double z = 0.0;
    double survival = 0.0;
    double std_error = 0.0;
    std::optional<double> oracle;  // gw_survival * root probability when the family member reduces
};

struct BetaScan {
    ScalingFit fit;
    double tee_formula = 0.0;
    std::optional<ScalingFit> oracle_fit;  // exact survival on the same z values
    std::optional<double> oracle_slope;    // d survival / d z at criticality, 2 b^2/(b-1) times root probability
    std::vector<BetaPoint> points;
};

struct BetaOptions {
    int depth_proxy = 1000;
    std::int64_t samples = 100000;
    std::uint64_t seed = 1;
    int workers = 0;
    std::size_t nodes = 4096;
    double crit_tol = 1e-10;
};

/// Survival to depth_proxy along supercritical family members against z - 1/b.
BetaScan beta_scan(const MixtureFamily& family, double v, const std::vector<double>& alphas, const BetaOptions& opt);

struct Amplitudes {
    double tau = 0.0;
    double theta = 0.0;
    double tee = 0.0;
    double c = 0.0;
    double mean_psi = 0.0;  // E psi(X + v)
    double z = 0.0;
    bool critical = false;  // |z - 1/b| < 1e-4
};

Amplitudes amplitudes(const Measure& measure, int b, double v, std::size_t nodes = 4096);

/// E psi(X + v) by exact quadrature against the density.
double mean_psi(const Measure& measure, int b, double v, std::size_t nodes = 4096);

enum class Verdict { infinite_for_large_v, finite_always, inconclusive, marginal };
const char* to_string(Verdict v);

struct PercolationVerdict {
    Verdict verdict = Verdict::inconclusive;
    double theta_b = 0.0;
    double mass_open = 0.0;    // rho([(b-1)/b, 1])
    double mass_window = 0.0;  // rho([1 - theta_b/b, 1])
};

PercolationVerdict percolation_verdict(const Measure& measure, int b);

}  // namespace crit
