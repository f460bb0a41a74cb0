#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crit/measures.hpp"

namespace crit {

/// Galton-Watson tree with binomial(b, p) offspring.
struct GWSpec {
    int b = 2;
    double p = 0.5;
};

/// P(N >= n) for n = 1..n_max, N the total progeny of a tree whose root is
/// present. Uses P(N = n) = P(Bin(b n, p) = n - 1) / n in log space; the tail
/// is 1 minus the compensated prefix sum (so it includes P(N = inf)).
std::vector<double> otter_dwass_tail(const GWSpec& spec, int n_max);

/// P(N = n) for n = 1..n_max.
std::vector<double> otter_dwass_pmf(const GWSpec& spec, int n_max);

/// Leading constant a in P(N >= n) ~ a n^{-1/2} at criticality (b p = 1).
double otter_dwass_amplitude(const GWSpec& spec);

/// Survival probability: the largest root of s = 1 - (1 - p s)^b, by bisection.
double gw_survival(const GWSpec& spec, double tol);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Fraction of sampled paths Q_0 = theta, Q_k = X_k + Q_{k-1}/b with Q_k >= 1
/// for k = 0..n. Returns the estimate for every k = 0..n. Sampling is by
/// rejection from the density with std::mt19937_64, in fixed chunks.
std::vector<Estimate> mc_z_profile(const Measure& measure, int b, double theta, int n, std::int64_t samples,
                                   std::uint64_t seed, int workers = 0);
Estimate mc_z(const Measure& measure, int b, double theta, int n, std::int64_t samples, std::uint64_t seed,
              int workers = 0);

/// When rho has no mass in [1 - T/b, (b-1)/b) with T = max(theta_b, x_star + v),
/// every site whose parent toppled opens iff its energy is >= (b-1)/b, so the
/// avalanche is a Galton-Watson cluster. Returns the offspring law and the
/// probability that the root topples.
struct Reduction {
    GWSpec spec;
    double root = 0.0;
};
std::optional<Reduction> percolation_reduction(const Measure& measure, int b, double v);

}  // namespace crit
