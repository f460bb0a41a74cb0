#include "crit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crit/errors.hpp"
#include "crit/parallel.hpp"

namespace crit {

namespace {

double log_binom_pmf(std::int64_t n, std::int64_t k, double p) {
    if (k < 0 || k > n) return -INFINITY;
    if (p == 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p == 1.0) return k == n ? 0.0 : -INFINITY;
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    return std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) + kd * std::log(p) +
           (nd - kd) * std::log1p(-p);
}

void check_spec(const GWSpec& s) {
    if (s.b < 1) throw ValidationError("GWSpec: require b >= 1");
    if (!(s.p >= 0.0 && s.p <= 1.0)) throw ValidationError("GWSpec: require 0 <= p <= 1");
}

}  // namespace

std::vector<double> otter_dwass_pmf(const GWSpec& spec, int n_max) {
    check_spec(spec);
    if (n_max < 1 || n_max > 100000) throw ValidationError("otter_dwass: require 1 <= n_max <= 100000");
    std::vector<double> pmf(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        pmf[static_cast<std::size_t>(n - 1)] =
            std::exp(log_binom_pmf(static_cast<std::int64_t>(spec.b) * n, n - 1, spec.p)) / n;
    }
    return pmf;
}

std::vector<double> otter_dwass_tail(const GWSpec& spec, int n_max) {
    const std::vector<double> pmf = otter_dwass_pmf(spec, n_max);
    std::vector<double> tail(pmf.size());
    double sum = 0.0;
    double comp = 0.0;  // Kahan compensation
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        tail[i] = std::max(0.0, 1.0 - sum);
        const double y = pmf[i] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return tail;
}

double otter_dwass_amplitude(const GWSpec& spec) {
    check_spec(spec);
    const double var = spec.b * spec.p * (1.0 - spec.p);
    return std::sqrt(2.0 / (M_PI * var));
}

double gw_survival(const GWSpec& spec, double tol) {
    check_spec(spec);
    if (spec.b * spec.p <= 1.0) return 0.0;
    // f(s) = 1 - (1 - p s)^b - s is positive on (0, s*) and non-positive on [s*, 1]
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double f = 1.0 - std::pow(1.0 - spec.p * mid, spec.b) - mid;
        (f > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<Estimate> mc_z_profile(const Measure& measure, int b, double theta, int n, std::int64_t samples,
                                   std::uint64_t seed, int workers) {
    if (measure.has_atoms()) throw NotFlatError("mc_z: rejection sampling needs a bounded density");
    if (b < 2 || n < 0 || samples < 1) throw ValidationError("mc_z: require b >= 2, n >= 0, samples >= 1");
    const double lo = measure.support_lo();
    const double hi = measure.support_hi();
    const double top = measure.density_sup();
    const PiecewiseLinear& phi = measure.density();

    constexpr std::int64_t kChunk = 100000;
    const std::int64_t chunks = (samples + kChunk - 1) / kChunk;
    std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(chunks));
    parallel_for(chunks, workers, [&](std::int64_t c) {
        std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
        std::mt19937_64 gen(sq);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        auto draw = [&] {
            for (;;) {
                const double x = lo + (hi - lo) * U(gen);
                if (U(gen) * top < phi(x)) return x;
            }
        };
        std::vector<std::int64_t>& cnt = counts[static_cast<std::size_t>(c)];
        cnt.assign(static_cast<std::size_t>(n) + 1, 0);
        const std::int64_t m = std::min(kChunk, samples - c * kChunk);
        for (std::int64_t s = 0; s < m; ++s) {
            double q = theta;
            if (q < 1.0) continue;
            ++cnt[0];
            for (int k = 1; k <= n; ++k) {
                q = draw() + q / b;
                if (q < 1.0) break;
                ++cnt[static_cast<std::size_t>(k)];
            }
        }
    });
    std::vector<Estimate> out(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        std::int64_t hits = 0;
        for (const auto& cnt : counts) hits += cnt[static_cast<std::size_t>(k)];
        const double p = static_cast<double>(hits) / static_cast<double>(samples);
        out[static_cast<std::size_t>(k)] = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
    }
    return out;
}

Estimate mc_z(const Measure& measure, int b, double theta, int n, std::int64_t samples, std::uint64_t seed,
              int workers) {
    return mc_z_profile(measure, b, theta, n, samples, seed, workers).back();
}

std::optional<Reduction> percolation_reduction(const Measure& measure, int b, double v) {
    const MeasureSummary s = summary(measure, b);
    if (s.marginal || s.theta_b < 1.0) return std::nullopt;
    const double T = std::max(s.theta_b, s.x_star + v);
    const double open = static_cast<double>(b - 1) / b;
    if (measure.mass(1.0 - T / b, open, true, false) != 0.0) return std::nullopt;
    return Reduction{{b, measure.mass(open, 1.0)}, measure.mass(1.0 - v, 1.0)};
}

}  // namespace crit
