#include "crit/dynamics.hpp"

#include <cmath>

#include "crit/parallel.hpp"

namespace crit {

namespace {

void check_mc_args(int b, double v, std::int64_t samples, int depth_cap) {
    if (b < 2) throw ValidationError("monte carlo: require b >= 2");
    if (!(v > 0.0)) throw ValidationError("monte carlo: require v > 0");
    if (samples < 1) throw ValidationError("monte carlo: require samples >= 1");
    if (depth_cap < 1) throw ValidationError("monte carlo: require depth_cap >= 1");
}

Proportion proportion(std::int64_t hits, std::int64_t n) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

}  // namespace

int vn_cap(int b) {
    if (b < 2) throw ValidationError("vn_cap: require b >= 2");
    return static_cast<int>(std::floor(20.0 * std::log(2.0) / std::log(static_cast<double>(b)) + 1e-9));
}

TailTable tail_from_sizes(const std::vector<std::int64_t>& sizes, std::int64_t n_max) {
    TailTable t;
    t.samples = static_cast<std::int64_t>(sizes.size());
    if (n_max <= 0) {
        for (std::int64_t s : sizes) n_max = std::max(n_max, s);
    }
    // count[k] = number of sizes >= k, built from a clipped histogram
    std::vector<std::int64_t> count(static_cast<std::size_t>(n_max) + 2, 0);
    for (std::int64_t s : sizes) ++count[static_cast<std::size_t>(std::clamp<std::int64_t>(s, 0, n_max))];
    for (std::int64_t k = n_max - 1; k >= 0; --k) count[static_cast<std::size_t>(k)] += count[static_cast<std::size_t>(k) + 1];
    t.rows.reserve(static_cast<std::size_t>(n_max));
    for (std::int64_t n = 1; n <= n_max; ++n) {
        const Proportion pr = proportion(count[static_cast<std::size_t>(n)], std::max<std::int64_t>(1, t.samples));
        t.rows.push_back({n, pr.p, pr.std_error});
    }
    return t;
}

TailTable mc_tail(const Measure& measure, int b, double v, std::int64_t samples, int depth_cap,
                  std::uint64_t seed, int workers, std::int64_t n_max) {
    check_mc_args(b, v, samples, depth_cap);
    const std::int64_t cap = n_max > 0 ? n_max : kNoSizeCap;
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(samples));
    std::vector<unsigned char> flags(static_cast<std::size_t>(samples));
    parallel_for(samples, workers, [&](std::int64_t i) {
        const EnergyField field(measure, b, sample_seed(seed, static_cast<std::uint64_t>(i)));
        const AvalancheOutcome o = run_frontier(field, v, depth_cap, cap);
        sizes[static_cast<std::size_t>(i)] = o.size;
        flags[static_cast<std::size_t>(i)] = static_cast<unsigned char>((o.truncated ? 1 : 0) | (o.size_capped ? 2 : 0));
    });
    TailTable t = tail_from_sizes(sizes, n_max);
    for (unsigned char f : flags) {
        if (f & 1) ++t.truncated;
        if (f & 2) ++t.size_capped;
    }
    return t;
}

ChiSurvival mc_chi_and_survival(const Measure& measure, int b, double v, std::int64_t samples, int depth_cap,
                                std::uint64_t seed, int workers, std::int64_t size_cap) {
    check_mc_args(b, v, samples, depth_cap);
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(samples));
    std::vector<unsigned char> flags(static_cast<std::size_t>(samples));
    parallel_for(samples, workers, [&](std::int64_t i) {
        const EnergyField field(measure, b, sample_seed(seed, static_cast<std::uint64_t>(i)));
        const AvalancheOutcome o = run_frontier(field, v, depth_cap, size_cap);
        bool survived = o.truncated;
        // a capped run stopped before the search could see depth_cap
        if (!survived && o.size_capped) survived = reaches_depth(field, v, depth_cap);
        sizes[static_cast<std::size_t>(i)] = o.size;
        flags[static_cast<std::size_t>(i)] =
            static_cast<unsigned char>((o.truncated || o.size_capped ? 1 : 0) | (survived ? 2 : 0));
    });
    // sequential reduction in index order keeps the sums bitwise reproducible
    double sum = 0.0;
    double sum2 = 0.0;
    std::int64_t cut = 0;
    std::int64_t alive = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto s = static_cast<double>(sizes[i]);
        sum += s;
        sum2 += s * s;
        if (flags[i] & 1) ++cut;
        if (flags[i] & 2) ++alive;
    }
    const auto n = static_cast<double>(samples);
    ChiSurvival r;
    r.mean_size = sum / n;
    const double var = samples > 1 ? std::max(0.0, (sum2 - n * r.mean_size * r.mean_size) / (n - 1.0)) : 0.0;
    r.std_error = std::sqrt(var / n);
    r.trunc_frac = static_cast<double>(cut) / n;
    const Proportion s = proportion(alive, samples);
    r.survival = s.p;
    r.survival_stderr = s.std_error;
    return r;
}

Proportion mc_survival(const Measure& measure, int b, double v, std::int64_t samples, int depth,
                       std::uint64_t seed, int workers) {
    check_mc_args(b, v, samples, depth);
    std::vector<unsigned char> hit(static_cast<std::size_t>(samples));
    parallel_for(samples, workers, [&](std::int64_t i) {
        const EnergyField field(measure, b, sample_seed(seed, static_cast<std::uint64_t>(i)));
        hit[static_cast<std::size_t>(i)] = reaches_depth(field, v, depth) ? 1 : 0;
    });
    std::int64_t alive = 0;
    for (unsigned char h : hit) alive += h;
    return proportion(alive, samples);
}

std::vector<double> mc_vn(const Measure& measure, int b, int n, std::int64_t samples, std::uint64_t seed,
                          int workers) {
    if (samples < 1) throw ValidationError("mc_vn: require samples >= 1");
    std::vector<double> out(static_cast<std::size_t>(samples));
    parallel_for(samples, workers, [&](std::int64_t i) {
        const EnergyField field(measure, b, sample_seed(seed, static_cast<std::uint64_t>(i)));
        out[static_cast<std::size_t>(i)] = sample_vn(field, n);
    });
    return out;
}

}  // namespace crit
