#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "crit/errors.hpp"
#include "crit/measures.hpp"
#include "crit/rng.hpp"

namespace crit {

inline constexpr std::int64_t kNoSizeCap = std::numeric_limits<std::int64_t>::max();

/// Site handle of an EnergyField: the derivation key of the site plus the
/// uniform variate that fixes its energy.
struct FieldSite {
    std::uint64_t key = 0;
    double u = 0.0;
};

/// Replayable i.i.d. energies on the b-ary tree. X_sigma depends only on
/// (seed, path label of sigma); each child key is drawn from its parent's key.
class EnergyField {
public:
    using site_type = FieldSite;

    EnergyField(const Measure& measure, int b, std::uint64_t seed)
        : measure_(&measure), b_(b), seed_(seed), key_(make_key(seed)) {
        if (b < 2) throw ValidationError("EnergyField: require b >= 2");
    }

    [[nodiscard]] int b() const { return b_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    [[nodiscard]] FieldSite root() const {
        const auto out = philox4x32({0u, 0u, 0u, kTagRoot}, key_);
        return {join64(out[0], out[1]), to_unit(out[2], out[3])};
    }
    [[nodiscard]] FieldSite child(const FieldSite& s, int i) const {
        const auto out = philox4x32({lo32(s.key), hi32(s.key), static_cast<std::uint32_t>(i), kTagChild}, key_);
        return {join64(out[0], out[1]), to_unit(out[2], out[3])};
    }
    [[nodiscard]] double energy(const FieldSite& s) const { return measure_->sample(s.u); }

private:
    const Measure* measure_;
    int b_;
    std::uint64_t seed_;
    PhiloxKey key_;
};

struct AvalancheOutcome {
    std::int64_t size = 0;
    std::int64_t boundary_size = 1;   // (b-1) size + 1
    std::int64_t children_count = 0;  // b size, for diagnostics
    int depth = 0;
    bool truncated = false;     // a site at depth_cap toppled
    bool size_capped = false;   // stopped once size reached the size cap; size is a lower bound

    friend bool operator==(const AvalancheOutcome&, const AvalancheOutcome&) = default;
};

namespace detail {
inline void finish(AvalancheOutcome& out, int b) {
    out.boundary_size = static_cast<std::int64_t>(b - 1) * out.size + 1;
    out.children_count = static_cast<std::int64_t>(b) * out.size;
}

inline void check_run_args(double v, int depth_cap) {
    if (!(v > 0.0)) throw ValidationError("avalanche: require v > 0");
    if (depth_cap < 1) throw ValidationError("avalanche: require depth_cap >= 1");
}
}  // namespace detail

/// Toppling dynamics applied layer by layer. Only the toppling layer and the
/// values its sites pass down are stored.
template <class Field>
AvalancheOutcome run_direct(const Field& field, double v, int depth_cap, std::int64_t size_cap = kNoSizeCap) {
    detail::check_run_args(v, depth_cap);
    using Site = typename Field::site_type;
    const int b = field.b();
    AvalancheOutcome out;
    const Site root = field.root();
    std::vector<std::pair<Site, double>> layer{{root, field.energy(root) + v}};
    std::vector<std::pair<Site, double>> next;
    for (int d = 0; !layer.empty(); ++d) {
        next.clear();
        bool toppled = false;
        for (auto& [site, value] : layer) {
            if (value < 1.0) continue;
            toppled = true;
            ++out.size;
            out.depth = d;
            if (out.size >= size_cap) {
                out.size_capped = true;
                detail::finish(out, b);
                return out;
            }
            if (d == depth_cap) {
                out.truncated = true;
                continue;
            }
            const double share = value / b;
            value = 0.0;
            for (int i = 0; i < b; ++i) {
                const Site c = field.child(site, i);
                next.emplace_back(c, field.energy(c) + share);
            }
        }
        if (!toppled) break;
        std::swap(layer, next);
    }
    detail::finish(out, b);
    return out;
}

/// Open-path search: a site joins the avalanche iff every Q value on its path
/// from the root is >= 1. Depth-first with an explicit stack.
template <class Field>
AvalancheOutcome run_frontier(const Field& field, double v, int depth_cap, std::int64_t size_cap = kNoSizeCap) {
    detail::check_run_args(v, depth_cap);
    using Site = typename Field::site_type;
    const int b = field.b();
    AvalancheOutcome out;
    const Site root = field.root();
    const double theta = field.energy(root) + v;
    if (theta < 1.0) {
        detail::finish(out, b);
        return out;
    }
    struct Item {
        Site site;
        double q;
        int depth;
    };
    std::vector<Item> stack{{root, theta, 0}};
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        ++out.size;
        out.depth = std::max(out.depth, it.depth);
        if (out.size >= size_cap) {
            out.size_capped = true;
            break;
        }
        if (it.depth == depth_cap) {
            out.truncated = true;
            continue;
        }
        for (int i = b - 1; i >= 0; --i) {
            const Site c = field.child(it.site, i);
            const double q = field.energy(c) + it.q / b;
            if (q >= 1.0) stack.push_back({c, q, it.depth + 1});
        }
    }
    detail::finish(out, b);
    return out;
}

/// True iff some site at layer `depth` topples. Stops at the first such site.
template <class Field>
bool reaches_depth(const Field& field, double v, int depth) {
    using Site = typename Field::site_type;
    const int b = field.b();
    const Site root = field.root();
    const double theta = field.energy(root) + v;
    if (theta < 1.0) return false;
    if (depth == 0) return true;
    struct Item {
        Site site;
        double q;
        int depth;
    };
    std::vector<Item> stack{{root, theta, 0}};
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        for (int i = b - 1; i >= 0; --i) {
            const Site c = field.child(it.site, i);
            const double q = field.energy(c) + it.q / b;
            if (q < 1.0) continue;
            if (it.depth + 1 == depth) return true;
            stack.push_back({c, q, it.depth + 1});
        }
    }
    return false;
}

/// Largest n accepted by sample_vn for this b (b^n <= 2^20).
int vn_cap(int b);

namespace detail {
template <class Field>
double vn_at(const Field& field, const typename Field::site_type& site, int n) {
    if (n == 0) return 0.0;
    const int b = field.b();
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < b; ++i) m = std::min(m, vn_at(field, field.child(site, i), n - 1));
    const double x = field.energy(site);
    return std::max(1.0 - x, b * m - x);
}
}  // namespace detail

/// Minimal v for which the avalanche reaches layer n - 1 (V_0 = 0), by the
/// exact max/min recursion over the depth-n subtree.
template <class Field>
double sample_vn(const Field& field, int n) {
    if (n < 0 || n > vn_cap(field.b())) {
        throw ValidationError("sample_vn: n must lie in [0, " + std::to_string(vn_cap(field.b())) + "]");
    }
    return detail::vn_at(field, field.root(), n);
}

struct TailRow {
    std::int64_t n = 0;
    double p = 0.0;
    double std_error = 0.0;
};

struct TailTable {
    std::vector<TailRow> rows;  // n = 1..n_max
    std::int64_t samples = 0;
    std::int64_t truncated = 0;    // runs that hit depth_cap
    std::int64_t size_capped = 0;  // runs stopped at the size cap
};

/// Empirical P(size >= n) for n = 1..n_max from a list of sizes.
TailTable tail_from_sizes(const std::vector<std::int64_t>& sizes, std::int64_t n_max);

/// Monte Carlo tail of |A|. Sample i uses the field seeded by sample_seed(seed, i),
/// so results do not depend on `workers`. n_max doubles as the size cap
/// (counts for n <= n_max are exact); n_max = 0 means no cap and rows up to the
/// largest observed size.
TailTable mc_tail(const Measure& measure, int b, double v, std::int64_t samples, int depth_cap,
                  std::uint64_t seed, int workers, std::int64_t n_max = 0);

struct ChiSurvival {
    double mean_size = 0.0;
    double std_error = 0.0;
    double trunc_frac = 0.0;  // runs whose size is only a lower bound
    double survival = 0.0;    // P(some site at layer depth_cap topples)
    double survival_stderr = 0.0;
};

ChiSurvival mc_chi_and_survival(const Measure& measure, int b, double v, std::int64_t samples, int depth_cap,
                                std::uint64_t seed, int workers, std::int64_t size_cap = 10'000'000);

struct Proportion {
    double p = 0.0;
    double std_error = 0.0;
};

/// P(avalanche reaches layer `depth`), by early-exit search.
Proportion mc_survival(const Measure& measure, int b, double v, std::int64_t samples, int depth,
                       std::uint64_t seed, int workers);

/// n independent V_n draws (sample i on field sample_seed(seed, i)).
std::vector<double> mc_vn(const Measure& measure, int b, int n, std::int64_t samples, std::uint64_t seed,
                          int workers);

}  // namespace crit
