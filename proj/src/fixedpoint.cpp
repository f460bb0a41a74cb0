#include "crit/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crit/errors.hpp"
#include "crit/survival.hpp"

namespace crit {

namespace {

constexpr double kGx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

// Gauss-Legendre over each grid cell of [max(a, lo), hi]
template <class F>
double cellwise(const GridFunction& g, double a, F&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double l = std::max(g.node(i), a);
        const double r = g.node(i + 1);
        if (!(l < r)) continue;
        const double mid = 0.5 * (l + r);
        const double half = 0.5 * (r - l);
        for (int j = 0; j < 3; ++j) acc += half * kGw[j] * f(mid + half * kGx[j]);
    }
    return acc;
}

// interpolant of g restricted to [cut, hi]
PiecewiseLinear restrict_from(const GridFunction& g, double cut) {
    std::vector<Piece> out;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        Piece p{g.node(i), g.node(i + 1), g.values()[i], g.values()[i + 1]};
        if (p.x1 <= cut) continue;
        if (p.x0 < cut) p = {cut, p.x1, p.at(cut), p.y1};
        out.push_back(p);
    }
    return PiecewiseLinear(std::move(out));
}

void normalise(GridFunction& g) {
    const double m = g.integral();
    if (!(m > 0.0)) throw ConvergenceError("q_infinity: density lost all mass", 0.0, 0);
    for (double& v : g.mutable_values()) v /= m;
}

double sup_change(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

double phi_b(double y, int b) {
    if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("phi_b: require 0 <= y <= 1");
    if (b < 1) throw ValidationError("phi_b: require b >= 1");
    return 1.0 - std::pow(1.0 - y, b);
}

const char* to_string(PsiVerdict v) {
    switch (v) {
        case PsiVerdict::vanishes: return "vanishes";
        case PsiVerdict::persists: return "persists";
        case PsiVerdict::undecided: return "undecided";
    }
    return "undecided";
}

// ---------------------------------------------------------------- Psi

namespace {

GridFunction psi_step(const Measure& measure, int b, const GridFunction& psi, const PhiFn& phi) {
    std::vector<double> g(psi.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = phi(std::clamp(psi.values()[i], 0.0, 1.0), b);
    const PiecewiseLinear G = GridFunction(psi.lo(), psi.hi(), std::move(g)).to_piecewise();
    const PiecewiseLinear& rho = measure.density();
    return GridFunction::sample(psi.lo(), psi.hi(), psi.size(), [&](double t) {
        return std::clamp(correlate(G, rho, 1.0 / b, t / b, 1.0 - t), 0.0, 1.0);
    });
}

}  // namespace

PsiSequence psi_sequence(const Measure& measure, int b, double theta_max, std::size_t nodes, int n_max, double eps,
                         double stable_tol, const PhiFn& phi) {
    require_flat(measure, b, "psi_sequence");
    if (nodes < 2) throw ValidationError("psi_sequence: require at least 2 nodes");
    if (n_max < 1) throw ValidationError("psi_sequence: require n_max >= 1");
    const MeasureSummary s = summary(measure, b);
    const double hi = theta_max > 0.0 ? theta_max : s.theta_b + 1.0;
    if (hi < 1.0) throw ValidationError("psi_sequence: theta_max must be at least 1");

    PsiSequence seq;
    seq.iterates.emplace_back(0.0, hi, std::vector<double>(nodes, 1.0));
    for (int n = 1; n <= n_max; ++n) {
        GridFunction next = psi_step(measure, b, seq.iterates.back(), phi);
        seq.last_change = sup_change(next.values(), seq.iterates.back().values());
        const double sup = next.sup_abs();
        seq.iterates.push_back(std::move(next));
        if (sup < eps) {
            seq.verdict = PsiVerdict::vanishes;
            return seq;
        }
        if (seq.last_change < stable_tol) {
            seq.verdict = PsiVerdict::persists;
            break;
        }
    }
    if (seq.verdict == PsiVerdict::persists) {
        const GridFunction& last = seq.iterates.back();
        const auto v = last.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] > eps) {
                // linear interpolation inside the cell where Psi crosses eps
                double t = last.node(i);
                if (i > 0 && v[i] != v[i - 1]) t = last.node(i - 1) + (eps - v[i - 1]) / (v[i] - v[i - 1]) * last.spacing();
                seq.threshold = t;
                break;
            }
        }
    }
    return seq;
}

double psi_residual(const Measure& measure, int b, const GridFunction& psi, const PhiFn& phi) {
    const GridFunction next = psi_step(measure, b, psi, phi);
    return sup_change(next.values(), psi.values());
}

// ---------------------------------------------------------------- Q_infinity

QLaw q_infinity(const Measure& measure, int b, std::size_t nodes, double tol, int iter_cap, double init_theta) {
    require_flat(measure, b, "q_infinity");
    if (nodes < 3) throw ValidationError("q_infinity: require at least 3 nodes");
    if (!(tol > 0.0)) throw ValidationError("q_infinity: require tol > 0");
    const MeasureSummary s = summary(measure, b);
    const double top = s.theta_b;

    // grid with nodes exactly at 1 and theta_b reaching down to inf supp + 1/b
    const double want_lo = std::min(1.0, measure.support_lo() + 1.0 / b);
    const auto N1 = static_cast<double>(nodes - 1);
    const double m = want_lo < 1.0 ? std::max(1.0, std::floor(N1 * (top - 1.0) / (top - want_lo))) : N1;
    const double h = (top - 1.0) / m;
    const double lo = top - N1 * h;

    const PiecewiseLinear& rho = measure.density();
    const ConditionedDensity start = conditioned_density(measure, b, init_theta, 8, nodes);
    const PiecewiseLinear f0 = start.density.to_piecewise();
    GridFunction dens = GridFunction::sample(lo, top, nodes, [&](double w) { return convolve_at(f0, rho, b, w); });
    normalise(dens);

    // T followed by renormalisation to unit grid mass
    auto apply = [&](const GridFunction& g, double* z_hat) {
        const PiecewiseLinear above = restrict_from(g, 1.0);
        const double norm = above.total();
        if (!(norm > 0.0)) throw ConvergenceError("q_infinity: no mass above 1", 0.0, 0);
        GridFunction out = GridFunction::sample(lo, top, nodes, [&](double w) { return convolve_at(above, rho, b, w) / norm; });
        normalise(out);
        if (z_hat) *z_hat = tail_transfer(above, rho, b, 1.0) / norm;
        return out;
    };

    QLaw q;
    double change = 0.0;
    for (int it = 1; it <= iter_cap; ++it) {
        GridFunction next = apply(dens, nullptr);
        change = sup_change(next.values(), dens.values());
        dens = std::move(next);
        q.iterations = it;
        if (change < tol) break;
        if (it == iter_cap) {
            throw ConvergenceError("q_infinity: no convergence; last sup change " + std::to_string(change), change, it);
        }
    }
    const GridFunction image = apply(dens, &q.z_hat);
    q.residual = sup_change(image.values(), dens.values());
    q.density = std::move(dens);
    return q;
}

// ---------------------------------------------------------------- B_infinity

StepProfile b_infinity(const Measure& measure, int b, double lambda, double theta_max, std::size_t nodes, double tol,
                       int iter_cap, const PhiFn& phi) {
    require_flat(measure, b, "b_infinity");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("b_infinity: require 0 <= lambda <= 1");
    if (nodes < 2) throw ValidationError("b_infinity: require at least 2 nodes");
    if (!(tol > 0.0)) throw ValidationError("b_infinity: require tol > 0");
    const MeasureSummary s = summary(measure, b);
    const double hi = theta_max > 0.0 ? theta_max : s.theta_b;
    if (hi < s.theta_b * (1.0 - 1e-12)) throw ValidationError("b_infinity: theta_max must be at least theta_b");

    StepProfile B{lambda, 1.0, GridFunction(1.0, hi, std::vector<double>(nodes, lambda))};
    const PiecewiseLinear& rho = measure.density();
    std::vector<double> next(nodes);
    double change = 0.0;
    for (int it = 1; it <= iter_cap; ++it) {
        const PiecewiseLinear pw = B.as_piecewise(0.0);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double e = std::clamp(correlate(pw, rho, 1.0, B.above.node(i) / b), 0.0, 1.0);
            next[i] = lambda + (1.0 - lambda) * phi(e, b);
        }
        change = sup_change(next, B.above.values());
        std::copy(next.begin(), next.end(), B.above.mutable_values().begin());
        if (change < tol) return B;
    }
    throw ConvergenceError("b_infinity: no convergence; last sup change " + std::to_string(change), change, iter_cap);
}

// ---------------------------------------------------------------- constants

KappaBstar kappa_and_bstar(const Measure& measure, int b, double lambda, const QLaw& qlaw, const StepProfile& binf) {
    if (qlaw.density.size() != binf.above.size()) {
        throw ValidationError("kappa_and_bstar: Q law and B grids have different node counts");
    }
    if (binf.below != lambda) throw ValidationError("kappa_and_bstar: B was computed for another lambda");
    const PiecewiseLinear pw = binf.as_piecewise(0.0);
    const PiecewiseLinear& rho = measure.density();
    const GridFunction& h = qlaw.density;
    const double cond = cellwise(h, 1.0, [&](double q) { return h(q); });
    if (!(cond > 0.0)) throw ValidationError("kappa_and_bstar: Q law has no mass above 1");
    const double num = cellwise(h, 1.0, [&](double q) {
        const double g = correlate(pw, rho, 1.0, q / b);
        return g * g * h(q);
    });
    const double total = h.integral();
    const double bs = cellwise(h, h.lo(), [&](double q) { return binf(q) * h(q); });
    return {num / cond, bs / total};
}

CRho c_rho(const Measure& measure, int b, const QLaw& qlaw, const StepProfile& psi) {
    if (qlaw.density.size() != psi.above.size()) {
        throw ValidationError("c_rho: Q law and psi grids have different node counts");
    }
    if (!(qlaw.z_hat > 0.0)) throw ValidationError("c_rho: Q law has no mass above 1");
    const PiecewiseLinear pw = psi.as_piecewise(0.0);
    const PiecewiseLinear& rho = measure.density();
    const GridFunction& h = qlaw.density;
    const double cond = cellwise(h, 1.0, [&](double q) { return h(q); });
    if (!(cond > 0.0)) throw ValidationError("c_rho: Q law has no mass above 1");
    const double num = cellwise(h, 1.0, [&](double q) {
        const double g = correlate(pw, rho, 1.0, q / b);
        return g * g * h(q);
    });
    const double inv_c2 = 0.5 * (b - 1) * num / cond;
    if (!(inv_c2 > 0.0)) throw ValidationError("c_rho: psi vanishes on the Q law support");
    return {1.0 / std::sqrt(inv_c2), std::abs(qlaw.z_hat - 1.0 / b) < 1e-6};
}

}  // namespace crit
