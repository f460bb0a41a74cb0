#include "crit/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "crit/errors.hpp"

namespace crit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// atoms and the marginal case are refused; zero mass near the top is allowed
MeasureSummary check_density(const Measure& measure, int b, const char* op) {
    if (b < 2) throw ValidationError(std::string(op) + ": require b >= 2");
    const MeasureSummary s = summary(measure, b);
    if (measure.has_atoms()) throw NotFlatError(std::string(op) + ": measure has atoms");
    if (s.marginal) throw NotFlatError(std::string(op) + ": marginal measure (theta_b = 1) is not supported");
    return s;
}

void check_nodes(std::size_t nodes, const char* op) {
    if (nodes < 2) throw ValidationError(std::string(op) + ": require at least 2 grid nodes");
}

// one-node spike of unit trapezoid mass at the node nearest x
GridFunction spike(double lo, double hi, std::size_t nodes, double x) {
    GridFunction g(lo, hi, std::vector<double>(nodes, 0.0));
    const double h = g.spacing();
    const auto i = static_cast<std::size_t>(std::clamp(std::round((x - lo) / h), 0.0, static_cast<double>(nodes - 1)));
    const bool edge = i == 0 || i + 1 == nodes;
    g.mutable_values()[i] = (edge ? 2.0 : 1.0) / h;
    return g;
}

}  // namespace

// ---------------------------------------------------------------- forward

PropagateResult propagate(const Measure& measure, int b, double theta, int n, std::size_t nodes, double theta_max) {
    require_flat(measure, b, "propagate");
    check_nodes(nodes, "propagate");
    if (n < 0) throw ValidationError("propagate: require n >= 0");
    const MeasureSummary s = summary(measure, b);
    const double limit = theta_max > 0.0 ? theta_max : std::max(s.theta_b, theta);
    if (!(theta >= 0.0 && theta <= limit)) {
        throw ValidationError("propagate: theta " + std::to_string(theta) + " outside [0, " + std::to_string(limit) + "]");
    }
    const double hi = std::max(s.theta_b, theta);
    const PiecewiseLinear& phi = measure.density();

    PropagateResult r;
    r.Z.assign(static_cast<std::size_t>(n) + 1, 0.0);
    r.final.theta = theta;
    r.final.n = n;
    if (theta < 1.0) {
        r.final.density = GridFunction(1.0, hi, std::vector<double>(nodes, 0.0));
        return r;
    }
    r.Z[0] = 1.0;
    if (n == 0) {
        r.final.density = spike(1.0, hi, nodes, theta);
        r.final.mass = 1.0;
        return r;
    }

    // f_1(q) = phi(q - theta/b) on q >= 1, exactly
    std::vector<Piece> first;
    for (const Piece& p : phi.pieces()) {
        const double a = p.x0 + theta / b;
        const double c = p.x1 + theta / b;
        if (c <= 1.0) continue;
        const double a1 = std::max(a, 1.0);
        first.push_back({a1, c, p.at(a1 - theta / b), p.y1});
    }
    PiecewiseLinear f(std::move(first));
    r.Z[1] = f.total();

    GridFunction grid(1.0, hi, std::vector<double>(nodes, 0.0));
    for (int k = 2; k <= n; ++k) {
        r.Z[static_cast<std::size_t>(k)] = tail_transfer(f, phi, b, 1.0);
        auto& vals = grid.mutable_values();
        for (std::size_t i = 0; i < nodes; ++i) vals[i] = convolve_at(f, phi, b, grid.node(i));
        f = grid.to_piecewise();
    }
    if (n == 1) {
        auto& vals = grid.mutable_values();
        for (std::size_t i = 0; i < nodes; ++i) vals[i] = f(grid.node(i));
    }
    r.final.density = grid;
    r.final.mass = r.Z[static_cast<std::size_t>(n)];
    return r;
}

ConditionedDensity conditioned_density(const Measure& measure, int b, double theta, int n, std::size_t nodes) {
    const PropagateResult r = propagate(measure, b, theta, n, nodes);
    if (!(r.final.mass > 0.0)) {
        throw ValidationError("conditioned_density: Z_n(theta) = 0, nothing to condition on");
    }
    ConditionedDensity out;
    out.degenerate = n == 0;
    out.density = r.final.density;
    const double m = out.density.integral();
    if (!(m > 0.0)) throw ValidationError("conditioned_density: density vanished on the grid");
    for (double& v : out.density.mutable_values()) v /= m;
    return out;
}

GridFunction unconditioned_step(const Measure& measure, int b, const GridFunction& density) {
    const double lo = measure.support_lo() + density.lo() / b;
    const double hi = measure.support_hi() + density.hi() / b;
    const PiecewiseLinear f = density.to_piecewise();
    const PiecewiseLinear& phi = measure.density();
    return GridFunction::sample(lo, hi, density.size(), [&](double t) { return convolve_at(f, phi, b, t); });
}

// ---------------------------------------------------------------- backward

ThetaProfile::ThetaProfile(const Measure& measure, int b, double theta_max, std::size_t nodes)
    : measure_(&measure), b_(b) {
    check_density(measure, b, "ThetaProfile");
    check_nodes(nodes, "ThetaProfile");
    const MeasureSummary s = summary(measure, b);
    if (!(theta_max > 1.0)) throw ValidationError("ThetaProfile: require theta_max > 1");
    if (theta_max < s.theta_b * (1.0 - 1e-12)) {
        throw ValidationError("ThetaProfile: theta_max must be at least theta_b");
    }
    profile_ = GridFunction(1.0, theta_max, std::vector<double>(nodes, 1.0));
    piecewise_ = profile_.to_piecewise();
}

void ThetaProfile::step() {
    ++n_;
    if (dead_) return;
    const PiecewiseLinear& phi = measure_->density();
    auto& vals = profile_.mutable_values();
    std::vector<double> next(vals.size());
    double m = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        next[i] = std::max(0.0, correlate(piecewise_, phi, 1.0, profile_.node(i) / b_));
        m = std::max(m, next[i]);
    }
    if (!(m > 0.0)) {
        dead_ = true;
        log_scale_ = kNegInf;
        std::fill(vals.begin(), vals.end(), 0.0);
    } else {
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = next[i] / m;
        log_scale_ += std::log(m);
    }
    piecewise_ = profile_.to_piecewise();
}

double ThetaProfile::value(double theta) const {
    if (theta < 1.0 || dead_) return 0.0;
    return std::exp(log_scale_) * profile_(theta);
}

double ThetaProfile::log_value(double theta) const {
    if (theta < 1.0 || dead_) return kNegInf;
    const double p = profile_(theta);
    return p > 0.0 ? log_scale_ + std::log(p) : kNegInf;
}

ZetaResult z_of_rho(const Measure& measure, int b, double tol, std::size_t nodes, int iter_cap) {
    const MeasureSummary s = check_density(measure, b, "z_of_rho");
    if (!(tol > 0.0)) throw ValidationError("z_of_rho: require tol > 0");
    ZetaResult r;
    if (!(s.mass_top > 0.0)) return r;  // Z_1(1) = 0

    ThetaProfile tp(measure, b, s.theta_b, nodes);
    double l1 = 0.0;
    double lb = 0.0;
    double r1_prev = std::numeric_limits<double>::quiet_NaN();
    double r2_prev = r1_prev;
    double change = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= iter_cap; ++it) {
        tp.step();
        const double L1 = tp.log_value(1.0);
        const double Lb = tp.log_value(s.theta_b);
        const double r1 = std::exp(L1 - l1);
        const double r2 = std::exp(Lb - lb);
        r.rows.push_back({it, std::exp(L1), std::exp(Lb), r1, r2});
        r.iterations = it;
        r.bracket_lo = std::exp(L1 / it);
        r.bracket_hi = std::exp(Lb / it);
        if (it >= 2) {
            const double c1 = std::abs(r1 - r1_prev);
            const double c2 = std::abs(r2 - r2_prev);
            const double d = std::abs(r1 - r2);
            change = std::max({c1, c2, d});
            if (change < tol) {
                r.z = 0.5 * (r1 + r2);
                r.half_width = std::max({0.5 * d, c1, c2});
                return r;
            }
        }
        l1 = L1;
        lb = Lb;
        r1_prev = r1;
        r2_prev = r2;
    }
    std::ostringstream msg;
    msg.precision(17);
    msg << "z_of_rho: no convergence after " << iter_cap << " steps; bracket [" << r.bracket_lo << ", "
        << r.bracket_hi << "]";
    throw ConvergenceError(msg.str(), change, iter_cap);
}

StepProfile psi(const Measure& measure, int b, double theta_hi, std::size_t nodes) {
    const MeasureSummary s = check_density(measure, b, "psi");
    const double z = z_of_rho(measure, b, 1e-13, nodes).z;
    if (!(z > 0.0)) throw ValidationError("psi: requires z(rho) > 0");
    const double hi = std::max(s.theta_b, theta_hi);
    const double log_z = std::log(z);

    ThetaProfile tp(measure, b, hi, nodes);
    std::vector<double> prod(nodes, 1.0);  // Z_0 / z^0
    constexpr int kMaxFactors = 500;
    for (int n = 1; n <= kMaxFactors; ++n) {
        tp.step();
        double worst = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            const double p = tp.profile().values()[i];
            const double next = p > 0.0 ? std::exp(tp.log_scale() + std::log(p) - n * log_z) : 0.0;
            if (prod[i] > 0.0) worst = std::max(worst, std::abs(next / prod[i] - 1.0));
            prod[i] = next;
        }
        if (worst < 1e-12) break;
    }
    return StepProfile{0.0, 1.0, GridFunction(1.0, hi, std::move(prod))};
}

ChiResult chi_quadrature(const Measure& measure, int b, double v, double tol, std::size_t nodes) {
    const MeasureSummary s = check_density(measure, b, "chi_quadrature");
    if (!(v > 0.0)) throw ValidationError("chi_quadrature: require v > 0");
    if (!(tol > 0.0)) throw ValidationError("chi_quadrature: require tol > 0");
    ChiResult r;
    r.z = z_of_rho(measure, b, 1e-12, nodes).z;
    const double root = measure.mass(1.0 - v, 1.0);
    if (!(root > 0.0)) return r;
    const double growth = b * r.z;
    if (growth >= 1.0 - 1e-12) {
        r.value = std::numeric_limits<double>::infinity();
        r.infinite = true;
        return r;
    }

    const double theta_max = std::max(s.theta_b, s.x_star + v);
    ThetaProfile tp(measure, b, theta_max, nodes);
    const PiecewiseLinear& phi = measure.density();
    double sum = root;
    r.terms = 1;
    constexpr int kMaxTerms = 1'000'000;
    for (int n = 1; n <= kMaxTerms; ++n) {
        tp.step();
        if (tp.dead()) break;
        const double inner = correlate(tp.profile_piecewise(), phi, 1.0, v);
        const double term = inner > 0.0 ? std::exp(n * std::log(b) + tp.log_scale() + std::log(inner)) : 0.0;
        sum += term;
        r.terms = n + 1;
        if (term < tol * sum) {
            sum += term * growth / (1.0 - growth);  // geometric remainder
            break;
        }
        if (n == kMaxTerms) throw ConvergenceError("chi_quadrature: series did not settle", term, n);
    }
    r.value = sum;
    return r;
}

}  // namespace crit
