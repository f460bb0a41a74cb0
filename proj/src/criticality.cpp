#include "crit/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "crit/dynamics.hpp"
#include "crit/errors.hpp"
#include "crit/fixedpoint.hpp"
#include "crit/oracles.hpp"
#include "crit/survival.hpp"

namespace crit {

ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double window_lo,
                         double window_hi) {
    if (x.size() != y.size()) throw ValidationError("fit_power_law: x and y differ in length");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] >= window_lo && x[i] <= window_hi && x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    const auto n = static_cast<double>(lx.size());
    if (lx.size() < 3) throw ValidationError("fit_power_law: need at least 3 positive points in the window");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw ValidationError("fit_power_law: all x values coincide");
    ScalingFit f;
    f.exponent = sxy / sxx;
    const double intercept = my - f.exponent * mx;
    f.amplitude = std::exp(intercept);
    const double sse = std::max(0.0, syy - f.exponent * sxy);
    f.stderr_exponent = std::sqrt(sse / (n - 2.0) / sxx);
    f.r2 = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    f.window_lo = window_lo;
    f.window_hi = window_hi;
    f.points = static_cast<int>(lx.size());
    return f;
}

double find_critical_alpha(const MixtureFamily& family, double tol, std::size_t nodes) {
    const double zc = 1.0 / family.b;
    const double ztol = std::min(1e-12, tol / 100);
    auto z_at = [&](double a) { return z_of_rho(family.at(a), family.b, ztol, nodes).z; };
    const double z0 = z_at(0.0);
    const double z1 = z_at(1.0);
    if (std::abs(z0 - zc) < tol) return 0.0;
    if (std::abs(z1 - zc) < tol) return 1.0;
    if ((z0 - zc) * (z1 - zc) > 0.0) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "find_critical_alpha: endpoints do not straddle 1/b: z(0) = " << z0 << ", z(1) = " << z1;
        throw ValidationError(msg.str());
    }
    double lo = 0.0;
    double hi = 1.0;
    const bool rising = z0 < zc;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double z = z_at(mid);
        if (std::abs(z - zc) < tol) return mid;
        ((z < zc) == rising ? lo : hi) = mid;
    }
    throw ConvergenceError("find_critical_alpha: bisection did not reach the tolerance", hi - lo, 200);
}

double mean_psi(const Measure& measure, int b, double v, std::size_t nodes) {
    const MeasureSummary s = summary(measure, b);
    const StepProfile p = psi(measure, b, std::max(s.theta_b, s.x_star + v), nodes);
    return correlate(p.as_piecewise(0.0), measure.density(), 1.0, v);
}

Amplitudes amplitudes(const Measure& measure, int b, double v, std::size_t nodes) {
    if (!(v > 0.0)) throw ValidationError("amplitudes: require v > 0");
    const MeasureSummary s = summary(measure, b);
    Amplitudes a;
    a.z = z_of_rho(measure, b, 1e-12, nodes).z;
    a.critical = std::abs(a.z - 1.0 / b) < 1e-4;
    const StepProfile p = psi(measure, b, std::max(s.theta_b, s.x_star + v), nodes);
    a.mean_psi = correlate(p.as_piecewise(0.0), measure.density(), 1.0, v);
    const QLaw q = q_infinity(measure, b, nodes, 1e-12, 100000);
    a.c = c_rho(measure, b, q, p).c;
    a.tau = a.mean_psi / b;
    a.theta = a.c * a.mean_psi / (std::sqrt(b - 1.0) * std::sqrt(M_PI));
    a.tee = b * a.c * a.c * a.mean_psi;
    return a;
}

GammaScan gamma_scan(const MixtureFamily& family, double v, const std::vector<double>& alphas, std::size_t nodes,
                     double crit_tol) {
    if (alphas.size() < 3) throw ValidationError("gamma_scan: need at least 3 alphas");
    const double zc = 1.0 / family.b;
    GammaScan g;
    std::vector<double> gap;
    std::vector<double> chi;
    for (double a : alphas) {
        const Measure m = family.at(a);
        GammaPoint pt;
        pt.alpha = a;
        pt.z = z_of_rho(m, family.b, 1e-12, nodes).z;
        if (pt.z >= zc) {
            throw ValidationError("gamma_scan: alpha = " + std::to_string(a) + " is not subcritical (z = " +
                                  std::to_string(pt.z) + ")");
        }
        pt.chi = chi_quadrature(m, family.b, v, 1e-13, nodes).value;
        pt.product = pt.chi * (zc - pt.z);
        g.points.push_back(pt);
        gap.push_back(zc - pt.z);
        chi.push_back(pt.chi);
    }
    g.fit = fit_power_law(gap, chi, *std::min_element(gap.begin(), gap.end()), *std::max_element(gap.begin(), gap.end()));
    for (const GammaPoint& pt : g.points) g.tau_empirical += pt.product;
    g.tau_empirical /= static_cast<double>(g.points.size());
    g.alpha_critical = find_critical_alpha(family, crit_tol, nodes);
    g.tau_formula = mean_psi(family.at(g.alpha_critical), family.b, v, nodes) / family.b;
    return g;
}

DeltaScan delta_scan(const Measure& measure, int b, double v, const DeltaOptions& opt) {
    if (!(opt.n_lo >= 1.0 && opt.n_hi > opt.n_lo)) throw ValidationError("delta_scan: require 1 <= n_lo < n_hi");
    if (opt.fit_points < 3) throw ValidationError("delta_scan: need at least 3 fit points");
    DeltaScan d;
    d.z = z_of_rho(measure, b, 1e-12, opt.nodes).z;
    if (std::abs(d.z - 1.0 / b) >= opt.crit_tol) {
        throw ValidationError("delta_scan: measure is not critical (z = " + std::to_string(d.z) + ")");
    }
    const auto n_max = static_cast<std::int64_t>(std::ceil(opt.n_hi));
    const TailTable t = mc_tail(measure, b, v, opt.samples, opt.depth_cap, opt.seed, opt.workers, n_max);
    d.truncated = t.truncated;

    std::vector<std::int64_t> ns;
    for (int k = 0; k < opt.fit_points; ++k) {
        const double e = static_cast<double>(k) / (opt.fit_points - 1);
        const auto n = static_cast<std::int64_t>(std::llround(opt.n_lo * std::pow(opt.n_hi / opt.n_lo, e)));
        if (ns.empty() || ns.back() != n) ns.push_back(n);
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::int64_t n : ns) {
        const TailRow& r = t.rows[static_cast<std::size_t>(n - 1)];
        d.points.push_back({n, r.p, r.std_error});
        x.push_back(static_cast<double>(n));
        y.push_back(r.p);
    }
    d.fit = fit_power_law(x, y, opt.n_lo, opt.n_hi);
    d.theta_formula = amplitudes(measure, b, v, opt.nodes).theta;

    if (const auto red = percolation_reduction(measure, b, v)) {
        const std::vector<double> tail = otter_dwass_tail(red->spec, static_cast<int>(n_max));
        std::vector<double> exact;
        for (std::int64_t n : ns) exact.push_back(red->root * tail[static_cast<std::size_t>(n - 1)]);
        const ScalingFit of = fit_power_law(x, exact, opt.n_lo, opt.n_hi);
        d.oracle_amplitude = of.amplitude;
        d.oracle_exponent = of.exponent;
        d.oracle_asymptotic = red->root * otter_dwass_amplitude(red->spec);
        d.fit_ratio = d.fit.amplitude / of.amplitude;
        d.formula_ratio = d.theta_formula / *d.oracle_asymptotic;
    }
    return d;
}

BetaScan beta_scan(const MixtureFamily& family, double v, const std::vector<double>& alphas, const BetaOptions& opt) {
    if (alphas.empty()) throw ValidationError("beta_scan: no alphas given");
    if (opt.depth_proxy < 500) throw ValidationError("beta_scan: require depth_proxy >= 500");
    const double zc = 1.0 / family.b;
    BetaScan s;
    std::vector<double> gap;
    std::vector<double> surv;
    std::vector<double> exact;
    bool all_reduce = true;
    double root = 0.0;
    for (double a : alphas) {
        const Measure m = family.at(a);
        BetaPoint pt;
        pt.alpha = a;
        pt.z = z_of_rho(m, family.b, 1e-12, opt.nodes).z;
        if (pt.z <= zc) {
            throw ValidationError("beta_scan: alpha = " + std::to_string(a) + " is not supercritical (z = " +
                                  std::to_string(pt.z) + ")");
        }
        const Proportion p = mc_survival(m, family.b, v, opt.samples, opt.depth_proxy, opt.seed, opt.workers);
        pt.survival = p.p;
        pt.std_error = p.std_error;
        if (const auto red = percolation_reduction(m, family.b, v)) {
            pt.oracle = red->root * gw_survival(red->spec, 1e-14);
            exact.push_back(*pt.oracle);
            root = red->root;
        } else {
            all_reduce = false;
        }
        s.points.push_back(pt);
        gap.push_back(pt.z - zc);
        surv.push_back(pt.survival);
    }
    const double lo = *std::min_element(gap.begin(), gap.end());
    const double hi = *std::max_element(gap.begin(), gap.end());
    s.fit = fit_power_law(gap, surv, lo, hi);
    if (all_reduce) {
        s.oracle_fit = fit_power_law(gap, exact, lo, hi);
        s.oracle_slope = root * 2.0 * family.b * family.b / (family.b - 1.0);
    }
    const double a_star = find_critical_alpha(family, opt.crit_tol, opt.nodes);
    s.tee_formula = amplitudes(family.at(a_star), family.b, v, opt.nodes).tee;
    return s;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::infinite_for_large_v: return "infinite_for_large_v";
        case Verdict::finite_always: return "finite_always";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::marginal: return "marginal";
    }
    return "inconclusive";
}

PercolationVerdict percolation_verdict(const Measure& measure, int b) {
    const MeasureSummary s = summary(measure, b);
    PercolationVerdict r;
    r.theta_b = s.theta_b;
    r.mass_open = measure.mass(static_cast<double>(b - 1) / b, 1.0);
    r.mass_window = measure.mass(std::max(0.0, 1.0 - s.theta_b / b), 1.0);
    // masses equal to 1/b up to rounding count as equal
    const double edge = 1.0 / b + 1e-12;
    if (s.marginal) {
        r.verdict = Verdict::marginal;
    } else if (r.mass_open > edge) {
        r.verdict = Verdict::infinite_for_large_v;
    } else if (s.theta_b < 1.0 || r.mass_window <= edge) {
        r.verdict = Verdict::finite_always;
    } else {
        r.verdict = Verdict::inconclusive;
    }
    return r;
}

}  // namespace crit
