#include "crit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>

#include "CLI11.hpp"
#include "crit/acceptance.hpp"
#include "crit/config.hpp"
#include "crit/criticality.hpp"
#include "crit/dynamics.hpp"
#include "crit/errors.hpp"
#include "crit/fixedpoint.hpp"
#include "crit/oracles.hpp"
#include "crit/parallel.hpp"
#include "crit/survival.hpp"

namespace crit {

namespace {

namespace fs = std::filesystem;

std::string cell(double x) { return format_number(x); }
std::string cell(std::int64_t x) { return std::to_string(x); }
std::string cell(int x) { return std::to_string(x); }
std::string cell(std::size_t x) { return std::to_string(x); }
std::string cell(const char* s) { return s; }
std::string cell(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

// comma-separated, LF endings, resolved config as # comments
class Csv {
public:
    Csv(const fs::path& path, const std::string& command, const Config& cfg, const std::string& columns)
        : path_(path), f_(path, std::ios::binary) {
        if (!f_) throw std::runtime_error("cannot write " + path.string());
        f_ << "# crit-avalanche " << command << '\n';
        for (const auto& [k, v] : cfg.resolved) f_ << "# " << k << " = " << v << '\n';
        f_ << columns << '\n';
    }

    template <class... T>
    void row(const T&... xs) {
        bool first = true;
        ((f_ << (first ? "" : ",") << cell(xs), first = false), ...);
        f_ << '\n';
    }

    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream f_;
};

struct Context {
    Config cfg;
    fs::path out_dir;
    std::string command;
    std::ostream& out;
    std::ostream& err;

    Csv csv(const std::string& name, const std::string& columns) const {
        Csv c(out_dir / name, command, cfg, columns);
        err << "writing " << c.path().string() << '\n';
        return c;
    }
};

int env_workers(int fallback) {
    const char* s = std::getenv("CRIT_AVALANCHE_WORKERS");
    if (!s || !*s) return fallback;
    char* end = nullptr;
    const long w = std::strtol(s, &end, 10);
    if (*end != '\0' || w < 0 || w > 4096) {
        throw ValidationError(std::string("CRIT_AVALANCHE_WORKERS: expected a non-negative integer, got '") + s + "'");
    }
    return static_cast<int>(w);
}

void simulate(const Context& cx) {
    const Config& c = cx.cfg;
    const Measure& m = c.require_measure();
    const TailTable t = mc_tail(m, c.b, c.v, c.samples, c.depth_cap, c.seed, c.workers, c.tail_n_max);
    Csv tail = cx.csv("tail.csv", "n,p_ge_n,stderr");
    for (const TailRow& r : t.rows) tail.row(r.n, r.p, r.std_error);
    const ChiSurvival s = mc_chi_and_survival(m, c.b, c.v, c.samples, c.depth_cap, c.seed, c.workers, c.size_cap);
    Csv sum = cx.csv("summary.csv", "mean_size,stderr,trunc_frac,survival,survival_stderr");
    sum.row(s.mean_size, s.std_error, s.trunc_frac, s.survival, s.survival_stderr);
    cx.out << "mean_size " << cell(s.mean_size) << " +- " << cell(s.std_error) << "\nsurvival to depth "
           << c.depth_cap << ' ' << cell(s.survival) << "\ntruncated " << t.truncated << " of " << t.samples << '\n';
}

void zeta(const Context& cx) {
    const Config& c = cx.cfg;
    const ZetaResult z = z_of_rho(c.require_measure(), c.b, c.zeta_tol, c.nodes, c.zeta_iter_cap);
    Csv f = cx.csv("zeta.csv", "n,Z_theta1,Z_thetab,ratio1,ratio2");
    for (const ZetaRow& r : z.rows) f.row(r.n, r.Z_theta1, r.Z_thetab, r.ratio1, r.ratio2);
    cx.out << "z " << cell(z.z) << " +- " << cell(z.half_width) << " after " << z.iterations << " steps\n";
}

void psi_cmd(const Context& cx) {
    const Config& c = cx.cfg;
    const StepProfile p = psi(c.require_measure(), c.b, c.psi_theta_max, c.nodes);
    Csv f = cx.csv("psi.csv", "theta,psi");
    for (std::size_t i = 0; i < p.above.size(); ++i) f.row(p.above.node(i), p.above.values()[i]);
    cx.out << "psi(1) " << cell(p.above.values()[0]) << '\n';
}

void psi_v(const Context& cx) {
    const Config& c = cx.cfg;
    const Measure& m = c.require_measure();
    const PsiSequence s = psi_sequence(m, c.b, c.psi_theta_max, c.nodes, c.psi_n_max, c.psi_eps, c.fp_tol);
    Csv f = cx.csv("psi_v.csv", "n,theta,psi_n");
    for (std::size_t n = 0; n < s.iterates.size(); ++n) {
        const GridFunction& g = s.iterates[n];
        for (std::size_t i = 0; i < g.size(); ++i) f.row(n, g.node(i), g.values()[i]);
    }
    cx.out << "verdict " << to_string(s.verdict) << '\n';
    if (s.threshold) cx.out << "threshold " << cell(*s.threshold) << '\n';

    // empirical law of V_n against the grid
    if (static_cast<std::size_t>(c.vn_n) < s.iterates.size()) {
        std::vector<double> v = mc_vn(m, c.b, c.vn_n, c.samples, c.seed, c.workers);
        std::sort(v.begin(), v.end());
        const GridFunction& g = s.iterates[static_cast<std::size_t>(c.vn_n)];
        Csv e = cx.csv("vn.csv", "theta,ecdf,psi_n");
        double ks = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = g.node(i);
            const auto k = std::upper_bound(v.begin(), v.end(), t) - v.begin();
            const double ecdf = static_cast<double>(k) / static_cast<double>(v.size());
            ks = std::max(ks, std::abs(ecdf - g.values()[i]));
            e.row(t, ecdf, g.values()[i]);
        }
        cx.out << "ks_distance n=" << c.vn_n << ' ' << cell(ks) << '\n';
    }
}

void qinf(const Context& cx) {
    const Config& c = cx.cfg;
    const QLaw q = q_infinity(c.require_measure(), c.b, c.nodes, c.fp_tol, c.fp_iter_cap);
    Csv f = cx.csv("qinf.csv", "q,density");
    for (std::size_t i = 0; i < q.density.size(); ++i) f.row(q.density.node(i), q.density.values()[i]);
    Csv s = cx.csv("qinf_summary.csv", "z_hat,residual,iters");
    s.row(q.z_hat, q.residual, q.iterations);
    cx.out << "z_hat " << cell(q.z_hat) << " residual " << cell(q.residual) << " iterations " << q.iterations << '\n';
}

void binf(const Context& cx) {
    const Config& c = cx.cfg;
    const StepProfile B =
        b_infinity(c.require_measure(), c.b, c.lambda, c.psi_theta_max, c.nodes, c.fp_tol, c.fp_iter_cap);
    Csv f = cx.csv("binf.csv", "theta,B");
    for (std::size_t i = 0; i < B.above.size(); ++i) f.row(B.above.node(i), B.above.values()[i]);
    cx.out << "B(1) " << cell(B.above.values()[0]) << " below 1: " << cell(B.below) << '\n';
}

void chi(const Context& cx) {
    const Config& c = cx.cfg;
    const ChiResult r = chi_quadrature(c.require_measure(), c.b, c.v, c.chi_tol, c.nodes);
    Csv f = cx.csv("chi.csv", "v,z,chi,terms");
    f.row(c.v, r.z, r.value, r.terms);
    cx.out << "chi " << cell(r.value) << '\n';
}

void critical(const Context& cx) {
    const Config& c = cx.cfg;
    const MixtureFamily& fam = c.require_family();
    const double a_star = find_critical_alpha(fam, c.zeta_tol, c.nodes);
    Csv f = cx.csv("critical.csv", "alpha,z,chi,product");
    for (double a : c.alphas) {
        const ChiResult r = chi_quadrature(fam.at(a), fam.b, c.v, c.chi_tol, c.nodes);
        // the product is only defined below criticality
        std::optional<double> product;
        if (!r.infinite) product = r.value * (1.0 / fam.b - r.z);
        f.row(a, r.z, r.value, product);
    }
    cx.out << "alpha_critical " << cell(a_star) << '\n';
}

void summary_row(const Context& cx, const std::string& name, const ScalingFit& fit, double formula,
                 const std::optional<double>& oracle, const std::optional<double>& ratio) {
    Csv s = cx.csv(name, "exponent,stderr,amplitude,formula_value,oracle_value,ratio");
    s.row(fit.exponent, fit.stderr_exponent, fit.amplitude, formula, oracle, ratio);
    cx.out << "exponent " << cell(fit.exponent) << " +- " << cell(fit.stderr_exponent) << " amplitude "
           << cell(fit.amplitude) << " (r2 " << cell(fit.r2) << ", " << fit.points << " points in ["
           << cell(fit.window_lo) << ", " << cell(fit.window_hi) << "])\n";
}

void exponents(const Context& cx, const std::string& scan) {
    const Config& c = cx.cfg;
    if (scan == "gamma") {
        const GammaScan g = gamma_scan(c.require_family(), c.v, c.alphas, c.nodes, c.zeta_tol);
        Csv f = cx.csv("exponents_gamma.csv", "alpha,z,chi,product");
        for (const GammaPoint& p : g.points) f.row(p.alpha, p.z, p.chi, p.product);
        summary_row(cx, "exponents_gamma_summary.csv", g.fit, g.tau_formula, g.tau_empirical,
                    g.tau_empirical / g.tau_formula);
        cx.out << "tau_formula " << cell(g.tau_formula) << " tau_empirical " << cell(g.tau_empirical) << '\n';
    } else if (scan == "delta") {
        DeltaOptions o;
        o.samples = c.samples;
        o.seed = c.seed;
        o.workers = c.workers;
        o.depth_cap = c.depth_cap;
        o.n_lo = c.fit_lo;
        o.n_hi = c.fit_hi;
        o.fit_points = c.fit_points;
        o.crit_tol = c.crit_tol;
        o.nodes = c.nodes;
        const DeltaScan d = delta_scan(c.require_measure(), c.b, c.v, o);
        Csv f = cx.csv("exponents_delta.csv", "n,p_ge_n,stderr");
        for (const TailPoint& p : d.points) f.row(p.n, p.p, p.std_error);
        summary_row(cx, "exponents_delta_summary.csv", d.fit, d.theta_formula, d.oracle_amplitude, d.fit_ratio);
        cx.out << "theta_formula " << cell(d.theta_formula);
        if (d.formula_ratio) {
            cx.out << " oracle_asymptotic " << cell(*d.oracle_asymptotic) << " formula_ratio " << cell(*d.formula_ratio);
        }
        cx.out << "\ntruncated " << d.truncated << '\n';
    } else if (scan == "beta") {
        BetaOptions o;
        o.depth_proxy = c.depth_proxy;
        o.samples = c.samples;
        o.seed = c.seed;
        o.workers = c.workers;
        o.nodes = c.nodes;
        o.crit_tol = c.zeta_tol;
        const BetaScan s = beta_scan(c.require_family(), c.v, c.alphas, o);
        Csv f = cx.csv("exponents_beta.csv", "alpha,z,survival,stderr,oracle");
        for (const BetaPoint& p : s.points) f.row(p.alpha, p.z, p.survival, p.std_error, p.oracle);
        std::optional<double> ratio;
        if (s.oracle_slope) ratio = s.fit.amplitude / *s.oracle_slope;
        summary_row(cx, "exponents_beta_summary.csv", s.fit, s.tee_formula, s.oracle_slope, ratio);
        cx.out << "tee_formula " << cell(s.tee_formula);
        if (s.oracle_fit) {
            cx.out << " oracle fit: exponent " << cell(s.oracle_fit->exponent) << " amplitude "
                   << cell(s.oracle_fit->amplitude);
        }
        cx.out << '\n';
    } else {
        throw ValidationError("exponents: --scan must be gamma, delta or beta");
    }
}

void oracle(const Context& cx) {
    const Config& c = cx.cfg;
    const Measure& m = c.require_measure();
    if (c.oracle_kind == "zn") {
        const auto z = mc_z_profile(m, c.b, c.oracle_theta, c.oracle_n, c.samples, c.seed, c.workers);
        Csv f = cx.csv("oracle_zn.csv", "n,Z,stderr");
        for (std::size_t n = 0; n < z.size(); ++n) f.row(n, z[n].value, z[n].std_error);
        return;
    }
    const auto red = percolation_reduction(m, c.b, c.v);
    if (!red) throw ValidationError("oracle: measure does not reduce to a Galton-Watson cluster at this v");
    if (c.oracle_kind == "tail") {
        const std::vector<double> t = otter_dwass_tail(red->spec, static_cast<int>(c.tail_n_max));
        Csv f = cx.csv("oracle_tail.csv", "n,p_ge_n,stderr");
        for (std::size_t i = 0; i < t.size(); ++i) f.row(i + 1, red->root * t[i], 0.0);
    } else {
        const double s = red->root * gw_survival(red->spec, 1e-14);
        Csv f = cx.csv("oracle_survival.csv", "p,root,survival");
        f.row(red->spec.p, red->root, s);
        cx.out << "survival " << cell(s) << '\n';
    }
}

void verdict(const Context& cx) {
    const Config& c = cx.cfg;
    const PercolationVerdict v = percolation_verdict(c.require_measure(), c.b);
    Csv f = cx.csv("verdict.csv", "verdict,theta_b,mass_open,mass_window");
    f.row(to_string(v.verdict), v.theta_b, v.mass_open, v.mass_window);
    cx.out << to_string(v.verdict) << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Avalanche criticality on directed b-ary trees", "crit-avalanche"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::string scan;
    std::string level = "fast";

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "Monte Carlo avalanche tail and summary"},
        {"zeta", "z(rho) by the backward recursion"},
        {"psi", "limit profile psi on [1, theta_max]"},
        {"psi-v", "Psi_n sequence and V_n check"},
        {"qinf", "stationary conditioned law Q_infinity"},
        {"binf", "external-field fixed point B_infinity"},
        {"chi", "expected avalanche size by quadrature"},
        {"critical", "critical alpha and chi along a family"},
        {"exponents", "gamma, delta or beta scan"},
        {"oracle", "exact or brute-force reference values"},
        {"verdict", "percolation classification"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        if (name == "exponents") sub->add_option("--scan", scan, "gamma | delta | beta")->required();
    }
    CLI::App* self = app.add_subcommand("selftest", "closed-form checks (fast) or the acceptance suite (full)");
    self->add_option("--level", level, "fast | full")->check(CLI::IsMember({"fast", "full"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kExitInvalid;
    }

    if (self->parsed()) {
        try {
            const int workers = env_workers(0);
            const auto results = level == "fast" ? run_fast_checks(out) : run_acceptance({}, workers, out);
            const bool ok = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
            return ok ? kExitOk : kExitFailed;
        } catch (const ValidationError& e) {
            err << "error: " << e.what() << '\n';
            return kExitInvalid;
        }
    }

    const std::string command = app.get_subcommands().front()->get_name();
    fs::path dir(out_dir);
    try {
        Config cfg = load_config(config_path);
        cfg.workers = env_workers(cfg.workers);
        err << "workers: " << resolve_workers(cfg.workers) << '\n';
        fs::create_directories(dir);
        const Context cx{std::move(cfg), dir, command, out, err};
        if (command == "simulate") simulate(cx);
        else if (command == "zeta") zeta(cx);
        else if (command == "psi") psi_cmd(cx);
        else if (command == "psi-v") psi_v(cx);
        else if (command == "qinf") qinf(cx);
        else if (command == "binf") binf(cx);
        else if (command == "chi") chi(cx);
        else if (command == "critical") critical(cx);
        else if (command == "exponents") exponents(cx, scan);
        else if (command == "oracle") oracle(cx);
        else if (command == "verdict") verdict(cx);
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ConvergenceError& e) {
        err << "no convergence: " << e.what() << '\n';
        std::error_code ec;
        fs::create_directories(dir, ec);
        std::ofstream d(dir / "diagnostics.txt", std::ios::binary);
        d << "command = " << command << "\nmessage = " << e.what() << "\nlast_change = " << format_number(e.last_change())
          << "\niterations = " << e.iterations() << '\n';
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailed;
    }
}

}  // namespace crit
