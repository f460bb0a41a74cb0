#include "crit/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "crit/errors.hpp"

namespace crit {

std::string format_number(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto c = s.find_last_not_of(" \t\r");
    return s.substr(a, c - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end;
}

bool is_repeatable(const std::string& key) {
    auto last = key.substr(key.rfind('.') == std::string::npos ? 0 : key.rfind('.') + 1);
    return last == "piece" || last == "atom";
}

class Reader {
public:
    std::map<std::string, std::string> single;
    std::map<std::string, std::vector<std::string>> repeated;
    std::set<std::string> used;
    std::vector<std::string> errors;
    std::map<std::string, std::string> resolved;

    [[nodiscard]] bool has(const std::string& k) const { return single.count(k) || repeated.count(k); }

    std::optional<std::string> raw(const std::string& k) {
        used.insert(k);
        auto it = single.find(k);
        if (it == single.end()) return std::nullopt;
        return it->second;
    }

    template <class T>
    void get(const std::string& k, T& out, bool required = false) {
        const auto s = raw(k);
        if (!s) {
            if (required) {
                errors.push_back("missing required key '" + k + "'");
            } else {
                record(k, out);
            }
            return;
        }
        T v{};
        if (!parse_number(*s, v)) {
            errors.push_back("key '" + k + "': cannot read '" + *s + "' as " +
                             (std::is_integral_v<T> ? "an integer" : "a number"));
            return;
        }
        out = v;
        record(k, out);
    }

    void get_string(const std::string& k, std::string& out) {
        if (const auto s = raw(k)) out = *s;
        resolved[k] = out;
    }

    std::vector<std::string> list(const std::string& k) {
        used.insert(k);
        auto it = repeated.find(k);
        return it == repeated.end() ? std::vector<std::string>{} : it->second;
    }

    template <class T>
    void record(const std::string& k, const T& v) {
        if constexpr (std::is_floating_point_v<T>) {
            resolved[k] = format_number(v);
        } else {
            resolved[k] = std::to_string(v);
        }
    }

    void check(bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    }
};

std::optional<Measure> read_measure(Reader& r, const std::string& prefix, int b, int depth = 0) {
    const std::string kind_key = prefix + ".kind";
    const auto kind = r.raw(kind_key);
    if (!kind) {
        r.errors.push_back("missing required key '" + kind_key + "'");
        return std::nullopt;
    }
    r.resolved[kind_key] = *kind;
    const std::size_t before = r.errors.size();
    try {
        if (*kind == "uniform") {
            double lo = 0.0;
            double hi = 1.0;
            r.get(prefix + ".lo", lo);
            r.get(prefix + ".hi", hi);
            if (r.errors.size() != before) return std::nullopt;
            return uniform_measure(lo, hi);
        }
        if (*kind == "gap") {
            double x_star = 0.0;
            double p = 0.0;
            double low_cap = 0.0;
            r.get(prefix + ".x_star", x_star, true);
            r.get(prefix + ".p", p, true);
            if (r.has(prefix + ".low_cap")) r.get(prefix + ".low_cap", low_cap);
            if (r.errors.size() != before) return std::nullopt;
            return gap_measure(b, x_star, p, low_cap);
        }
        if (*kind == "piecewise") {
            // the top-level measure takes bare `piece` and `atom` lines
            const std::string lp = prefix == "measure" ? "" : prefix + ".";
            std::vector<Piece> pieces;
            std::vector<Atom> atoms;
            int idx = 0;
            for (const std::string& line : r.list(lp + "piece")) {
                const auto f = split(line, ',');
                double v[4];
                bool ok = f.size() == 4;
                for (std::size_t i = 0; ok && i < 4; ++i) ok = parse_number(f[i], v[i]);
                if (!ok) {
                    r.errors.push_back("'" + lp + "piece' #" + std::to_string(idx) + ": expected left,right,fleft,fright");
                } else {
                    pieces.push_back({v[0], v[1], v[2], v[3]});
                }
                r.resolved[lp + "piece." + std::to_string(idx++)] = line;
            }
            idx = 0;
            for (const std::string& line : r.list(lp + "atom")) {
                const auto f = split(line, ',');
                double v[2];
                bool ok = f.size() == 2;
                for (std::size_t i = 0; ok && i < 2; ++i) ok = parse_number(f[i], v[i]);
                if (!ok) {
                    r.errors.push_back("'" + lp + "atom' #" + std::to_string(idx) + ": expected x,mass");
                } else {
                    atoms.push_back({v[0], v[1]});
                }
                r.resolved[lp + "atom." + std::to_string(idx++)] = line;
            }
            if (pieces.empty() && atoms.empty()) r.errors.push_back(prefix + ": piecewise measure has no pieces or atoms");
            if (r.errors.size() != before) return std::nullopt;
            return Measure(std::move(pieces), std::move(atoms));
        }
        if (*kind == "mix") {
            if (depth > 4) {
                r.errors.push_back(prefix + ": mixtures nested too deeply");
                return std::nullopt;
            }
            double alpha = 0.0;
            r.get(prefix + ".alpha", alpha, true);
            auto m0 = read_measure(r, prefix + ".0", b, depth + 1);
            auto m1 = read_measure(r, prefix + ".1", b, depth + 1);
            if (r.errors.size() != before || !m0 || !m1) return std::nullopt;
            return mix(*m0, *m1, alpha);
        }
        r.errors.push_back("key '" + kind_key + "': unknown kind '" + *kind + "' (uniform, gap, piecewise, mix)");
    } catch (const ValidationError& e) {
        r.errors.push_back(prefix + ": " + e.what());
    }
    return std::nullopt;
}

}  // namespace

const Measure& Config::require_measure() const {
    if (!measure) throw ValidationError("this subcommand needs a measure (measure.kind)");
    return *measure;
}

const MixtureFamily& Config::require_family() const {
    if (!family) throw ValidationError("this subcommand needs a family (family.0.kind, family.1.kind)");
    return *family;
}

Config parse_config(const std::string& text) {
    Reader r;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            r.errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            r.errors.push_back("line " + std::to_string(lineno) + ": empty key or value");
            continue;
        }
        if (is_repeatable(key)) {
            r.repeated[key].push_back(value);
        } else if (!r.single.emplace(key, value).second) {
            r.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }

    Config c;
    r.get("b", c.b, true);
    r.get("seed", c.seed, true);
    r.get("v", c.v);
    r.get("samples", c.samples);
    r.get("depth_cap", c.depth_cap);
    r.get("size_cap", c.size_cap);
    r.get("workers", c.workers);
    r.get("grid.nodes", c.nodes);
    r.get("zeta.tol", c.zeta_tol);
    r.get("zeta.iter_cap", c.zeta_iter_cap);
    r.get("fp.tol", c.fp_tol);
    r.get("fp.iter_cap", c.fp_iter_cap);
    r.get("lambda", c.lambda);
    r.get("chi.tol", c.chi_tol);
    r.get("psi.theta_max", c.psi_theta_max);
    r.get("psi.n_max", c.psi_n_max);
    r.get("psi.eps", c.psi_eps);
    r.get("vn.n", c.vn_n);
    r.get("tail.n_max", c.tail_n_max);
    r.get("fit.lo", c.fit_lo);
    r.get("fit.hi", c.fit_hi);
    r.get("fit.points", c.fit_points);
    r.get("depth_proxy", c.depth_proxy);
    r.get("crit.tol", c.crit_tol);
    r.get_string("oracle.kind", c.oracle_kind);
    r.get("oracle.theta", c.oracle_theta);
    r.get("oracle.n", c.oracle_n);
    r.resolved.erase("workers");

    r.check(c.b >= 2, "key 'b': require b >= 2");
    r.check(c.v > 0.0, "key 'v': require v > 0");
    r.check(c.samples >= 1, "key 'samples': require samples >= 1");
    r.check(c.depth_cap >= 1, "key 'depth_cap': require depth_cap >= 1");
    r.check(c.size_cap >= 1, "key 'size_cap': require size_cap >= 1");
    r.check(c.workers >= 0, "key 'workers': require workers >= 0");
    r.check(c.nodes >= 3, "key 'grid.nodes': require at least 3 nodes");
    for (const auto& [k, x] : {std::pair{"zeta.tol", c.zeta_tol}, {"fp.tol", c.fp_tol}, {"chi.tol", c.chi_tol},
                               {"psi.eps", c.psi_eps}, {"crit.tol", c.crit_tol}}) {
        r.check(x > 0.0, std::string("key '") + k + "': require a positive tolerance");
    }
    r.check(c.zeta_iter_cap >= 2, "key 'zeta.iter_cap': require at least 2");
    r.check(c.fp_iter_cap >= 1, "key 'fp.iter_cap': require at least 1");
    r.check(c.lambda >= 0.0 && c.lambda <= 1.0, "key 'lambda': require 0 <= lambda <= 1");
    r.check(c.psi_theta_max >= 0.0, "key 'psi.theta_max': require >= 0");
    r.check(c.psi_n_max >= 1, "key 'psi.n_max': require >= 1");
    r.check(c.vn_n >= 1, "key 'vn.n': require >= 1");
    r.check(c.tail_n_max >= 1 && c.tail_n_max <= 100'000, "key 'tail.n_max': require 1 <= n_max <= 100000");
    r.check(c.fit_lo >= 1.0 && c.fit_hi > c.fit_lo, "keys 'fit.lo', 'fit.hi': require 1 <= lo < hi");
    r.check(c.fit_hi <= 100'000, "key 'fit.hi': require <= 100000");
    r.check(c.fit_points >= 3, "key 'fit.points': require at least 3");
    r.check(c.depth_proxy >= 1, "key 'depth_proxy': require >= 1");
    r.check(c.oracle_kind == "tail" || c.oracle_kind == "zn" || c.oracle_kind == "survival",
            "key 'oracle.kind': expected tail, zn or survival");
    r.check(c.oracle_n >= 0, "key 'oracle.n': require >= 0");
    r.check(c.oracle_theta >= 0.0, "key 'oracle.theta': require >= 0");

    const int b = c.b >= 2 ? c.b : 2;
    if (r.has("measure.kind")) c.measure = read_measure(r, "measure", b);
    if (r.has("family.0.kind") || r.has("family.1.kind")) {
        auto m0 = read_measure(r, "family.0", b);
        auto m1 = read_measure(r, "family.1", b);
        if (m0 && m1) c.family = MixtureFamily{*m0, *m1, b};
    }
    if (const auto s = r.raw("scan.alphas")) {
        for (const std::string& f : split(*s, ',')) {
            double a = 0.0;
            if (!parse_number(f, a) || !(a >= 0.0 && a <= 1.0)) {
                r.errors.push_back("key 'scan.alphas': '" + f + "' is not a number in [0,1]");
            } else {
                c.alphas.push_back(a);
            }
        }
        r.resolved["scan.alphas"] = *s;
    }

    for (const auto& [k, v] : r.single) {
        if (!r.used.count(k)) r.errors.push_back("unknown key '" + k + "'");
    }
    for (const auto& [k, v] : r.repeated) {
        if (!r.used.count(k)) r.errors.push_back("unknown key '" + k + "'");
    }
    if (!r.errors.empty()) {
        std::string msg;
        for (const std::string& e : r.errors) msg += (msg.empty() ? "" : "\n") + e;
        throw ValidationError(msg);
    }
    c.resolved = std::move(r.resolved);
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace crit
