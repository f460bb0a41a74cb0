#include "crit/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crit/errors.hpp"

namespace crit {

namespace {

constexpr double kMassTolerance = 1e-12;

double piece_mass(const Piece& p) { return 0.5 * p.width() * (p.y0 + p.y1); }

// Offset t in [0, width] at which the piece has accumulated mass r.
double invert_piece(const Piece& p, double r) {
    const double s = p.slope();
    double t = 0.0;
    if (std::abs(s) * p.width() <= 1e-14 * std::max(p.y0, p.y1)) {
        t = r / p.y0;
    } else {
        const double disc = std::max(0.0, p.y0 * p.y0 + 2.0 * s * r);
        const double denom = p.y0 + std::sqrt(disc);
        t = denom > 0.0 ? 2.0 * r / denom : p.width();
    }
    return std::clamp(t, 0.0, p.width());
}

}  // namespace

Measure::Measure(std::vector<Piece> pieces, std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const Piece& p : pieces) {
        if (p.x0 < 0.0 || p.x1 > 1.0) throw ValidationError("measure: piece outside [0,1]");
        if (p.y0 < 0.0 || p.y1 < 0.0) throw ValidationError("measure: negative density value");
    }
    try {
        density_ = PiecewiseLinear(std::move(pieces));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("measure: ") + e.what());
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& c) { return a.x < c.x; });
    for (const Atom& a : atoms_) {
        if (!(a.x >= 0.0 && a.x <= 1.0)) throw ValidationError("measure: atom outside [0,1]");
        if (!(a.mass > 0.0)) throw ValidationError("measure: atom mass must be positive");
    }

    double total = density_.total();
    for (const Atom& a : atoms_) total += a.mass;
    if (std::abs(total - 1.0) > kMassTolerance) {
        throw ValidationError("measure: total mass " + std::to_string(total) + " differs from 1");
    }

    // Sampling order: by position; an atom sits before a piece that starts at its location.
    struct Entry {
        double key;
        int order;
        int piece;
        double atom_x;
        double mass;
    };
    std::vector<Entry> entries;
    const auto ps = density_.pieces();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double m = piece_mass(ps[i]);
        if (m > 0.0) entries.push_back({ps[i].x0, 1, static_cast<int>(i), 0.0, m});
    }
    for (const Atom& a : atoms_) entries.push_back({a.x, 0, -1, a.x, a.mass});
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& c) {
        return a.key < c.key || (a.key == c.key && a.order < c.order);
    });
    double cum = 0.0;
    for (const Entry& e : entries) {
        cum += e.mass;
        segments_.push_back({cum, e.mass, e.piece, e.atom_x});
    }
}

double Measure::density_sup() const {
    if (has_atoms()) return std::numeric_limits<double>::infinity();
    return density_.sup_abs();
}

double Measure::support_lo() const {
    double lo = 1.0;
    for (const Piece& p : density_.pieces()) {
        if (p.y0 > 0.0 || p.y1 > 0.0) {
            lo = std::min(lo, p.x0);
            break;
        }
    }
    for (const Atom& a : atoms_) lo = std::min(lo, a.x);
    return lo;
}

double Measure::support_hi() const {
    double hi = 0.0;
    for (const Piece& p : density_.pieces()) {
        if (p.y0 > 0.0 || p.y1 > 0.0) hi = std::max(hi, p.x1);
    }
    for (const Atom& a : atoms_) hi = std::max(hi, a.x);
    return hi;
}

double Measure::mass(double a, double c, bool include_left, bool include_right) const {
    if (c < a) throw ValidationError("mass: require a <= b");
    double m = density_.integral(a, c);
    for (const Atom& at : atoms_) {
        const bool inside = (at.x > a && at.x < c) || (at.x == a && include_left) ||
                            (at.x == c && include_right);
        if (inside) m += at.mass;
    }
    return m;
}

double Measure::sample(double u) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), u,
                               [](double v, const Segment& s) { return v < s.cum_after; });
    if (it == segments_.end()) --it;  // u rounded past the final CDF value
    if (it->piece < 0) return it->atom_x;
    const Piece& p = density_.pieces()[static_cast<std::size_t>(it->piece)];
    const double r = std::clamp(u - (it->cum_after - it->mass), 0.0, it->mass);
    return p.x0 + invert_piece(p, r);
}

Measure uniform_measure(double lo, double hi) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
        throw ValidationError("uniform_measure: require 0 <= lo < hi <= 1");
    }
    const double d = 1.0 / (hi - lo);
    return Measure({{lo, hi, d, d}});
}

Measure gap_measure(int b, double x_star, double p, double low_cap) {
    if (b < 2) throw ValidationError("gap_measure: require b >= 2");
    const double top = static_cast<double>(b - 1) / b;
    if (!(x_star > top && x_star <= 1.0)) {
        throw ValidationError("gap_measure: require (b-1)/b < x_star <= 1");
    }
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("gap_measure: require 0 < p <= 1");
    const double theta_b = b * x_star / (b - 1);
    const double gap_lo = 1.0 - theta_b / b;
    if (!(low_cap >= 0.0)) throw ValidationError("gap_measure: require low_cap >= 0");
    // with p = 1 there is no low block, so the gap condition is vacuous
    if (p < 1.0 && !(low_cap < gap_lo)) {
        throw ValidationError("gap_measure: low_cap " + std::to_string(low_cap) +
                              " violates the gap condition low_cap < 1 - theta_b/b = " +
                              std::to_string(gap_lo));
    }
    std::vector<Piece> pieces;
    if (p < 1.0) {
        if (!(low_cap > 0.0)) throw ValidationError("gap_measure: p < 1 requires low_cap > 0");
        const double d = (1.0 - p) / low_cap;
        pieces.push_back({0.0, low_cap, d, d});
    }
    const double d = p / (x_star - top);
    pieces.push_back({top, x_star, d, d});
    return Measure(std::move(pieces));
}

Measure mix(const Measure& rho0, const Measure& rho1, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("mix: require 0 <= alpha <= 1");
    if (alpha == 0.0) return rho0;
    if (alpha == 1.0) return rho1;

    const auto& d0 = rho0.density();
    const auto& d1 = rho1.density();
    std::vector<double> cuts = d0.breakpoints();
    for (double x : d1.breakpoints()) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // value of f on (l, r) extended to the endpoints, via the piece covering the midpoint
    auto ends = [](const PiecewiseLinear& f, double l, double r) -> std::pair<double, double> {
        const double m = 0.5 * (l + r);
        for (const Piece& p : f.pieces()) {
            if (p.x0 <= m && m <= p.x1) return {p.at(l), p.at(r)};
        }
        return {0.0, 0.0};
    };

    std::vector<Piece> pieces;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double l = cuts[i];
        const double r = cuts[i + 1];
        const auto [a0, a1] = ends(d0, l, r);
        const auto [c0, c1] = ends(d1, l, r);
        const double y0 = (1.0 - alpha) * a0 + alpha * c0;
        const double y1 = (1.0 - alpha) * a1 + alpha * c1;
        if (y0 == 0.0 && y1 == 0.0) continue;
        pieces.push_back({l, r, std::max(0.0, y0), std::max(0.0, y1)});
    }

    std::vector<Atom> atoms;
    for (const Atom& a : rho0.atoms()) atoms.push_back({a.x, (1.0 - alpha) * a.mass});
    for (const Atom& a : rho1.atoms()) {
        auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Atom& e) { return e.x == a.x; });
        if (it != atoms.end()) {
            it->mass += alpha * a.mass;
        } else {
            atoms.push_back({a.x, alpha * a.mass});
        }
    }
    return Measure(std::move(pieces), std::move(atoms));
}

MeasureSummary summary(const Measure& measure, int b) {
    if (b < 2) throw ValidationError("summary: require b >= 2");
    MeasureSummary s;
    s.x_star = measure.support_hi();
    s.theta_b = static_cast<double>(b) / (b - 1) * s.x_star;
    s.density_sup = measure.density_sup();
    s.mass_top = measure.mass(1.0 - 1.0 / b, 1.0);
    s.mflat = !measure.has_atoms() && std::isfinite(s.density_sup) && s.mass_top > 0.0;
    s.marginal = std::abs(s.x_star - (1.0 - 1.0 / b)) <= 1e-12;
    return s;
}

void require_flat(const Measure& measure, int b, const char* operation) {
    const MeasureSummary s = summary(measure, b);
    if (s.marginal) {
        throw NotFlatError(std::string(operation) + ": marginal measure (theta_b = 1) is not supported");
    }
    if (measure.has_atoms()) throw NotFlatError(std::string(operation) + ": measure has atoms");
    if (!s.mflat) {
        throw NotFlatError(std::string(operation) + ": measure puts no mass on [1-1/b, 1]");
    }
}

}  // namespace crit
