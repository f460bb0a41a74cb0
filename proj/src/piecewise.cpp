#include "crit/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crit {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

// integral of a linear segment from p.x0 to x (x within the piece)
double partial0(const Piece& p, double x) {
    const double d = x - p.x0;
    return 0.5 * d * (p.y0 + p.at(x));
}

// integral of t * f(t) from p.x0 to x; Simpson is exact for the quadratic integrand
double partial1(const Piece& p, double x) {
    const double d = x - p.x0;
    const double yx = p.at(x);
    return d / 6.0 * (p.x0 * (2.0 * p.y0 + yx) + x * (p.y0 + 2.0 * yx));
}

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const Piece& p = pieces_[i];
        if (!(p.x1 > p.x0) || !std::isfinite(p.x0) || !std::isfinite(p.x1) || !std::isfinite(p.y0) ||
            !std::isfinite(p.y1)) {
            throw std::invalid_argument("piecewise: degenerate or non-finite piece at index " +
                                        std::to_string(i));
        }
        if (i > 0 && p.x0 < pieces_[i - 1].x1) {
            throw std::invalid_argument("piecewise: pieces overlap or are unsorted at index " +
                                        std::to_string(i));
        }
    }
    cum0_.assign(pieces_.size() + 1, 0.0);
    cum1_.assign(pieces_.size() + 1, 0.0);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        cum0_[i + 1] = cum0_[i] + partial0(pieces_[i], pieces_[i].x1);
        cum1_[i + 1] = cum1_[i] + partial1(pieces_[i], pieces_[i].x1);
    }
    // contiguous equal-width pieces (the grid case) admit O(1) lookup; a single
    // leading piece of another width is allowed
    for (std::size_t from = 0; from < 2 && uniform_step_ == 0.0; ++from) {
        if (pieces_.size() < from + 2) break;
        const double w = pieces_[from].width();
        bool uniform = true;
        for (std::size_t i = from + 1; i < pieces_.size() && uniform; ++i) {
            uniform = pieces_[i].x0 == pieces_[i - 1].x1 && std::abs(pieces_[i].width() - w) <= 1e-9 * w;
        }
        if (uniform) {
            uniform_step_ = w;
            uniform_from_ = from;
        }
    }
}

double PiecewiseLinear::lo() const {
    return pieces_.empty() ? 0.0 : pieces_.front().x0;
}

double PiecewiseLinear::hi() const {
    return pieces_.empty() ? 0.0 : pieces_.back().x1;
}

std::size_t PiecewiseLinear::locate(double x) const {
    if (pieces_.empty() || x < pieces_.front().x0) return npos;
    if (uniform_step_ > 0.0 && x >= pieces_[uniform_from_].x0) {
        const double off = (x - pieces_[uniform_from_].x0) / uniform_step_;
        auto i = uniform_from_ + static_cast<std::size_t>(std::min(off, static_cast<double>(pieces_.size())));
        i = std::min(i, pieces_.size() - 1);
        // correct for rounding at cell edges
        while (i > uniform_from_ && x < pieces_[i].x0) --i;
        while (i + 1 < pieces_.size() && x >= pieces_[i + 1].x0) ++i;
        return i;
    }
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double v, const Piece& p) { return v < p.x0; });
    return static_cast<std::size_t>(it - pieces_.begin()) - 1;
}

double PiecewiseLinear::operator()(double x) const {
    const std::size_t i = locate(x);
    if (i == npos) return 0.0;
    const Piece& p = pieces_[i];
    if (x > p.x1) return 0.0;
    if (x == p.x1) return p.y1;
    return p.at(x);
}

double PiecewiseLinear::cumulative0(double x) const {
    const std::size_t i = locate(x);
    if (i == npos) return 0.0;
    const Piece& p = pieces_[i];
    return cum0_[i] + partial0(p, std::min(x, p.x1));
}

double PiecewiseLinear::cumulative1(double x) const {
    const std::size_t i = locate(x);
    if (i == npos) return 0.0;
    const Piece& p = pieces_[i];
    return cum1_[i] + partial1(p, std::min(x, p.x1));
}

double PiecewiseLinear::integral(double a, double c) const {
    if (c <= a) return 0.0;
    return cumulative0(c) - cumulative0(a);
}

double PiecewiseLinear::first_moment(double a, double c) const {
    if (c <= a) return 0.0;
    return cumulative1(c) - cumulative1(a);
}

double PiecewiseLinear::sup_abs() const {
    double m = 0.0;
    for (const auto& p : pieces_) m = std::max({m, std::abs(p.y0), std::abs(p.y1)});
    return m;
}

std::vector<double> PiecewiseLinear::breakpoints() const {
    std::vector<double> out;
    out.reserve(2 * pieces_.size());
    for (const auto& p : pieces_) {
        out.push_back(p.x0);
        out.push_back(p.x1);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

GridFunction::GridFunction(double lo, double hi, std::vector<double> values)
    : lo_(lo), hi_(hi), values_(std::move(values)) {
    if (!(lo_ < hi_)) throw std::invalid_argument("grid: require lo < hi");
    if (values_.size() < 2) throw std::invalid_argument("grid: require at least 2 nodes");
}

double GridFunction::node(std::size_t i) const {
    if (i + 1 == values_.size()) return hi_;
    return lo_ + static_cast<double>(i) * spacing();
}

bool GridFunction::contains(double x) const {
    const double slack = 1e-12 * std::max(1.0, hi_ - lo_);
    return x >= lo_ - slack && x <= hi_ + slack;
}

double GridFunction::operator()(double x) const {
    if (!contains(x)) {
        throw std::out_of_range("grid: evaluation at " + std::to_string(x) + " outside [" +
                                std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    }
    x = std::clamp(x, lo_, hi_);
    const double h = spacing();
    const std::size_t last = values_.size() - 1;
    auto i = static_cast<std::size_t>((x - lo_) / h);
    if (i >= last) return values_[last];
    const double t = (x - node(i)) / h;
    return values_[i] + t * (values_[i + 1] - values_[i]);
}

double GridFunction::integral(double a, double c) const {
    a = std::max(a, lo_);
    c = std::min(c, hi_);
    if (c <= a) return 0.0;
    return to_piecewise().integral(a, c);
}

double GridFunction::sup_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

PiecewiseLinear GridFunction::to_piecewise() const {
    std::vector<Piece> pieces;
    pieces.reserve(values_.size() - 1);
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        pieces.push_back({node(i), node(i + 1), values_[i], values_[i + 1]});
    }
    return PiecewiseLinear(std::move(pieces));
}

PiecewiseLinear StepProfile::as_piecewise(double from) const {
    std::vector<Piece> pieces;
    pieces.reserve(above.size());
    if (from < cut) pieces.push_back({from, cut, below, below});
    for (std::size_t i = 0; i + 1 < above.size(); ++i) {
        pieces.push_back({above.node(i), above.node(i + 1), above.values()[i], above.values()[i + 1]});
    }
    return PiecewiseLinear(std::move(pieces));
}

double sup_distance(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size() || a.lo() != b.lo() || a.hi() != b.hi()) {
        throw std::invalid_argument("sup_distance: grids differ");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double correlate(const PiecewiseLinear& F, const PiecewiseLinear& w, double k, double s, double x_lo) {
    double acc = 0.0;
    for (const Piece& p : w.pieces()) {
        const double a = std::max(p.x0, x_lo);
        const double c = p.x1;
        if (!(a < c)) continue;
        const double beta = p.slope();
        // w(x) = A + B u with u = k x + s
        const double A = p.y0 - beta * (p.x0 + s / k);
        const double B = beta / k;
        const double ua = k * a + s;
        const double uc = k * c + s;
        acc += (A * F.integral(ua, uc) + B * F.first_moment(ua, uc)) / k;
    }
    return acc;
}

double convolve_at(const PiecewiseLinear& f, const PiecewiseLinear& w, double b, double t) {
    double acc = 0.0;
    for (const Piece& p : w.pieces()) {
        const double beta = p.slope();
        const double qa = b * (t - p.x1);
        const double qc = b * (t - p.x0);
        // w(t - q/b) = C - (beta / b) q on this range
        const double C = p.y0 + beta * (t - p.x0);
        acc += C * f.integral(qa, qc) - beta / b * f.first_moment(qa, qc);
    }
    return acc;
}

double tail_transfer(const PiecewiseLinear& f, const PiecewiseLinear& w, double b, double c) {
    if (f.empty() || w.empty()) return 0.0;
    std::vector<double> cuts = f.breakpoints();
    for (double e : w.breakpoints()) {
        const double q = b * (c - e);
        if (q > f.lo() && q < f.hi()) cuts.push_back(q);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    static constexpr double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double wt = w.total();
    const double whi = w.hi();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double d = cuts[i + 1];
        const double mid = 0.5 * (a + d);
        const double half = 0.5 * (d - a);
        // f may jump at cuts; evaluate through the piece active at the midpoint
        double sub = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double q = mid + half * gx[j];
            const double fq = f(q);
            if (fq == 0.0) continue;
            const double lower = c - q / b;
            const double W = lower >= whi ? 0.0 : wt - w.integral(w.lo(), std::max(lower, w.lo()));
            sub += gw[j] * fq * W;
        }
        acc += half * sub;
    }
    return acc;
}

}  // namespace crit
