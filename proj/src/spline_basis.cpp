#include "monospline/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace monospline {

namespace {

constexpr int kMaxOrder = 4;
constexpr int kSimpsonPanels = 64;  // per knot interval; even

void check_index(const KnotVector& kv, int k) {
    if (k < 0 || k >= kv.basis_size()) {
        throw std::out_of_range("basis index " + std::to_string(k) + " outside [0, " +
                                std::to_string(kv.basis_size()) + ")");
    }
}

// Order-1 pieces are half-open [t_k, t_{k+1}) except the last non-empty
// interval, which also contains its right end so that x = 1 is covered.
bool in_unit_piece(std::span<const double> t, int k, double x) {
    const double lo = t[k];
    const double hi = t[k + 1];
    if (!(hi > lo)) return false;
    if (x >= lo && x < hi) return true;
    return x == hi && hi == t.back();
}

double mspline_rec(std::span<const double> t, int order, int k, double x) {
    if (order == 1) {
        return in_unit_piece(t, k, x) ? 1.0 / (t[k + 1] - t[k]) : 0.0;
    }
    const double lo = t[k];
    const double hi = t[k + order];
    if (x < lo || x > hi || !(hi > lo)) return 0.0;
    const double l = order;
    const double left = (x - lo) * mspline_rec(t, order - 1, k, x);
    const double right = (hi - x) * mspline_rec(t, order - 1, k + 1, x);
    return l * (left + right) / ((l - 1.0) * (hi - lo));
}

double bspline_rec(std::span<const double> t, int order, int k, double x) {
    if (order == 1) {
        return in_unit_piece(t, k, x) ? 1.0 : 0.0;
    }
    double value = 0.0;
    const double d1 = t[k + order - 1] - t[k];
    if (d1 > 0.0) value += (x - t[k]) / d1 * bspline_rec(t, order - 1, k, x);
    const double d2 = t[k + order] - t[k + 1];
    if (d2 > 0.0) value += (t[k + order] - x) / d2 * bspline_rec(t, order - 1, k + 1, x);
    return value;
}

double ispline_order2(std::span<const double> t, int k, double x) {
    const double t0 = t[k];
    const double t1 = t[k + 1];
    const double t2 = t[k + 2];
    if (x <= t0) return 0.0;
    if (x <= t1) return (x - t0) * (x - t0) / ((t1 - t0) * (t2 - t0));
    if (x <= t2) return 1.0 - (t2 - x) * (t2 - x) / ((t2 - t0) * (t2 - t1));
    return 1.0;
}

double simpson(std::span<const double> t, int order, int k, double a, double b) {
    if (!(b > a)) return 0.0;
    const double h = (b - a) / kSimpsonPanels;
    double sum = mspline_rec(t, order, k, a) + mspline_rec(t, order, k, b);
    for (int i = 1; i < kSimpsonPanels; ++i) {
        sum += (i % 2 == 1 ? 4.0 : 2.0) * mspline_rec(t, order, k, a + i * h);
    }
    return sum * h / 3.0;
}

}  // namespace

KnotVector::KnotVector(int order, int interior_count, std::vector<double> knots)
    : order_(order), interior_count_(interior_count), knots_(std::move(knots)) {
    if (order < 1 || order > kMaxOrder) {
        throw std::invalid_argument("spline order must be in [1, 4]");
    }
    if (interior_count < 0) throw std::invalid_argument("interior knot count must be >= 0");
    if (knots_.size() != static_cast<std::size_t>(interior_count + 2 * order)) {
        throw std::invalid_argument("knot vector length must be K + 2l");
    }
    for (int i = 0; i < order; ++i) {
        if (knots_[i] != 0.0 || knots_[knots_.size() - 1 - i] != 1.0) {
            throw std::invalid_argument("boundary knots must be repeated order times at 0 and 1");
        }
    }
    for (int i = order; i < order + interior_count; ++i) {
        if (!(knots_[i] > 0.0 && knots_[i] < 1.0)) {
            throw std::invalid_argument("interior knots must lie strictly inside (0,1)");
        }
    }
    if (!std::is_sorted(knots_.begin(), knots_.end())) {
        throw std::invalid_argument("knots must be nondecreasing");
    }
}

KnotVector make_knots(int interior_count, int order) {
    if (interior_count < 0 || order < 1) {
        throw std::invalid_argument("make_knots requires K >= 0 and l >= 1");
    }
    std::vector<double> t(static_cast<std::size_t>(interior_count + 2 * order));
    for (int i = 0; i < order; ++i) {
        t[i] = 0.0;
        t[t.size() - 1 - i] = 1.0;
    }
    for (int i = 1; i <= interior_count; ++i) {
        t[order + i - 1] = static_cast<double>(i) / (interior_count + 1);
    }
    return KnotVector(order, interior_count, std::move(t));
}

double mspline_eval(const KnotVector& kv, int k, double x) {
    check_index(kv, k);
    return mspline_rec(kv.knots(), kv.order(), k, x);
}

double ispline_eval(const KnotVector& kv, int k, double x) {
    check_index(kv, k);
    const auto t = kv.knots();
    const int l = kv.order();
    if (l == 2) return ispline_order2(t, k, x);

    if (x <= t[k]) return 0.0;
    if (x >= t[k + l]) return 1.0;
    // M-splines are polynomial between knots, so integrate piece by piece.
    double total = 0.0;
    for (int i = k; i < k + l; ++i) {
        const double a = t[i];
        const double b = std::min(t[i + 1], x);
        if (b <= a) continue;
        total += simpson(t, l, k, a, b);
        if (b == x) break;
    }
    return std::clamp(total, 0.0, 1.0);
}

double bspline_eval(const KnotVector& kv, int k, double x) {
    check_index(kv, k);
    return bspline_rec(kv.knots(), kv.order(), k, x);
}

const char* to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::ispline: return "ispline";
        case BasisKind::bspline: return "bspline";
        case BasisKind::identity: return "identity";
    }
    return "unknown";
}

BasisKind basis_kind_from_string(const std::string& name) {
    if (name == "ispline") return BasisKind::ispline;
    if (name == "bspline") return BasisKind::bspline;
    if (name == "identity") return BasisKind::identity;
    throw std::invalid_argument("unknown basis kind '" + name + "'");
}

BasisSpec BasisSpec::ispline(int interior_count, int order) {
    return {BasisKind::ispline, make_knots(interior_count, order)};
}

BasisSpec BasisSpec::bspline(int interior_count, int order) {
    return {BasisKind::bspline, make_knots(interior_count, order)};
}

BasisSpec BasisSpec::identity() { return {BasisKind::identity, std::nullopt}; }

int BasisSpec::size() const {
    if (kind == BasisKind::identity) return 1;
    return knots->basis_size();
}

void BasisSpec::evaluate(double x, std::span<double> out) const {
    switch (kind) {
        case BasisKind::identity:
            out[0] = x;
            return;
        case BasisKind::ispline:
            for (int k = 0; k < knots->basis_size(); ++k) out[k] = ispline_eval(*knots, k, x);
            return;
        case BasisKind::bspline:
            for (int k = 0; k < knots->basis_size(); ++k) out[k] = bspline_eval(*knots, k, x);
            return;
    }
}

double RescaleParams::apply(double x) const {
    return std::clamp((x - min) / (max - min), 0.0, 1.0);
}

std::pair<std::vector<double>, RescaleParams> rescale_to_unit(std::span<const double> column) {
    if (column.empty()) throw std::invalid_argument("empty column");
    RescaleParams p{column[0], column[0]};
    for (double v : column) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in column");
        p.min = std::min(p.min, v);
        p.max = std::max(p.max, v);
    }
    if (!(p.max > p.min)) {
        throw std::invalid_argument("constant column cannot be rescaled to [0,1]");
    }
    std::vector<double> out(column.size());
    std::transform(column.begin(), column.end(), out.begin(),
                   [&](double v) { return p.apply(v); });
    return {std::move(out), p};
}

}  // namespace monospline
