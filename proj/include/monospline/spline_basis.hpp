#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace monospline {

// Clamped knot sequence on [0,1]: `order` copies of 0, `interior_count`
// interior knots, `order` copies of 1. Basis functions are indexed 0..m-1
// with m = interior_count + order; function k is supported on
// [knots[k], knots[k + order]].
class KnotVector {
public:
    KnotVector(int order, int interior_count, std::vector<double> knots);

    int order() const { return order_; }
    int interior_count() const { return interior_count_; }
    int basis_size() const { return interior_count_ + order_; }

    std::span<const double> knots() const { return knots_; }
    double operator[](std::size_t i) const { return knots_[i]; }
    std::size_t size() const { return knots_.size(); }

private:
    int order_;
    int interior_count_;
    std::vector<double> knots_;
};

// Interior knots at i/(K+1), i = 1..K.
KnotVector make_knots(int interior_count, int order);

// M-spline of the knot vector's order. Zero outside its support.
double mspline_eval(const KnotVector& kv, int k, double x);

// Integral of mspline_eval from 0 to x. Closed form for order 2, piecewise
// Simpson quadrature of the M-spline otherwise.
double ispline_eval(const KnotVector& kv, int k, double x);

// Normalized B-spline (Cox-de Boor). Sums to one on [0,1].
double bspline_eval(const KnotVector& kv, int k, double x);

enum class BasisKind { ispline, bspline, identity };

const char* to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

struct BasisSpec {
    BasisKind kind = BasisKind::ispline;
    std::optional<KnotVector> knots;  // absent for identity

    static BasisSpec ispline(int interior_count = 6, int order = 2);
    // Quadratic B-splines are order 3.
    static BasisSpec bspline(int interior_count = 6, int order = 3);
    static BasisSpec identity();

    int size() const;

    // Writes all basis values at x (already in [0,1]) into out[0..size()).
    void evaluate(double x, std::span<double> out) const;
};

struct RescaleParams {
    double min = 0.0;
    double max = 1.0;

    // Min-max map, clamped to [0,1].
    double apply(double x) const;
};

// Min-max transform of a training column. Throws std::invalid_argument for a
// constant or non-finite column.
std::pair<std::vector<double>, RescaleParams> rescale_to_unit(std::span<const double> column);

}  // namespace monospline
