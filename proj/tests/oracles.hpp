#pragma once

// Independent reference computations used by the tests.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace oracle {

inline nlohmann::json load_fixture(const std::string& name) {
    std::ifstream in(std::string(MONOSPLINE_TEST_DATA) + "/" + name);
    if (!in) throw std::runtime_error("missing fixture " + name);
    nlohmann::json j;
    in >> j;
    return j;
}

// Composite Simpson on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (b <= a) return 0.0;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Simpson over [a, b] split at the given breakpoints, so that each piece is
// smooth. Piece endpoints are evaluated just inside the piece, which gives
// the one-sided limits of functions that jump at a breakpoint.
inline double simpson_piecewise(const std::function<double(double)>& f, double a, double b,
                                std::vector<double> breaks, int panels = 4096) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(a, breaks[i]);
        const double hi = std::min(b, breaks[i + 1]);
        if (hi <= lo) continue;
        const double in_lo = std::nextafter(lo, hi);
        const double in_hi = std::nextafter(hi, lo);
        const auto inside = [&](double x) { return f(std::clamp(x, in_lo, in_hi)); };
        total += simpson(inside, lo, hi, panels);
    }
    return total;
}

// Nelder-Mead with restarts. Fine for a handful of dimensions.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd x0, double step = 0.5, double tol = 1e-15,
                                   int max_iter = 200000, int restarts = 8) {
    const Eigen::Index d = x0.size();
    for (int r = 0; r < restarts; ++r) {
        std::vector<Eigen::VectorXd> s(d + 1, x0);
        std::vector<double> fs(d + 1);
        for (Eigen::Index i = 0; i < d; ++i) s[i + 1][i] += step;
        for (Eigen::Index i = 0; i <= d; ++i) fs[i] = f(s[i]);
        for (int it = 0; it < max_iter; ++it) {
            std::vector<Eigen::Index> idx(d + 1);
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
            std::vector<Eigen::VectorXd> s2;
            std::vector<double> f2;
            for (auto i : idx) {
                s2.push_back(s[i]);
                f2.push_back(fs[i]);
            }
            s = s2;
            fs = f2;
            if (std::abs(fs[d] - fs[0]) <= tol * (1.0 + std::abs(fs[0]))) {
                double spread = 0.0;
                for (Eigen::Index i = 1; i <= d; ++i) spread = std::max(spread, (s[i] - s[0]).cwiseAbs().maxCoeff());
                if (spread < 1e-12) break;
            }
            Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
            for (Eigen::Index i = 0; i < d; ++i) c += s[i];
            c /= static_cast<double>(d);
            const Eigen::VectorXd xr = c + (c - s[d]);
            const double fr = f(xr);
            if (fr < fs[0]) {
                const Eigen::VectorXd xe = c + 2.0 * (c - s[d]);
                const double fe = f(xe);
                if (fe < fr) {
                    s[d] = xe;
                    fs[d] = fe;
                } else {
                    s[d] = xr;
                    fs[d] = fr;
                }
            } else if (fr < fs[d - 1]) {
                s[d] = xr;
                fs[d] = fr;
            } else {
                const bool outside = fr < fs[d];
                const Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (s[d] - c));
                const double fc = f(xc);
                if (fc < std::min(fr, fs[d])) {
                    s[d] = xc;
                    fs[d] = fc;
                } else {
                    for (Eigen::Index i = 1; i <= d; ++i) {
                        s[i] = s[0] + 0.5 * (s[i] - s[0]);
                        fs[i] = f(s[i]);
                    }
                }
            }
        }
        x0 = s[0];
        step *= 0.1;
    }
    return x0;
}

// Least squares through the normal equations.
inline Eigen::VectorXd ols(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd G = Z.transpose() * Z;
    return G.ldlt().solve(Z.transpose() * y);
}

}  // namespace oracle
