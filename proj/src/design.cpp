#include "monospline/design.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace monospline {

namespace {

// Basis expansion of already-rescaled covariates, uncentered.
void expand_raw(const Matrix& X, const BasisSpec& basis,
                const std::vector<RescaleParams>& rescale, Matrix& out) {
    const Eigen::Index n = X.rows();
    const int m = basis.size();
    out.resize(n, X.cols() * m);
    std::vector<double> values(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            basis.evaluate(rescale[j].apply(X(i, j)), values);
            for (int k = 0; k < m; ++k) out(i, j * m + k) = values[k];
        }
    }
}

}  // namespace

DesignMatrix build_design(const Matrix& X, const BasisSpec& basis) {
    if (X.rows() < 2) throw std::invalid_argument("design requires at least two observations");
    if (X.cols() < 1) throw std::invalid_argument("design requires at least one covariate");

    DesignMatrix d;
    d.transform.basis = basis;
    d.transform.rescale.reserve(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const auto col = X.col(j);
        try {
            auto [unused, params] =
                rescale_to_unit(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
            d.transform.rescale.push_back(params);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("covariate " + std::to_string(j + 1) + ": " + e.what());
        }
    }

    expand_raw(X, basis, d.transform.rescale, d.Z);
    d.transform.column_means = d.Z.colwise().mean().transpose();
    d.Z.rowwise() -= d.transform.column_means.transpose();
    return d;
}

Matrix expand_new(const Matrix& X_new, const DesignTransform& transform) {
    if (X_new.cols() != transform.covariates()) {
        throw std::invalid_argument("expected " + std::to_string(transform.covariates()) +
                                    " covariates, got " + std::to_string(X_new.cols()));
    }
    if (!X_new.allFinite()) throw std::invalid_argument("non-finite value in new data");
    Matrix Z;
    expand_raw(X_new, transform.basis, transform.rescale, Z);
    Z.rowwise() -= transform.column_means.transpose();
    return Z;
}

CenteredResponse center_response(const Vector& y) {
    if (y.size() < 2) throw std::invalid_argument("response requires at least two observations");
    CenteredResponse c;
    c.mean = y.mean();
    c.y = y.array() - c.mean;
    return c;
}

}  // namespace monospline
