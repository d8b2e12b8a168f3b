#pragma once

#include <Eigen/Dense>

#include <vector>

#include "monospline/spline_basis.hpp"

namespace monospline {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Contiguous, equal-size coefficient blocks: group j owns columns
// [j * size, (j + 1) * size).
struct GroupLayout {
    Eigen::Index count = 0;
    Eigen::Index size = 1;

    Eigen::Index columns() const { return count * size; }
    Eigen::Index begin(Eigen::Index j) const { return j * size; }
};

// Everything needed to turn raw covariates into centered basis columns.
// Fitted once on training data and reused unchanged for new data.
struct DesignTransform {
    BasisSpec basis;
    std::vector<RescaleParams> rescale;  // one per covariate
    Vector column_means;                 // one per basis column

    Eigen::Index covariates() const { return static_cast<Eigen::Index>(rescale.size()); }
    GroupLayout layout() const { return {covariates(), basis.size()}; }
};

struct DesignMatrix {
    DesignTransform transform;
    Matrix Z;  // n x (P m), column-centered

    GroupLayout layout() const { return transform.layout(); }
};

// Rescales each covariate to [0,1], expands it in the basis and centers the
// columns. Throws std::invalid_argument on constant or non-finite columns.
DesignMatrix build_design(const Matrix& X, const BasisSpec& basis);

// Applies a stored transform (clamping out-of-range values) without
// recomputing any statistic from X_new.
Matrix expand_new(const Matrix& X_new, const DesignTransform& transform);

struct CenteredResponse {
    Vector y;
    double mean = 0.0;
};

CenteredResponse center_response(const Vector& y);

}  // namespace monospline
