#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "monospline/design.hpp"
#include "monospline/model_selection.hpp"
#include "monospline/penalty.hpp"
#include "monospline/solver.hpp"

namespace monospline {

// ms: monotone I-splines + cooperative penalty; ams: its adaptive version;
// lasso / alasso: linear effects; bs: adaptive group lasso on B-splines.
enum class Method { ms, ams, lasso, alasso, bs };

const char* to_string(Method method);
Method method_from_string(const std::string& name);
const char* display_name(Method method);
bool is_adaptive(Method method);
// Methods whose selected, sign-coherent components are monotone curves.
bool is_monotone(Method method);

struct CvSettings {
    int folds = 10;
    int grid_size = 100;
    double grid_ratio = 1e-3;
    std::uint64_t seed = 1;
};

struct FitOptions {
    int knots = 6;
    int ispline_order = 2;
    int bspline_order = 3;
    // Final-stage lambda; chosen by CV when absent.
    std::optional<double> lambda;
    // First-stage lambda of adaptive methods; chosen by CV when absent.
    std::optional<double> initial_lambda;
    CvSettings cv;
    SolverConfig solver;
};

struct FitResult {
    Method method = Method::ms;
    PenaltyKind penalty = PenaltyKind::coop;
    DesignTransform transform;
    Vector beta;
    double intercept = 0.0;
    double lambda = 0.0;
    std::optional<double> initial_lambda;
    std::vector<double> weights;  // final-stage weights, +inf = excluded
    std::optional<CVResult> cv;
    std::optional<CVResult> initial_cv;
    std::vector<Eigen::Index> initial_support;  // adaptive methods only
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<bool> sign_coherent;
    std::vector<Eigen::Index> support;
    std::vector<std::string> warnings;

    GroupLayout layout() const { return transform.layout(); }
};

// Covariates whose coefficient block has an entry with |b| > tol.
std::vector<Eigen::Index> support_of(const Vector& beta, const GroupLayout& layout,
                                     double tol = 1e-10);

BasisSpec basis_for(Method method, const FitOptions& opts);

FitResult fit(Method method, const Matrix& X, const Vector& y, const FitOptions& opts = {});

FitResult fit_ms_lasso(const Matrix& X, const Vector& y, const FitOptions& opts = {});
FitResult fit_adaptive_ms_lasso(const Matrix& X, const Vector& y, const FitOptions& opts = {});
FitResult fit_lasso(const Matrix& X, const Vector& y, const FitOptions& opts = {});
FitResult fit_adaptive_lasso(const Matrix& X, const Vector& y, const FitOptions& opts = {});
FitResult fit_bs_lasso(const Matrix& X, const Vector& y, const FitOptions& opts = {});

Vector predict(const FitResult& fit, const Matrix& X_new);

// sum_k beta_jk (phi_k(x) - column mean) on points of the unit interval.
Vector component_curve(const FitResult& fit, Eigen::Index j, std::span<const double> grid);

}  // namespace monospline
