#include "monospline/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace monospline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StageOutcome {
    SolverResult solution;
    std::optional<CVResult> cv;
};

void check_data(const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw std::invalid_argument("X and y have different numbers of rows");
    if (X.rows() < 2) throw std::invalid_argument("need at least two observations");
    if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("non-finite values in data");
}

StageOutcome run_stage(const Matrix& X, const Vector& y, const DesignMatrix& design,
                       const CenteredResponse& yc, const StageSpec& stage,
                       std::optional<double> lambda, const FitOptions& opts) {
    const GroupLayout layout = design.layout();
    StageOutcome out;
    if (lambda) {
        out.solution = solve(design.Z, yc.y, layout, {stage.kind, stage.weights, *lambda}, opts.solver);
        return out;
    }

    double lmax = lambda_max(design.Z, yc.y, layout, stage.kind, stage.weights);
    if (opts.solver.normalized) lmax /= static_cast<double>(X.rows());
    if (!(lmax > 0.0)) {
        // Constant response: the null model is optimal at every lambda.
        out.solution = solve(design.Z, yc.y, layout, {stage.kind, stage.weights, 0.0}, opts.solver);
        return out;
    }
    const std::vector<double> grid = lambda_grid(lmax, opts.cv.grid_size, opts.cv.grid_ratio);
    out.cv = cv_curve(X, y, stage, grid, opts.cv.folds, opts.cv.seed, opts.solver);
    const std::span<const double> head(grid.data(), out.cv->index + 1);
    LambdaPath path = solve_path(design.Z, yc.y, layout, stage.kind, stage.weights, head, opts.solver);
    out.solution = std::move(path.fits.back());
    return out;
}

void finish(FitResult& r, const SolverResult& s) {
    r.beta = s.beta;
    r.lambda = s.lambda;
    r.kkt_residual = s.kkt_residual;
    r.iterations += s.iterations;
    r.converged = r.converged && s.converged;
    r.sign_coherent = s.sign_coherent;
    r.support = support_of(r.beta, r.layout());
    if (!s.converged) r.warnings.push_back("solver did not converge within the iteration limit");
    if (is_monotone(r.method)) {
        for (Eigen::Index j : r.support) {
            if (!r.sign_coherent[j]) {
                r.warnings.push_back("covariate " + std::to_string(j + 1) +
                                     ": sign-incoherent coefficients, fitted component is not monotone");
            }
        }
    }
}

PenaltyKind penalty_for(Method method) {
    switch (method) {
        case Method::ms:
        case Method::ams: return PenaltyKind::coop;
        case Method::lasso:
        case Method::alasso: return PenaltyKind::l1;
        case Method::bs: return PenaltyKind::group;
    }
    return PenaltyKind::coop;
}

FitResult fit_single(Method method, const Matrix& X, const Vector& y, const FitOptions& opts) {
    check_data(X, y);
    FitResult r;
    r.method = method;
    r.penalty = penalty_for(method);
    const DesignMatrix design = build_design(X, basis_for(method, opts));
    const CenteredResponse yc = center_response(y);
    r.transform = design.transform;
    r.intercept = yc.mean;
    r.weights = unit_weights(X.cols());

    const StageSpec stage{design.transform.basis, r.penalty, r.weights};
    StageOutcome out = run_stage(X, y, design, yc, stage, opts.lambda, opts);
    r.cv = std::move(out.cv);
    finish(r, out.solution);
    return r;
}

FitResult fit_two_stage(Method method, const Matrix& X, const Vector& y, const FitOptions& opts) {
    check_data(X, y);
    FitResult r;
    r.method = method;
    r.penalty = penalty_for(method);
    const DesignMatrix design = build_design(X, basis_for(method, opts));
    const CenteredResponse yc = center_response(y);
    r.transform = design.transform;
    r.intercept = yc.mean;
    const GroupLayout layout = design.layout();

    const StageSpec first{design.transform.basis, r.penalty, unit_weights(X.cols())};
    StageOutcome initial = run_stage(X, y, design, yc, first, opts.initial_lambda, opts);
    r.initial_lambda = initial.solution.lambda;
    r.initial_cv = std::move(initial.cv);
    r.iterations = initial.solution.iterations;
    r.converged = initial.solution.converged;
    r.initial_support = support_of(initial.solution.beta, layout);

    r.weights.assign(static_cast<std::size_t>(X.cols()), kInf);
    for (Eigen::Index j : r.initial_support) {
        r.weights[j] = 1.0 / initial.solution.beta.segment(layout.begin(j), layout.size).norm();
    }

    if (r.initial_support.empty()) {
        r.beta = Vector::Zero(layout.columns());
        r.lambda = initial.solution.lambda;
        r.kkt_residual = 0.0;
        r.sign_coherent.assign(static_cast<std::size_t>(layout.count), true);
        r.warnings.push_back("initial stage selected no covariates; returning the null model");
        if (!initial.solution.converged) r.warnings.push_back("initial stage did not converge");
        return r;
    }

    const StageSpec second{design.transform.basis, r.penalty, r.weights};
    StageOutcome adaptive = run_stage(X, y, design, yc, second, opts.lambda, opts);
    r.cv = std::move(adaptive.cv);
    if (!initial.solution.converged) r.warnings.push_back("initial stage did not converge");
    finish(r, adaptive.solution);
    return r;
}

}  // namespace

const char* to_string(Method method) {
    switch (method) {
        case Method::ms: return "ms";
        case Method::ams: return "ams";
        case Method::lasso: return "lasso";
        case Method::alasso: return "alasso";
        case Method::bs: return "bs";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    if (name == "ms") return Method::ms;
    if (name == "ams") return Method::ams;
    if (name == "lasso") return Method::lasso;
    if (name == "alasso") return Method::alasso;
    if (name == "bs") return Method::bs;
    throw std::invalid_argument("unknown method '" + name + "' (expected ms|ams|lasso|alasso|bs)");
}

const char* display_name(Method method) {
    switch (method) {
        case Method::ms: return "MS-lasso";
        case Method::ams: return "Ad. MS-lasso";
        case Method::lasso: return "Lasso";
        case Method::alasso: return "Ad. lasso";
        case Method::bs: return "BS-lasso";
    }
    return "unknown";
}

bool is_adaptive(Method method) {
    return method == Method::ams || method == Method::alasso || method == Method::bs;
}

bool is_monotone(Method method) {
    return method == Method::ms || method == Method::ams || method == Method::lasso ||
           method == Method::alasso;
}

std::vector<Eigen::Index> support_of(const Vector& beta, const GroupLayout& layout, double tol) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < layout.count; ++j) {
        if (beta.segment(layout.begin(j), layout.size).cwiseAbs().maxCoeff() > tol) s.push_back(j);
    }
    return s;
}

BasisSpec basis_for(Method method, const FitOptions& opts) {
    switch (method) {
        case Method::ms:
        case Method::ams: return BasisSpec::ispline(opts.knots, opts.ispline_order);
        case Method::lasso:
        case Method::alasso: return BasisSpec::identity();
        case Method::bs: return BasisSpec::bspline(opts.knots, opts.bspline_order);
    }
    return BasisSpec::identity();
}

FitResult fit(Method method, const Matrix& X, const Vector& y, const FitOptions& opts) {
    return is_adaptive(method) ? fit_two_stage(method, X, y, opts) : fit_single(method, X, y, opts);
}

FitResult fit_ms_lasso(const Matrix& X, const Vector& y, const FitOptions& opts) {
    return fit(Method::ms, X, y, opts);
}

FitResult fit_adaptive_ms_lasso(const Matrix& X, const Vector& y, const FitOptions& opts) {
    return fit(Method::ams, X, y, opts);
}

FitResult fit_lasso(const Matrix& X, const Vector& y, const FitOptions& opts) {
    return fit(Method::lasso, X, y, opts);
}

FitResult fit_adaptive_lasso(const Matrix& X, const Vector& y, const FitOptions& opts) {
    return fit(Method::alasso, X, y, opts);
}

FitResult fit_bs_lasso(const Matrix& X, const Vector& y, const FitOptions& opts) {
    return fit(Method::bs, X, y, opts);
}

Vector predict(const FitResult& fit, const Matrix& X_new) {
    const Matrix Z = expand_new(X_new, fit.transform);
    return (Z * fit.beta).array() + fit.intercept;
}

Vector component_curve(const FitResult& fit, Eigen::Index j, std::span<const double> grid) {
    const GroupLayout layout = fit.layout();
    if (j < 0 || j >= layout.count) {
        throw std::out_of_range("component " + std::to_string(j) + " outside [0, " +
                                std::to_string(layout.count) + ")");
    }
    const Eigen::Index off = layout.begin(j);
    const Vector b = fit.beta.segment(off, layout.size);
    const Vector means = fit.transform.column_means.segment(off, layout.size);
    std::vector<double> phi(static_cast<std::size_t>(layout.size));
    Vector out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        fit.transform.basis.evaluate(grid[i], phi);
        double v = 0.0;
        for (Eigen::Index k = 0; k < layout.size; ++k) v += b[k] * (phi[k] - means[k]);
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

}  // namespace monospline
