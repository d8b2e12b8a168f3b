#include "monospline/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "monospline/random.hpp"

namespace monospline {

namespace {

Matrix take_rows(const Matrix& X, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Vector take(const Vector& v, const std::vector<Eigen::Index>& rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
    return out;
}

}  // namespace

std::vector<int> kfold_split(int n, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("need at least two folds");
    if (folds > n) throw std::invalid_argument("more folds than observations");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;
    return fold_of;
}

std::size_t select_lambda_index(std::span<const double> cv) {
    if (cv.empty()) throw std::invalid_argument("empty CV curve");
    std::size_t best = 0;
    for (std::size_t i = 1; i < cv.size(); ++i) {
        if (cv[i] < cv[best]) best = i;  // strict: ties keep the earlier, larger lambda
    }
    return best;
}

double select_lambda(const CVResult& cvr) { return cvr.lambdas[select_lambda_index(cvr.cv)]; }

CVResult cv_curve(const Matrix& X, const Vector& y, const StageSpec& stage,
                  std::span<const double> lambdas, int folds, std::uint64_t seed,
                  const SolverConfig& cfg) {
    if (folds > X.rows()) throw std::invalid_argument("more folds than observations");
    CVResult r = cv_curve(X, y, stage, lambdas, kfold_split(static_cast<int>(X.rows()), folds, seed), cfg);
    r.seed = seed;
    return r;
}

CVResult cv_curve(const Matrix& X, const Vector& y, const StageSpec& stage,
                  std::span<const double> lambdas, const std::vector<int>& fold_of,
                  const SolverConfig& cfg) {
    const Eigen::Index n = X.rows();
    if (y.size() != n || static_cast<Eigen::Index>(fold_of.size()) != n) {
        throw std::invalid_argument("X, y and fold assignment sizes differ");
    }
    if (static_cast<Eigen::Index>(stage.weights.size()) != X.cols()) {
        throw std::invalid_argument("stage needs one weight per covariate");
    }
    if (lambdas.empty()) throw std::invalid_argument("empty lambda grid");

    // Covariates with infinite weight never enter; drop them up front.
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (std::isfinite(stage.weights[j])) kept.push_back(j);
    }
    std::vector<double> weights;
    Matrix Xk(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
        Xk.col(static_cast<Eigen::Index>(c)) = X.col(kept[c]);
        weights.push_back(stage.weights[kept[c]]);
    }

    const int folds = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
    CVResult r;
    r.lambdas.assign(lambdas.begin(), lambdas.end());
    r.cv.assign(lambdas.size(), 0.0);
    r.folds = folds;

    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
        if (test.size() < 2) {
            throw std::invalid_argument("fold " + std::to_string(f) + " has fewer than two observations");
        }
        const Vector y_train = take(y, train);
        const Vector y_test = take(y, test);
        const CenteredResponse yc = center_response(y_train);

        if (kept.empty()) {
            for (std::size_t l = 0; l < lambdas.size(); ++l) {
                r.cv[l] += (y_test.array() - yc.mean).square().sum();
            }
            continue;
        }

        const Matrix X_train = take_rows(Xk, train);
        DesignMatrix design;
        try {
            design = build_design(X_train, stage.basis);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("training fold " + std::to_string(f) + ": " + e.what());
        }
        const Matrix Z_test = expand_new(take_rows(Xk, test), design.transform);
        const LambdaPath path =
            solve_path(design.Z, yc.y, design.layout(), stage.kind, weights, lambdas, cfg);
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            const Vector pred = (Z_test * path.fits[l].beta).array() + yc.mean;
            r.cv[l] += (y_test - pred).squaredNorm();
            r.converged = r.converged && path.fits[l].converged;
        }
    }
    for (double& v : r.cv) v /= static_cast<double>(n);
    r.index = select_lambda_index(r.cv);
    r.lambda = r.lambdas[r.index];
    return r;
}

}  // namespace monospline
