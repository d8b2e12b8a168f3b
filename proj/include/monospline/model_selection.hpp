#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "monospline/design.hpp"
#include "monospline/penalty.hpp"
#include "monospline/solver.hpp"

namespace monospline {

// Fold index (0..folds-1) per observation. Fold sizes differ by at most one.
std::vector<int> kfold_split(int n, int folds, std::uint64_t seed);

// One penalized additive fit: basis, penalty and per-covariate weights
// (+inf excludes a covariate).
struct StageSpec {
    BasisSpec basis;
    PenaltyKind kind = PenaltyKind::coop;
    std::vector<double> weights;
};

struct CVResult {
    std::vector<double> lambdas;  // strictly decreasing
    std::vector<double> cv;       // mean squared prediction error per lambda
    std::size_t index = 0;        // position of the chosen lambda
    double lambda = 0.0;
    int folds = 0;
    std::uint64_t seed = 0;
    bool converged = true;  // every fold fit converged
};

// Argmin of the curve; ties go to the larger lambda.
std::size_t select_lambda_index(std::span<const double> cv);
double select_lambda(const CVResult& cvr);

// K-fold CV over a shared grid. Rescaling, centering and the response mean
// are recomputed from each training fold.
CVResult cv_curve(const Matrix& X, const Vector& y, const StageSpec& stage,
                  std::span<const double> lambdas, int folds, std::uint64_t seed,
                  const SolverConfig& cfg = {});

// Same, with a precomputed fold assignment.
CVResult cv_curve(const Matrix& X, const Vector& y, const StageSpec& stage,
                  std::span<const double> lambdas, const std::vector<int>& fold_of,
                  const SolverConfig& cfg = {});

}  // namespace monospline
