#pragma once

#include <optional>
#include <span>
#include <vector>

#include "monospline/design.hpp"
#include "monospline/penalty.hpp"

namespace monospline {

enum class LipschitzMode { power_iteration, backtracking };

struct SolverConfig {
    int max_iterations = 50000;
    double objective_tolerance = 1e-8;  // relative objective change
    double step_tolerance = 1e-6;       // relative step norm
    // Once the two criteria above hold, keep iterating until the restricted
    // KKT residual is below kkt_tolerance * lambda (at lambda = 0, 1e-3 times
    // the largest gradient entry at zero stands in for lambda). Zero disables.
    double kkt_tolerance = 1e-5;
    LipschitzMode lipschitz = LipschitzMode::power_iteration;
    int power_iterations = 20;
    double lipschitz_safety = 1.1;
    // Minimize (1/2n)||y - Z b||^2 + lambda_n * pen(b) instead of
    // (1/2)||y - Z b||^2 + lambda * pen(b).
    bool normalized = false;
    bool record_trace = false;

    void validate() const;
};

struct SolverResult {
    Vector beta;
    double lambda = 0.0;
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    std::vector<bool> sign_coherent;
    bool converged = false;
    std::vector<double> objective_trace;  // accepted iterates, if recorded
};

// Smallest lambda at which beta = 0 is optimal (unnormalized scale).
double lambda_max(const Matrix& Z, const Vector& y, const GroupLayout& layout, PenaltyKind kind,
                  std::span<const double> weights);

// Objective in the units selected by `normalized`.
double objective_value(const Matrix& Z, const Vector& y, const Vector& beta,
                       const GroupLayout& layout, const PenaltySpec& penalty,
                       bool normalized = false);

// Largest violation of the subgradient optimality conditions, in the units
// selected by `normalized`. A nonzero group with infinite weight is an
// infinite violation.
double kkt_residual(const Matrix& Z, const Vector& y, const Vector& beta, const GroupLayout& layout,
                    const PenaltySpec& penalty, bool normalized = false);

// Accelerated proximal gradient with objective-based momentum restart, run
// over a working set of groups that grows until no excluded group violates
// its zero-optimality condition.
SolverResult solve(const Matrix& Z, const Vector& y, const GroupLayout& layout,
                   const PenaltySpec& penalty, const SolverConfig& cfg = {},
                   const std::optional<Vector>& warm_start = std::nullopt);

// Log-spaced, strictly decreasing: lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int size, double ratio);

struct LambdaPath {
    std::vector<double> lambdas;
    std::vector<SolverResult> fits;
};

// Warm-started path over a decreasing grid, screening groups with the
// sequential strong rule before each solve.
LambdaPath solve_path(const Matrix& Z, const Vector& y, const GroupLayout& layout, PenaltyKind kind,
                      std::span<const double> weights, std::span<const double> lambdas,
                      const SolverConfig& cfg = {});

LambdaPath lambda_path(const Matrix& Z, const Vector& y, const GroupLayout& layout,
                       PenaltyKind kind, std::span<const double> weights, int grid_size = 100,
                       double ratio = 1e-3, const SolverConfig& cfg = {});

}  // namespace monospline
