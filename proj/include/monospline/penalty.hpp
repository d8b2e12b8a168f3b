#pragma once

#include <span>
#include <string>
#include <vector>

#include "monospline/design.hpp"

namespace monospline {

enum class PenaltyKind { coop, group, l1 };

const char* to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& name);

// Per-group weights may be +infinity, which pins that group to zero.
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::coop;
    std::vector<double> weights;
    double lambda = 0.0;

    // Throws std::invalid_argument unless weights are positive (finite or
    // +inf), at least one is finite, and lambda >= 0.
    void validate(const GroupLayout& layout) const;
};

std::vector<double> unit_weights(Eigen::Index groups);

// sum_j w_j (||beta_j^+|| + ||beta_j^-||)
double coop_norm(const Vector& beta, const GroupLayout& layout, std::span<const double> weights);

// Penalty value (without lambda) for any kind. Groups with infinite weight
// contribute nothing when they are zero.
double penalty_value(const Vector& beta, const GroupLayout& layout, PenaltyKind kind,
                     std::span<const double> weights);

// v * max(0, 1 - t / ||v||)
Vector group_soft_threshold(const Vector& v, double t);

// Prox of t (||b^+|| + ||b^-||): shrinks the positive and negative parts
// separately. Never changes the sign of a coordinate.
Vector prox_coop(const Vector& v, double t);

Vector prox_l1(const Vector& v, double t);

// The dual-norm quantity compared against lambda * w_j at beta_j = 0:
// coop max(||g^+||, ||g^-||), group ||g||, l1 max |g_k|.
double zero_threshold_norm(const Vector& g, PenaltyKind kind);

// A group is incoherent iff it has a coefficient > tol and one < -tol.
std::vector<bool> sign_coherence_check(const Vector& beta, const GroupLayout& layout,
                                       double tol = 1e-10);

}  // namespace monospline
