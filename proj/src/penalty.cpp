#include "monospline/penalty.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace monospline {

const char* to_string(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::coop: return "coop";
        case PenaltyKind::group: return "group";
        case PenaltyKind::l1: return "l1";
    }
    return "unknown";
}

PenaltyKind penalty_kind_from_string(const std::string& name) {
    if (name == "coop") return PenaltyKind::coop;
    if (name == "group") return PenaltyKind::group;
    if (name == "l1") return PenaltyKind::l1;
    throw std::invalid_argument("unknown penalty kind '" + name + "'");
}

void PenaltySpec::validate(const GroupLayout& layout) const {
    if (static_cast<Eigen::Index>(weights.size()) != layout.count) {
        throw std::invalid_argument("penalty needs one weight per group");
    }
    bool any_finite = false;
    for (double w : weights) {
        if (std::isnan(w) || w <= 0.0) throw std::invalid_argument("penalty weights must be positive");
        any_finite = any_finite || std::isfinite(w);
    }
    if (!any_finite) throw std::invalid_argument("at least one penalty weight must be finite");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be finite and nonnegative");
    }
}

std::vector<double> unit_weights(Eigen::Index groups) {
    return std::vector<double>(static_cast<std::size_t>(groups), 1.0);
}

double coop_norm(const Vector& beta, const GroupLayout& layout, std::span<const double> weights) {
    return penalty_value(beta, layout, PenaltyKind::coop, weights);
}

double penalty_value(const Vector& beta, const GroupLayout& layout, PenaltyKind kind,
                     std::span<const double> weights) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < layout.count; ++j) {
        const auto b = beta.segment(layout.begin(j), layout.size);
        double part = 0.0;
        switch (kind) {
            case PenaltyKind::coop:
                part = b.cwiseMax(0.0).norm() + (-b).cwiseMax(0.0).norm();
                break;
            case PenaltyKind::group:
                part = b.norm();
                break;
            case PenaltyKind::l1:
                part = b.lpNorm<1>();
                break;
        }
        if (part != 0.0) total += weights[j] * part;
    }
    return total;
}

Vector group_soft_threshold(const Vector& v, double t) {
    const double norm = v.norm();
    if (norm <= t) return Vector::Zero(v.size());
    return v * (1.0 - t / norm);
}

Vector prox_coop(const Vector& v, double t) {
    return group_soft_threshold(v.cwiseMax(0.0), t) - group_soft_threshold((-v).cwiseMax(0.0), t);
}

Vector prox_l1(const Vector& v, double t) {
    return v.unaryExpr([t](double x) {
        if (x > t) return x - t;
        if (x < -t) return x + t;
        return 0.0;
    });
}

double zero_threshold_norm(const Vector& g, PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::coop:
            return std::max(g.cwiseMax(0.0).norm(), (-g).cwiseMax(0.0).norm());
        case PenaltyKind::group:
            return g.norm();
        case PenaltyKind::l1:
            return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
    }
    return 0.0;
}

std::vector<bool> sign_coherence_check(const Vector& beta, const GroupLayout& layout, double tol) {
    std::vector<bool> coherent(static_cast<std::size_t>(layout.count), true);
    for (Eigen::Index j = 0; j < layout.count; ++j) {
        const auto b = beta.segment(layout.begin(j), layout.size);
        coherent[j] = !(b.maxCoeff() > tol && b.minCoeff() < -tol);
    }
    return coherent;
}

}  // namespace monospline
