#include "monospline/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace monospline {

namespace {

constexpr double kTiny = 1e-300;
// Excluded groups re-enter the working set only when their zero-optimality
// condition fails by more than this relative margin.
constexpr double kScreenMargin = 1e-6;

double loss_scale(const SolverConfig& cfg, Eigen::Index n) {
    return cfg.normalized ? 1.0 / static_cast<double>(n) : 1.0;
}

// Proximal maps applied in place on one block; same results as the
// allocating versions in penalty.hpp.
void soft_threshold_block(Eigen::Ref<Vector> v, double t) {
    const double norm = v.norm();
    if (norm <= t) {
        v.setZero();
    } else {
        v *= 1.0 - t / norm;
    }
}

void prox_block(Eigen::Ref<Vector> v, double t, PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::coop: {
            const double np = v.cwiseMax(0.0).norm();
            const double nn = v.cwiseMin(0.0).norm();
            const double sp = np > t ? 1.0 - t / np : 0.0;
            const double sn = nn > t ? 1.0 - t / nn : 0.0;
            for (Eigen::Index k = 0; k < v.size(); ++k) v[k] *= v[k] > 0.0 ? sp : sn;
            return;
        }
        case PenaltyKind::group: soft_threshold_block(v, t); return;
        case PenaltyKind::l1:
            for (Eigen::Index k = 0; k < v.size(); ++k) {
                const double x = v[k];
                v[k] = x > t ? x - t : (x < -t ? x + t : 0.0);
            }
            return;
    }
}

double group_penalty(const Eigen::Ref<const Vector>& b, PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::coop: return b.cwiseMax(0.0).norm() + b.cwiseMin(0.0).norm();
        case PenaltyKind::group: return b.norm();
        case PenaltyKind::l1: return b.lpNorm<1>();
    }
    return 0.0;
}

// Violation of the optimality condition for one group, given the negative
// loss gradient g (same units as threshold = lambda * w_j).
double group_kkt(const Vector& g, const Vector& b, double threshold, PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::group: {
            const double nb = b.norm();
            if (nb > 0.0) return (g - threshold * b / nb).norm();
            return std::max(0.0, g.norm() - threshold);
        }
        case PenaltyKind::l1: {
            double worst = 0.0;
            for (Eigen::Index k = 0; k < b.size(); ++k) {
                const double v = b[k] != 0.0 ? std::abs(g[k] - threshold * (b[k] > 0.0 ? 1.0 : -1.0))
                                             : std::max(0.0, std::abs(g[k]) - threshold);
                worst = std::max(worst, v);
            }
            return worst;
        }
        case PenaltyKind::coop: {
            // Positive side: g on positive coordinates, (g)^+ on zero ones.
            // Negative side mirrors it.
            const Eigen::Index m = b.size();
            Vector gp = Vector::Zero(m), gn = Vector::Zero(m);
            Vector bp = Vector::Zero(m), bn = Vector::Zero(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                if (b[k] > 0.0) {
                    gp[k] = g[k];
                    bp[k] = b[k];
                } else if (b[k] < 0.0) {
                    gn[k] = g[k];
                    bn[k] = b[k];
                } else {
                    gp[k] = std::max(0.0, g[k]);
                    gn[k] = std::min(0.0, g[k]);
                }
            }
            const double np = bp.norm();
            const double nn = bn.norm();
            const double vp = np > 0.0 ? (gp - threshold * bp / np).norm()
                                       : std::max(0.0, gp.norm() - threshold);
            const double vn = nn > 0.0 ? (gn - threshold * bn / nn).norm()
                                       : std::max(0.0, gn.norm() - threshold);
            return std::max(vp, vn);
        }
    }
    return 0.0;
}

// Cross products of the full design, worth forming when Z has no more
// columns than rows: an iteration then costs one p x p product instead of
// two n x p ones.
struct Gram {
    Matrix G;   // Z^T Z
    Vector c;   // Z^T y
    double yy;  // y^T y
};

std::optional<Gram> make_gram(const Matrix& Z, const Vector& y) {
    if (Z.cols() == 0 || Z.cols() > Z.rows()) return std::nullopt;
    Gram g;
    g.G.resize(Z.cols(), Z.cols());
    g.G.setZero();
    g.G.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
    g.G = g.G.selfadjointView<Eigen::Lower>();
    g.c = Z.transpose() * y;
    g.yy = y.squaredNorm();
    return g;
}

// State of one restricted problem: the columns of the working-set groups
// copied into a dense block (or the matching block of the Gram matrix).
// Iterates carry an auxiliary vector that is linear in x: the fitted values
// Z_w x, or G_w x in Gram mode.
class WorkingProblem {
public:
    WorkingProblem(const Matrix& Z, const Vector& y, const GroupLayout& layout,
                   const std::vector<Eigen::Index>& groups, PenaltyKind kind,
                   std::span<const double> weights, double lambda, double scale, const Gram* gram)
        : y_(y), groups_(groups), m_(layout.size), kind_(kind), lambda_(lambda), scale_(scale),
          gram_(gram) {
        const Eigen::Index cols = static_cast<Eigen::Index>(groups.size()) * m_;
        thresholds_.reserve(groups.size());
        for (Eigen::Index j : groups) thresholds_.push_back(lambda * weights[j]);
        if (gram_) {
            Gw_.resize(cols, cols);
            cw_.resize(cols);
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const Eigen::Index og = static_cast<Eigen::Index>(g) * m_;
                cw_.segment(og, m_) = gram_->c.segment(layout.begin(groups[g]), m_);
                for (std::size_t h = 0; h < groups.size(); ++h) {
                    Gw_.block(og, static_cast<Eigen::Index>(h) * m_, m_, m_) =
                        gram_->G.block(layout.begin(groups[g]), layout.begin(groups[h]), m_, m_);
                }
            }
        } else {
            Zw_.resize(Z.rows(), cols);
            for (std::size_t g = 0; g < groups.size(); ++g) {
                Zw_.middleCols(static_cast<Eigen::Index>(g) * m_, m_) = Z.middleCols(layout.begin(groups[g]), m_);
            }
            resid_.resize(Z.rows());
        }
    }

    Eigen::Index cols() const { return static_cast<Eigen::Index>(groups_.size()) * m_; }
    Eigen::Index aux_size() const { return gram_ ? cols() : y_.size(); }

    Vector gather(const Vector& beta, const GroupLayout& layout) const {
        Vector x(cols());
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            x.segment(static_cast<Eigen::Index>(g) * m_, m_) = beta.segment(layout.begin(groups_[g]), m_);
        }
        return x;
    }

    void scatter(const Vector& x, const GroupLayout& layout, Vector& beta) const {
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            beta.segment(layout.begin(groups_[g]), m_) = x.segment(static_cast<Eigen::Index>(g) * m_, m_);
        }
    }

    void aux_into(const Vector& x, Vector& out) const {
        if (gram_) {
            out.noalias() = Gw_ * x;
        } else {
            out.noalias() = Zw_ * x;
        }
    }

    double loss(const Vector& x, const Vector& aux) const {
        if (gram_) return 0.5 * scale_ * std::max(0.0, gram_->yy - 2.0 * cw_.dot(x) + x.dot(aux));
        return 0.5 * scale_ * (y_ - aux).squaredNorm();
    }

    // d^T H d for the loss Hessian H, given aux for d.
    double quad(const Vector& d, const Vector& aux_d) const {
        return scale_ * (gram_ ? d.dot(aux_d) : aux_d.squaredNorm());
    }

    // grad f(x) . e, given aux for x and for e.
    double grad_dot(const Vector& aux_x, const Vector& e, const Vector& aux_e) const {
        if (gram_) return scale_ * (aux_x - cw_).dot(e);
        return scale_ * (aux_x - y_).dot(aux_e);
    }

    // Negative gradient of the loss at x.
    void neg_gradient_into(const Vector& aux, Vector& out) const {
        if (gram_) {
            out = scale_ * (cw_ - aux);
        } else {
            resid_ = y_ - aux;
            out.noalias() = Zw_.transpose() * resid_;
            out *= scale_;
        }
    }

    double gradient_scale_at_zero() const {
        if (gram_) return scale_ * cw_.cwiseAbs().maxCoeff();
        return scale_ * (Zw_.transpose() * y_).cwiseAbs().maxCoeff();
    }

    double penalty(const Vector& x) const {
        double total = 0.0;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            const double p = group_penalty(x.segment(static_cast<Eigen::Index>(g) * m_, m_), kind_);
            if (p != 0.0) total += thresholds_[g] * p;
        }
        return total;
    }

    // v <- prox(v), block by block.
    void prox_inplace(Vector& v, double step) const {
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            prox_block(v.segment(static_cast<Eigen::Index>(g) * m_, m_), thresholds_[g] * step, kind_);
        }
    }

    double kkt(const Vector& x, const Vector& aux) const {
        Vector g(cols());
        neg_gradient_into(aux, g);
        double worst = 0.0;
        for (std::size_t j = 0; j < groups_.size(); ++j) {
            const Eigen::Index off = static_cast<Eigen::Index>(j) * m_;
            worst = std::max(worst, group_kkt(g.segment(off, m_), x.segment(off, m_), thresholds_[j], kind_));
        }
        return worst;
    }

    double lipschitz_power(int iterations, double safety) const {
        if (cols() == 0) return 1.0;
        Vector v(cols());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
        v.normalize();
        double eig = 0.0;
        Vector w(cols());
        for (int it = 0; it < iterations; ++it) {
            if (gram_) {
                w.noalias() = Gw_ * v;
            } else {
                w.noalias() = Zw_.transpose() * (Zw_ * v);
            }
            eig = w.norm();
            if (eig <= 0.0) break;
            v = w / eig;
        }
        return std::max(scale_ * eig * safety, kTiny);
    }

    double lipschitz_lower() const {
        if (cols() == 0) return 1.0;
        const double d = gram_ ? Gw_.diagonal().maxCoeff() : Zw_.colwise().squaredNorm().maxCoeff();
        return std::max(scale_ * d, kTiny);
    }

    double lambda() const { return lambda_; }

private:
    Matrix Zw_;
    Matrix Gw_;
    Vector cw_;
    mutable Vector resid_;
    const Vector& y_;
    std::vector<Eigen::Index> groups_;
    Eigen::Index m_;
    PenaltyKind kind_;
    double lambda_;
    double scale_;
    const Gram* gram_;
    std::vector<double> thresholds_;
};

struct InnerOutcome {
    int iterations = 0;
    bool converged = false;
};

InnerOutcome run_fista(const WorkingProblem& prob, Vector& x, const SolverConfig& cfg,
                       int budget, std::vector<double>* trace) {
    InnerOutcome out;
    if (prob.cols() == 0) {
        out.converged = true;
        return out;
    }
    double L = cfg.lipschitz == LipschitzMode::power_iteration
                   ? prob.lipschitz_power(cfg.power_iterations, cfg.lipschitz_safety)
                   : prob.lipschitz_lower();

    Vector fit_x(prob.aux_size());
    prob.aux_into(x, fit_x);
    // Objective changes are accumulated from exact quadratic increments, so
    // no step depends on forming the loss by cancellation.
    double pen_x = prob.penalty(x);
    double F = prob.loss(x, fit_x) + pen_x;
    if (trace) trace->push_back(F);

    Vector x_prev = x;
    Vector fit_prev = fit_x;
    double t = 1.0;
    bool momentum = false;

    // Without a penalty, use the scale of the smallest lambda on a default
    // grid, taking the gradient at zero as a stand-in for lambda_max.
    const double kkt_scale = prob.lambda() > 0.0 ? prob.lambda() : 1e-3 * prob.gradient_scale_at_zero();
    const bool check_kkt = cfg.kkt_tolerance > 0.0 && kkt_scale > 0.0;
    const double kkt_target = cfg.kkt_tolerance * kkt_scale;

    // Buffers reused across iterations.
    Vector yv(x.size()), fit_y(fit_x.size()), ng(x.size());
    Vector x_new(x.size()), fit_new(fit_x.size()), d(x.size()), fit_d(fit_x.size());
    Vector e(x.size()), fit_e(fit_x.size());
    while (out.iterations < budget) {
        ++out.iterations;
        // Extrapolated point and its aux vector (linear in x); dfy = f(y) - f(x).
        double dfy = 0.0;
        if (momentum) {
            const double coef = (t - 1.0) / (0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)));
            e = coef * (x - x_prev);
            fit_e = coef * (fit_x - fit_prev);
            yv = x + e;
            fit_y = fit_x + fit_e;
            dfy = prob.grad_dot(fit_x, e, fit_e) + 0.5 * prob.quad(e, fit_e);
        } else {
            yv = x;
            fit_y = fit_x;
        }
        prob.neg_gradient_into(fit_y, ng);

        // df = f(x_new) - f(y).
        double df = 0.0;
        for (;;) {
            x_new = yv + ng / L;
            prob.prox_inplace(x_new, 1.0 / L);
            prob.aux_into(x_new, fit_new);
            d = x_new - yv;
            fit_d = fit_new - fit_y;
            const double q = prob.quad(d, fit_d);
            const double dd = d.squaredNorm();
            df = -ng.dot(d) + 0.5 * q;
            if (q <= L * dd * (1.0 + 1e-12)) break;
            L *= 2.0;
        }
        const double pen_new = prob.penalty(x_new);
        const double dF = dfy + df + (pen_new - pen_x);
        const double F_new = F + dF;

        if (dF > 0.0) {
            if (momentum) {
                // Momentum overshot: drop it and retake a plain step from x.
                momentum = false;
                t = 1.0;
                continue;
            }
            // A plain step cannot decrease F any further at this precision.
            out.converged = !check_kkt || prob.kkt(x, fit_x) <= kkt_target;
            break;
        }

        const double step = (x_new - x).norm();
        const double rel_obj = std::abs(dF) / std::max(std::abs(F_new), kTiny);
        const double rel_step = step / std::max(x_new.norm(), kTiny);

        x_prev.swap(x);
        fit_prev.swap(fit_x);
        x.swap(x_new);
        fit_x.swap(fit_new);
        F = F_new;
        pen_x = pen_new;
        if (trace) trace->push_back(F);

        if (momentum) {
            t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        } else {
            momentum = true;
            t = 1.0;
        }

        if (rel_obj <= cfg.objective_tolerance && rel_step <= cfg.step_tolerance) {
            if (!check_kkt || prob.kkt(x, fit_x) <= kkt_target) {
                out.converged = true;
                break;
            }
        }
    }
    return out;
}

std::vector<Eigen::Index> finite_groups(std::span<const double> weights) {
    std::vector<Eigen::Index> out;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (std::isfinite(weights[j])) out.push_back(static_cast<Eigen::Index>(j));
    }
    return out;
}

SolverResult solve_screened(const Matrix& Z, const Vector& y, const GroupLayout& layout,
                            const PenaltySpec& penalty, const SolverConfig& cfg,
                            const Vector& start, std::optional<double> previous_lambda,
                            const Gram* gram) {
    const double scale = loss_scale(cfg, Z.rows());
    const double lambda = penalty.lambda;
    const auto candidates = finite_groups(penalty.weights);

    SolverResult res;
    res.lambda = lambda;
    res.beta = Vector::Zero(layout.columns());
    for (Eigen::Index j : candidates) {
        res.beta.segment(layout.begin(j), layout.size) = start.segment(layout.begin(j), layout.size);
    }

    std::vector<char> in_set(static_cast<std::size_t>(layout.count), 0);
    std::vector<Eigen::Index> working;
    {
        const Vector c = scale * (Z.transpose() * (y - Z * res.beta));
        const double screen = previous_lambda ? std::max(0.0, 2.0 * lambda - *previous_lambda) : lambda;
        for (Eigen::Index j : candidates) {
            const Eigen::Index off = layout.begin(j);
            const bool active = res.beta.segment(off, layout.size).cwiseAbs().maxCoeff() > 0.0;
            const double w = penalty.weights[j];
            if (active || zero_threshold_norm(c.segment(off, layout.size), penalty.kind) > screen * w) {
                in_set[j] = 1;
                working.push_back(j);
            }
        }
    }

    std::vector<double>* trace = cfg.record_trace ? &res.objective_trace : nullptr;
    bool inner_converged = true;
    for (;;) {
        std::sort(working.begin(), working.end());
        WorkingProblem prob(Z, y, layout, working, penalty.kind, penalty.weights, lambda, scale, gram);
        Vector x = prob.gather(res.beta, layout);
        const int budget = cfg.max_iterations - res.iterations;
        const InnerOutcome inner = run_fista(prob, x, cfg, budget, trace);
        res.iterations += inner.iterations;
        prob.scatter(x, layout, res.beta);
        inner_converged = inner.converged;
        if (!inner_converged) break;

        const Vector c = scale * (Z.transpose() * (y - Z * res.beta));
        std::vector<Eigen::Index> violators;
        for (Eigen::Index j : candidates) {
            if (in_set[j]) continue;
            const double norm = zero_threshold_norm(c.segment(layout.begin(j), layout.size), penalty.kind);
            if (norm > lambda * penalty.weights[j] * (1.0 + kScreenMargin)) violators.push_back(j);
        }
        if (violators.empty()) break;
        for (Eigen::Index j : violators) {
            in_set[j] = 1;
            working.push_back(j);
        }
    }

    res.converged = inner_converged;
    res.objective = objective_value(Z, y, res.beta, layout, penalty, cfg.normalized);
    res.kkt_residual = kkt_residual(Z, y, res.beta, layout, penalty, cfg.normalized);
    res.sign_coherent = sign_coherence_check(res.beta, layout);
    return res;
}

void check_shapes(const Matrix& Z, const Vector& y, const GroupLayout& layout) {
    if (Z.rows() != y.size()) throw std::invalid_argument("Z and y row counts differ");
    if (Z.cols() != layout.columns()) throw std::invalid_argument("Z columns do not match group layout");
}

}  // namespace

void SolverConfig::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(objective_tolerance > 0.0) || !(step_tolerance > 0.0)) {
        throw std::invalid_argument("solver tolerances must be positive");
    }
    if (kkt_tolerance < 0.0) throw std::invalid_argument("kkt_tolerance must be >= 0");
    if (!(lipschitz_safety >= 1.0)) throw std::invalid_argument("lipschitz_safety must be >= 1");
}

double lambda_max(const Matrix& Z, const Vector& y, const GroupLayout& layout, PenaltyKind kind,
                  std::span<const double> weights) {
    check_shapes(Z, y, layout);
    const Vector c = Z.transpose() * y;
    double best = 0.0;
    for (Eigen::Index j = 0; j < layout.count; ++j) {
        if (!std::isfinite(weights[j])) continue;
        best = std::max(best, zero_threshold_norm(c.segment(layout.begin(j), layout.size), kind) / weights[j]);
    }
    return best;
}

double objective_value(const Matrix& Z, const Vector& y, const Vector& beta,
                       const GroupLayout& layout, const PenaltySpec& penalty, bool normalized) {
    const double scale = normalized ? 1.0 / static_cast<double>(Z.rows()) : 1.0;
    return 0.5 * scale * (y - Z * beta).squaredNorm() +
           penalty.lambda * penalty_value(beta, layout, penalty.kind, penalty.weights);
}

double kkt_residual(const Matrix& Z, const Vector& y, const Vector& beta, const GroupLayout& layout,
                    const PenaltySpec& penalty, bool normalized) {
    check_shapes(Z, y, layout);
    const double scale = normalized ? 1.0 / static_cast<double>(Z.rows()) : 1.0;
    const Vector g = scale * (Z.transpose() * (y - Z * beta));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < layout.count; ++j) {
        const Eigen::Index off = layout.begin(j);
        const Vector b = beta.segment(off, layout.size);
        const double w = penalty.weights[j];
        if (!std::isfinite(w)) {
            if (b.cwiseAbs().maxCoeff() > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, group_kkt(g.segment(off, layout.size), b, penalty.lambda * w, penalty.kind));
    }
    return worst;
}

SolverResult solve(const Matrix& Z, const Vector& y, const GroupLayout& layout,
                   const PenaltySpec& penalty, const SolverConfig& cfg,
                   const std::optional<Vector>& warm_start) {
    check_shapes(Z, y, layout);
    penalty.validate(layout);
    cfg.validate();
    Vector start = Vector::Zero(layout.columns());
    if (warm_start) {
        if (warm_start->size() != layout.columns()) throw std::invalid_argument("warm start has wrong size");
        start = *warm_start;
    }
    const std::optional<Gram> gram = make_gram(Z, y);
    return solve_screened(Z, y, layout, penalty, cfg, start, std::nullopt, gram ? &*gram : nullptr);
}

std::vector<double> lambda_grid(double lambda_max, int size, double ratio) {
    if (size < 1) throw std::invalid_argument("grid size must be >= 1");
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("grid ratio must be in (0,1)");
    if (!(lambda_max > 0.0)) throw std::invalid_argument("lambda_max must be positive to build a grid");
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
        const double frac = size == 1 ? 0.0 : static_cast<double>(i) / (size - 1);
        grid[i] = lambda_max * std::pow(ratio, frac);
    }
    return grid;
}

LambdaPath solve_path(const Matrix& Z, const Vector& y, const GroupLayout& layout, PenaltyKind kind,
                      std::span<const double> weights, std::span<const double> lambdas,
                      const SolverConfig& cfg) {
    check_shapes(Z, y, layout);
    cfg.validate();
    LambdaPath path;
    path.lambdas.assign(lambdas.begin(), lambdas.end());
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (!(lambdas[i] < lambdas[i - 1])) throw std::invalid_argument("lambda grid must be strictly decreasing");
    }
    PenaltySpec penalty{kind, {weights.begin(), weights.end()}, 0.0};
    Vector beta = Vector::Zero(layout.columns());
    std::optional<double> previous;
    const std::optional<Gram> gram = make_gram(Z, y);
    for (double lambda : lambdas) {
        penalty.lambda = lambda;
        penalty.validate(layout);
        path.fits.push_back(solve_screened(Z, y, layout, penalty, cfg, beta, previous, gram ? &*gram : nullptr));
        beta = path.fits.back().beta;
        previous = lambda;
    }
    return path;
}

LambdaPath lambda_path(const Matrix& Z, const Vector& y, const GroupLayout& layout,
                       PenaltyKind kind, std::span<const double> weights, int grid_size,
                       double ratio, const SolverConfig& cfg) {
    double lmax = lambda_max(Z, y, layout, kind, weights);
    if (cfg.normalized) lmax /= static_cast<double>(Z.rows());
    return solve_path(Z, y, layout, kind, weights, lambda_grid(lmax, grid_size, ratio), cfg);
}

}  // namespace monospline
