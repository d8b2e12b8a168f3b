#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "monospline/model_selection.hpp"

using namespace monospline;

namespace {

struct Data {
    Matrix X;
    Vector y;
};

// Two monotone signals plus two noise covariates.
Data make_data(int n, unsigned seed, double noise = 0.3) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, noise);
    Data d{Matrix(n, 4), Vector(n)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 4; ++j) d.X(i, j) = u(gen);
        d.y[i] = 2.0 * d.X(i, 0) * d.X(i, 0) - std::exp(d.X(i, 1)) + z(gen);
    }
    return d;
}

StageSpec ms_stage(int p) { return {BasisSpec::ispline(), PenaltyKind::coop, std::vector<double>(p, 1.0)}; }

std::vector<double> grid_for(const Data& d, const StageSpec& s, int size = 20) {
    const DesignMatrix design = build_design(d.X, s.basis);
    const CenteredResponse yc = center_response(d.y);
    const double lmax = lambda_max(design.Z, yc.y, design.layout(), s.kind, s.weights);
    return lambda_grid(lmax, size, 1e-2);
}

// Fold statistics computed once on the whole sample: what CV must not do.
std::vector<double> leaky_cv(const Data& d, const StageSpec& s, std::span<const double> lambdas,
                             const std::vector<int>& fold_of) {
    const DesignMatrix design = build_design(d.X, s.basis);
    const CenteredResponse yc = center_response(d.y);
    const int folds = *std::max_element(fold_of.begin(), fold_of.end()) + 1;
    std::vector<double> cv(lambdas.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < d.X.rows(); ++i) (fold_of[i] == f ? test : train).push_back(i);
        const Matrix Zt = design.Z(train, Eigen::all);
        const Vector yt = yc.y(train);
        const LambdaPath path = solve_path(Zt, yt, design.layout(), s.kind, s.weights, lambdas);
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            const Vector pred = design.Z(test, Eigen::all) * path.fits[l].beta;
            cv[l] += (yc.y(test) - pred).squaredNorm();
        }
    }
    for (double& v : cv) v /= static_cast<double>(d.X.rows());
    return cv;
}

}  // namespace

TEST(KFold, EqualFoldsWhenDivisible) {
    const auto f = kfold_split(50, 10, 3);
    ASSERT_EQ(f.size(), 50u);
    std::map<int, int> sizes;
    for (int k : f) ++sizes[k];
    ASSERT_EQ(sizes.size(), 10u);
    for (const auto& [k, s] : sizes) EXPECT_EQ(s, 5) << "fold " << k;
}

TEST(KFold, SizesDifferByAtMostOne) {
    const auto f = kfold_split(52, 10, 4);
    std::map<int, int> sizes;
    for (int k : f) ++sizes[k];
    int fives = 0, sixes = 0;
    for (const auto& [k, s] : sizes) {
        fives += s == 5;
        sixes += s == 6;
    }
    EXPECT_EQ(fives, 8);
    EXPECT_EQ(sixes, 2);
}

TEST(KFold, DeterministicAndSeedDependent) {
    EXPECT_EQ(kfold_split(100, 5, 9), kfold_split(100, 5, 9));
    EXPECT_NE(kfold_split(100, 5, 9), kfold_split(100, 5, 10));
}

TEST(KFold, Errors) {
    EXPECT_THROW(kfold_split(10, 1, 1), std::invalid_argument);
    EXPECT_THROW(kfold_split(3, 4, 1), std::invalid_argument);
}

TEST(SelectLambda, FlatCurvePicksLargestLambda) {
    const std::vector<double> flat(7, 2.5);
    EXPECT_EQ(select_lambda_index(flat), 0u);
}

TEST(SelectLambda, DecreasingCurvePicksSmallestLambda) {
    const std::vector<double> dec{5, 4, 3, 2, 1};
    EXPECT_EQ(select_lambda_index(dec), 4u);
}

TEST(SelectLambda, ArgminAndTies) {
    EXPECT_EQ(select_lambda_index(std::vector<double>{3, 1, 2, 4}), 1u);
    EXPECT_EQ(select_lambda_index(std::vector<double>{3, 1, 2, 1, 5}), 1u);
    CVResult r;
    r.lambdas = {1.0, 0.5, 0.25};
    r.cv = {2.0, 0.7, 0.7};
    EXPECT_EQ(select_lambda(r), 0.5);
    EXPECT_THROW(select_lambda_index(std::vector<double>{}), std::invalid_argument);
}

TEST(CrossValidation, PerfectLinearPredictorHasZeroError) {
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(-1.0, 3.0);
    Matrix X(40, 1);
    Vector y(40);
    for (int i = 0; i < 40; ++i) {
        X(i, 0) = u(gen);
    }
    // Both extremes appear twice in different folds, so no held-out point is
    // clamped by its training fold's rescaling.
    X(0, 0) = X(1, 0) = -1.0;
    X(2, 0) = X(3, 0) = 3.0;
    for (int i = 0; i < 40; ++i) y[i] = 1.0 + 2.0 * X(i, 0);
    std::vector<int> fold_of(40);
    for (int i = 0; i < 40; ++i) fold_of[i] = i % 5;
    const StageSpec s{BasisSpec::identity(), PenaltyKind::l1, {1.0}};
    const std::vector<double> lambdas{0.0};
    const CVResult r = cv_curve(X, y, s, lambdas, fold_of);
    EXPECT_LE(r.cv[0], 1e-20);
}

TEST(CrossValidation, NullModelClosedForm) {
    const Data d = make_data(43, 2);
    const auto fold_of = kfold_split(43, 5, 11);
    const std::vector<double> lambdas{1e6, 5e5};
    const CVResult r = cv_curve(d.X, d.y, ms_stage(4), lambdas, fold_of);
    double expected = 0.0;
    for (int f = 0; f < 5; ++f) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < 43; ++i) {
            if (fold_of[i] != f) {
                sum += d.y[i];
                ++count;
            }
        }
        const double mean = sum / count;
        for (int i = 0; i < 43; ++i) {
            if (fold_of[i] == f) expected += (d.y[i] - mean) * (d.y[i] - mean);
        }
    }
    expected /= 43.0;
    EXPECT_NEAR(r.cv[0], expected, 1e-12 * expected);
    EXPECT_NEAR(r.cv[1], expected, 1e-12 * expected);
    EXPECT_EQ(r.index, 0u);
}

TEST(CrossValidation, AllExcludedGivesNullModel) {
    const Data d = make_data(30, 3);
    StageSpec s = ms_stage(4);
    std::fill(s.weights.begin(), s.weights.end(), std::numeric_limits<double>::infinity());
    const std::vector<double> lambdas{1.0, 0.1};
    const auto fold_of = kfold_split(30, 3, 1);
    const CVResult none = cv_curve(d.X, d.y, s, lambdas, fold_of);
    const CVResult big = cv_curve(d.X, d.y, ms_stage(4), std::vector<double>{1e6}, fold_of);
    EXPECT_NEAR(none.cv[0], big.cv[0], 1e-12);
    EXPECT_NEAR(none.cv[1], big.cv[0], 1e-12);
}

TEST(CrossValidation, PermutationInvariantWithMatchedFolds) {
    const Data d = make_data(60, 4);
    const StageSpec s = ms_stage(4);
    const auto lambdas = grid_for(d, s, 8);
    const auto fold_of = kfold_split(60, 6, 5);
    const CVResult a = cv_curve(d.X, d.y, s, lambdas, fold_of);

    std::vector<int> perm(60);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(8));
    Data p{Matrix(60, 4), Vector(60)};
    std::vector<int> fold_p(60);
    for (int i = 0; i < 60; ++i) {
        p.X.row(i) = d.X.row(perm[i]);
        p.y[i] = d.y[perm[i]];
        fold_p[i] = fold_of[perm[i]];
    }
    const CVResult b = cv_curve(p.X, p.y, s, lambdas, fold_p);
    for (std::size_t l = 0; l < lambdas.size(); ++l) EXPECT_NEAR(a.cv[l], b.cv[l], 1e-6 * a.cv[l]);
}

TEST(CrossValidation, RecomputesStatisticsPerFold) {
    const Data d = make_data(50, 5);
    const StageSpec s = ms_stage(4);
    const auto lambdas = grid_for(d, s, 6);
    const auto fold_of = kfold_split(50, 5, 6);
    const CVResult honest = cv_curve(d.X, d.y, s, lambdas, fold_of);
    const std::vector<double> leaky = leaky_cv(d, s, lambdas, fold_of);
    double gap = 0.0;
    for (std::size_t l = 0; l < lambdas.size(); ++l) gap = std::max(gap, std::abs(honest.cv[l] - leaky[l]));
    EXPECT_GT(gap, 1e-6);
}

TEST(CrossValidation, DeterministicForSeed) {
    const Data d = make_data(45, 6);
    const StageSpec s = ms_stage(4);
    const auto lambdas = grid_for(d, s, 10);
    const CVResult a = cv_curve(d.X, d.y, s, lambdas, 5, 21);
    const CVResult b = cv_curve(d.X, d.y, s, lambdas, 5, 21);
    EXPECT_EQ(a.cv, b.cv);
    EXPECT_EQ(a.index, b.index);
    EXPECT_EQ(a.seed, 21u);
    EXPECT_EQ(a.folds, 5);
    EXPECT_EQ(a.lambda, a.lambdas[a.index]);
    EXPECT_TRUE(a.converged);
}

TEST(CrossValidation, SignalBeatsNullModel) {
    const Data d = make_data(80, 7, 0.1);
    const StageSpec s = ms_stage(4);
    const auto lambdas = grid_for(d, s, 15);
    const CVResult r = cv_curve(d.X, d.y, s, lambdas, 10, 1);
    EXPECT_GT(r.index, 0u);
    EXPECT_LT(r.cv[r.index], 0.5 * r.cv[0]);
}

TEST(CrossValidation, Errors) {
    const Data d = make_data(20, 8);
    const StageSpec s = ms_stage(4);
    const std::vector<double> lambdas{1.0};
    std::vector<int> tiny(20, 0);
    tiny[19] = 1;
    EXPECT_THROW(cv_curve(d.X, d.y, s, lambdas, tiny), std::invalid_argument);
    EXPECT_THROW(cv_curve(d.X, d.y, s, lambdas, 25, 1), std::invalid_argument);
    EXPECT_THROW(cv_curve(d.X, d.y, s, std::vector<double>{}, 5, 1), std::invalid_argument);
    EXPECT_THROW(cv_curve(d.X, d.y, ms_stage(3), lambdas, 5, 1), std::invalid_argument);
    EXPECT_THROW(cv_curve(d.X, d.y.head(10), s, lambdas, 5, 1), std::invalid_argument);
}
