#include "support.hpp"

#include <gfivs/l0.hpp>
#include <gfivs/oracle.hpp>

#include <gtest/gtest.h>

using namespace gfivs;
using gfivs::testing::gaussian_matrix;
using gfivs::testing::random_design;

namespace {

ModelFit synthetic_fit(int m, double lambda, double sigma2) {
    ModelFit f;
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    f.M = ModelIndex(idx);
    f.lambda_M = lambda;
    f.sigma2_hat = sigma2;
    return f;
}

ModelIndex random_model(int p, int k, Rng& rng) {
    std::vector<int> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    return ModelIndex(std::vector<int>(all.begin(), all.begin() + k));
}

Vector fitted_target(const StandardizedDesign& d, const ModelIndex& M, const Vector& beta) {
    return d.columns(M) * beta;
}

}  // namespace

// Reference values evaluated with 40-digit arithmetic.
TEST(DefaultEpsilon, HighPrecisionReference) {
    EXPECT_NEAR(default_epsilon(synthetic_fit(3, 3.7, 1.3), 30, 9, 1), 4.263938722213785, 1e-12);
    EXPECT_NEAR(default_epsilon(synthetic_fit(8, 2.25, 0.8), 100, 100, 2), 9.452635915905852, 1e-12);
    EXPECT_EQ(default_epsilon(synthetic_fit(1, 1.0, 1.0), 30, 9, 10), 0.0);
}

TEST(DefaultEpsilon, DecreasesInPo) {
    const auto f = synthetic_fit(3, 2.0, 1.0);
    double prev = default_epsilon(f, 30, 9, 0);
    for (int po = 1; po < 12; ++po) {
        const double e = default_epsilon(f, 30, 9, po);
        EXPECT_LE(e, prev);
        EXPECT_GE(e, 0.0);
        prev = e;
    }
}

TEST(TopKSupport, TiesResolveToLowerIndex) {
    Vector v(5);
    v << 1.0, -3.0, 3.0, 0.5, 3.0;
    EXPECT_EQ(detail::top_k_support(v, 2), (std::vector<int>{1, 2}));
    EXPECT_EQ(detail::top_k_support(v, 0), std::vector<int>{});
    EXPECT_EQ(detail::top_k_support(v, 5).size(), 5u);
}

TEST(L0UpperBound, ObjectiveTraceIsMonotone) {
    Rng rng(21);
    L0Config cfg;
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = random_design(18, 8, 3, 1.0, rng);
        const Vector target = gaussian_matrix(18, 1, rng).col(0);
        std::vector<double> trace;
        const int kappa = std::uniform_int_distribution<int>(1, 7)(rng);
        const auto r = l0_min_upper_bound(d, target, kappa, Vector::Zero(8), cfg, 0.0, &trace);
        ASSERT_FALSE(trace.empty());
        for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
        EXPECT_LE(static_cast<int>(detail::nonzeros(r.b).size()), kappa);
        const Vector c = d.X().transpose() * target;
        EXPECT_NEAR(r.objective, 0.5 * (c - d.gram() * r.b).squaredNorm(), 1e-9 * (1 + r.objective));
    }
}

TEST(L0UpperBound, NeverBelowExactMinimum) {
    Rng rng(22);
    L0Config cfg;
    for (int trial = 0; trial < 300; ++trial) {
        const int p = std::uniform_int_distribution<int>(2, 8)(rng);
        const int n = std::uniform_int_distribution<int>(4, 20)(rng);
        const auto d = random_design(n, p, 2, 1.0, rng);
        const Vector target = gaussian_matrix(n, 1, rng).col(0);
        const int kappa = std::uniform_int_distribution<int>(1, p)(rng);
        const auto exact = brute_force_l0(d, target, kappa);
        const auto r = l0_min_upper_bound(d, target, kappa, Vector::Zero(p), cfg, 0.0);
        EXPECT_GE(r.objective, exact.min_objective - 1e-9 * (1.0 + exact.min_objective));
    }
}

TEST(L0UpperBound, EarlyExitBelowEpsilon) {
    Rng rng(23);
    const auto d = random_design(15, 6, 2, 1.0, rng);
    const Vector target = d.X().col(0) * 2.0;
    const auto r = l0_min_upper_bound(d, target, 1, Vector::Zero(6), L0Config{}, 1e-3);
    EXPECT_TRUE(r.early_exit);
    EXPECT_LT(r.objective, 1e-3);
}

TEST(L0UpperBound, RejectsBadArguments) {
    Rng rng(24);
    const auto d = random_design(10, 4, 1, 1.0, rng);
    EXPECT_THROW(l0_min_upper_bound(d, Vector::Zero(9), 1, Vector::Zero(4), {}, 0.0), InputError);
    EXPECT_THROW(l0_min_upper_bound(d, Vector::Zero(10), 5, Vector::Zero(4), {}, 0.0), InputError);
    L0Config bad;
    bad.max_iters = 0;
    EXPECT_THROW(l0_min_upper_bound(d, Vector::Zero(10), 1, Vector::Zero(4), bad, 0.0), InputError);
}

TEST(EvalH, DefinitionalZeros) {
    Rng rng(25);
    // Exhaustive over models of a p = 6 design with an exact linear dependency and n = 4.
    Matrix X = gaussian_matrix(4, 6, rng);
    X.col(5) = X.col(0) + X.col(1);
    const auto d = standardize(gaussian_matrix(4, 1, rng).col(0), X, false);
    for (int mask = 1; mask < (1 << 6); ++mask) {
        std::vector<int> idx;
        for (int j = 0; j < 6; ++j)
            if (mask >> j & 1) idx.push_back(j);
        const ModelIndex M(idx);
        const auto fit = try_fit_model(d, M);
        const Vector beta = Vector::Ones(static_cast<Eigen::Index>(M.size()));
        const auto v = eval_h(d, M, beta, 1.0, fit, L0Config{});
        const bool deficient = static_cast<int>(M.size()) > d.n() ||
                               (M.contains(0) && M.contains(1) && M.contains(5));
        if (deficient) {
            EXPECT_FALSE(fit.has_value()) << M.to_string();
            EXPECT_FALSE(v.admissible) << M.to_string();
        }
        if (!fit) EXPECT_FALSE(v.admissible) << M.to_string();
    }
}

TEST(EvalH, NonPositiveEpsilonIsAlwaysAdmissible) {
    Rng rng(26);
    const auto d = random_design(12, 5, 2, 1.0, rng);
    const ModelIndex M{0, 1};
    const auto fit = try_fit_model(d, M);
    EXPECT_TRUE(eval_h(d, M, fit->beta_hat, 0.0, fit, {}).admissible);
    EXPECT_TRUE(eval_h(d, M, fit->beta_hat, -1.0, fit, {}).admissible);
}

TEST(EvalH, MonotoneInEpsilon) {
    Rng rng(27);
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = random_design(16, 6, 3, 1.0, rng);
        const ModelIndex M = random_model(6, 3, rng);
        const auto fit = try_fit_model(d, M);
        ASSERT_TRUE(fit);
        bool was_admissible = true;
        for (double eps : {1e-4, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
            const bool adm = eval_h(d, M, fit->beta_hat, eps, fit, {}).admissible;
            if (!was_admissible) EXPECT_FALSE(adm);
            was_admissible = adm;
        }
    }
}

TEST(EvalH, ScalingCovariance) {
    Rng rng(28);
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = random_design(16, 6, 3, 1.0, rng);
        const ModelIndex M = random_model(6, 3, rng);
        const auto fit = try_fit_model(d, M);
        const double eps = std::uniform_real_distribution<double>(0.01, 2.0)(rng);
        const double s = 3.0;
        const auto a = eval_h(d, M, fit->beta_hat, eps, fit, {});
        const auto b = eval_h(d, M, s * fit->beta_hat, s * s * eps, fit, {});
        EXPECT_EQ(a.admissible, b.admissible);
        const double tiny = std::numeric_limits<double>::min();
        const auto fa = eval_h(d, M, fit->beta_hat, tiny, fit, {});
        const auto fb = eval_h(d, M, s * fit->beta_hat, tiny, fit, {});
        EXPECT_NEAR(fb.objective_bound, s * s * fa.objective_bound, 1e-8 * (s * s * fa.objective_bound) + 1e-20);
    }
}

TEST(EvalH, NoFalseNegativesAgainstExhaustiveSearch) {
    Rng rng(29);
    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const int p = std::uniform_int_distribution<int>(2, 8)(rng);
        const int n = std::uniform_int_distribution<int>(p, 20)(rng);
        const auto d = random_design(n, p, 2, 1.0, rng);
        const int k = std::uniform_int_distribution<int>(1, std::min(p, n - 1))(rng);
        const ModelIndex M = random_model(p, k, rng);
        const auto fit = try_fit_model(d, M);
        if (!fit) continue;
        const auto exact = brute_force_l0(d, fitted_target(d, M, fit->beta_hat), k - 1);
        for (double scale : {0.5, 0.999, 1.001, 2.0}) {
            const double eps = scale * exact.min_objective;
            if (!(eps > 0.0)) continue;
            const auto v = eval_h(d, M, fit->beta_hat, eps, fit, {});
            if (exact.min_objective >= eps) {
                EXPECT_TRUE(v.admissible);
                ++checked;
            }
            EXPECT_GE(v.objective_bound, exact.min_objective - 1e-9 * (1 + exact.min_objective));
        }
    }
    EXPECT_GT(checked, 300);
}

TEST(EvalH, CollinearSetupTwoModelIsInadmissible) {
    // x9 = x1 + x2 + x3 + noise(0.1): the 4-covariate model is nearly representable by 3.
    Rng rng(30);
    std::normal_distribution<double> z;
    const int n = 30;
    Matrix X = gaussian_matrix(n, 9, rng);
    for (int i = 0; i < n; ++i) {
        X(i, 3) = 0.25 * X(i, 0) + 0.1 * z(rng);
        X(i, 4) = 0.5 * X(i, 1) + 0.1 * z(rng);
        X(i, 5) = -0.75 * X(i, 2) + 0.1 * z(rng);
        X(i, 6) = X(i, 0) + X(i, 2) + 0.1 * z(rng);
        X(i, 7) = X(i, 1) - X(i, 2) + 0.1 * z(rng);
        X(i, 8) = X(i, 0) + X(i, 1) + X(i, 2) + 0.1 * z(rng);
    }
    Vector y = X.rowwise().sum();
    for (int i = 0; i < n; ++i) y(i) += z(rng);
    const auto d = standardize(y, X, false);
    const ModelIndex M{0, 1, 2, 8};
    const auto fit = try_fit_model(d, M);
    ASSERT_TRUE(fit);
    const double eps = default_epsilon(*fit, n, 9, 1);
    const BruteForceL0 solver(d, 3);
    const Matrix draws = sample_beta_t(*fit, n, rng, 200);
    int inadmissible = 0, agree = 0;
    for (int r = 0; r < draws.rows(); ++r) {
        const Vector beta = draws.row(r).transpose();
        const bool pgd = eval_h(d, M, beta, eps, fit, {}).admissible;
        const bool exact = exact_admissible(d, M, beta, eps, solver);
        if (!pgd) ++inadmissible;
        if (pgd == exact) ++agree;
        if (exact) EXPECT_TRUE(pgd);
    }
    EXPECT_GT(inadmissible, 100);
    EXPECT_GT(agree, 180);
}
