#include "support.hpp"

#include <gfivs/design.hpp>
#include <gfivs/fiducial.hpp>

#include <Eigen/QR>
#include <gtest/gtest.h>

using namespace gfivs;
using gfivs::testing::gaussian_matrix;
using gfivs::testing::random_design;
using gfivs::testing::random_orthogonal;

TEST(ModelIndex, SortsAndRejectsDuplicates) {
    ModelIndex M{3, 1, 2};
    EXPECT_EQ(M.indices(), (std::vector<int>{1, 2, 3}));
    EXPECT_THROW(ModelIndex({1, 1}), InputError);
    EXPECT_THROW(ModelIndex({-1}), InputError);
    EXPECT_TRUE(M.contains(2));
    EXPECT_EQ(M.with(0), (ModelIndex{0, 1, 2, 3}));
    EXPECT_EQ(M.without(2), (ModelIndex{1, 3}));
    EXPECT_EQ(M.to_string(), "{1,2,3}");
    EXPECT_LT((ModelIndex{0, 5}), (ModelIndex{1}));
}

TEST(Standardize, UnitNormColumns) {
    Rng rng(1);
    Matrix X = gaussian_matrix(12, 4, rng) * 3.0;
    Vector y = Vector::LinSpaced(12, 0, 11);
    for (bool center : {false, true}) {
        const auto d = standardize(y, X, center);
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(d.X().col(j).norm(), 1.0, 1e-14);
        EXPECT_TRUE(d.X().isApprox(d.transform(X), 1e-14));
        if (center) EXPECT_NEAR(d.y().sum(), 0.0, 1e-12);
    }
}

TEST(Standardize, RejectsDegenerateColumns) {
    Matrix X(4, 2);
    X << 1, 0, 2, 0, 3, 0, 4, 0;
    Vector y(4);
    y << 1, 2, 3, 4;
    EXPECT_THROW(standardize(y, X, false), InputError);
    X.col(1).setConstant(2.0);
    EXPECT_NO_THROW(standardize(y, X, false));
    EXPECT_THROW(standardize(y, X, true), InputError);
    EXPECT_THROW(standardize(Vector::Ones(3), X, false), InputError);
}

TEST(FitModel, MatchesPseudoInverseOnThousandRandomModels) {
    Rng rng(7);
    std::uniform_int_distribution<int> np(4, 20);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = np(rng);
        const int p = std::uniform_int_distribution<int>(1, 8)(rng);
        const auto d = random_design(n, p, 2, 1.0, rng);
        const int k = std::uniform_int_distribution<int>(1, std::min(p, n - 1))(rng);
        std::vector<int> all(p);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        const ModelIndex M(std::vector<int>(all.begin(), all.begin() + k));
        const auto fit = try_fit_model(d, M);
        ASSERT_TRUE(fit.has_value());
        const Matrix XM = d.columns(M);
        const Matrix pinv = XM.completeOrthogonalDecomposition().pseudoInverse();
        const Vector b = pinv * d.y();
        EXPECT_LT((fit->beta_hat - b).norm(), 1e-8 * (1.0 + b.norm()));
        EXPECT_NEAR(fit->rss, (d.y() - XM * b).squaredNorm(), 1e-9 * (1.0 + fit->rss));
        const Matrix H = XM * pinv;  // projection onto span(X_M)
        const double lam = (d.X().transpose() * H * d.X()).trace();
        EXPECT_NEAR(fit->lambda_M, lam, 1e-8 * (1.0 + lam));
        EXPECT_NEAR(fit->sigma2_hat, fit->rss / (n - k), 1e-12 * (1.0 + fit->rss));
    }
}

TEST(FitModel, RankDeficiencyAndOversizedModels) {
    Rng rng(3);
    Matrix X = gaussian_matrix(10, 3, rng);
    X.col(2) = X.col(0) - 2.0 * X.col(1);
    const auto d = standardize(Vector::Ones(10) + X.col(0), X, false);
    EXPECT_FALSE(try_fit_model(d, {0, 1, 2}).has_value());
    EXPECT_THROW(fit_model(d, {0, 1, 2}), RankDeficient);
    EXPECT_TRUE(try_fit_model(d, {0, 1}).has_value());
    EXPECT_FALSE(try_fit_model(d, {}).has_value());
    EXPECT_THROW(try_fit_model(d, {5}), InputError);

    const auto wide = random_design(3, 5, 1, 1.0, rng);
    EXPECT_FALSE(try_fit_model(wide, {0, 1, 2, 3}).has_value());
}

TEST(FitModel, LambdaEqualsModelSizeOnOrthogonalDesign) {
    Rng rng(11);
    const Matrix Q = random_orthogonal(16, rng);
    const Matrix X = Q.leftCols(6) * 2.5;
    const auto d = standardize(gaussian_matrix(16, 1, rng).col(0), X, false);
    for (int mask = 1; mask < (1 << 6); ++mask) {
        std::vector<int> idx;
        for (int j = 0; j < 6; ++j)
            if (mask >> j & 1) idx.push_back(j);
        const ModelIndex M(idx);
        EXPECT_NEAR(fit_model(d, M).lambda_M, static_cast<double>(M.size()), 1e-10) << M.to_string();
    }
}

TEST(FitModel, RowOrthogonalInvariance) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 15, p = 6;
        const Matrix X = gaussian_matrix(n, p, rng);
        const Vector y = X.col(0) - X.col(3) + gaussian_matrix(n, 1, rng).col(0);
        const Matrix O = random_orthogonal(n, rng);
        const auto d = standardize(y, X, false);
        const auto r = standardize(O * y, O * X, false);
        for (const ModelIndex& M : {ModelIndex{0}, ModelIndex{0, 3}, ModelIndex{1, 2, 5}}) {
            const auto a = fit_model(d, M);
            const auto b = fit_model(r, M);
            EXPECT_NEAR(a.rss, b.rss, 1e-8 * (1.0 + a.rss));
            EXPECT_NEAR(a.lambda_M, b.lambda_M, 1e-8);
            EXPECT_NEAR(*log_base_score(a, n), *log_base_score(b, n), 1e-8);
        }
    }
}

TEST(FitModel, RssIsMonotoneUnderNesting) {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = random_design(14, 7, 3, 1.0, rng);
        std::vector<int> order(7);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        double prev = d.y().squaredNorm();
        ModelIndex M;
        for (int j : order) {
            M = M.with(j);
            const double rss = fit_model(d, M).rss;
            EXPECT_LE(rss, prev * (1.0 + 1e-12) + 1e-12);
            prev = rss;
        }
    }
}

TEST(DeltaM, ZeroWhenModelContainsTruth) {
    Rng rng(2);
    const auto d = random_design(20, 5, 2, 1.0, rng);
    const Vector beta0 = Vector::Ones(2);
    EXPECT_NEAR(delta_M(d, {0, 1, 4}, {0, 1}, beta0), 0.0, 1e-12);
    EXPECT_GT(delta_M(d, {2, 3}, {0, 1}, beta0), 0.0);
}

TEST(Design, CachedGramQuantities) {
    Rng rng(4);
    const auto d = random_design(10, 4, 1, 1.0, rng);
    EXPECT_TRUE(d.gram().isApprox(d.X().transpose() * d.X()));
    EXPECT_TRUE(d.gram_sq().isApprox(d.gram() * d.gram()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(d.gram());
    EXPECT_NEAR(d.lipschitz(), std::pow(eig.eigenvalues().maxCoeff(), 2), 1e-12);
}
