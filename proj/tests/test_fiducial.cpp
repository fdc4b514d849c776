#include "support.hpp"

#include <gfivs/fiducial.hpp>

#include <gtest/gtest.h>

using namespace gfivs;
using gfivs::testing::random_design;

namespace {

ModelFit fit_with_rss(int m, double rss) {
    ModelFit f;
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    f.M = ModelIndex(idx);
    f.beta_hat = Vector::Ones(m);
    f.rss = rss;
    return f;
}

}  // namespace

// Reference values evaluated with 40-digit arithmetic.
TEST(LogBaseScore, HighPrecisionReference) {
    EXPECT_NEAR(*log_base_score(fit_with_rss(3, 12.5), 30), -9.857301390988519, 1e-11);
    EXPECT_NEAR(*log_base_score(fit_with_rss(8, 87.25), 100), -69.62652584673060, 1e-10);
    EXPECT_NEAR(*log_base_score(fit_with_rss(1, 0.75), 25), 21.38301662199407, 1e-11);
}

TEST(LogBaseScore, DegenerateModels) {
    EXPECT_FALSE(log_base_score(fit_with_rss(29, 1.0), 30).has_value());
    EXPECT_FALSE(log_base_score(fit_with_rss(3, 0.0), 30).has_value());
    EXPECT_FALSE(log_base_score(fit_with_rss(3, 1e-30), 30).has_value());
    EXPECT_TRUE(log_base_score(fit_with_rss(28, 1.0), 30).has_value());
}

TEST(SampleBetaT, MomentsMatchMultivariateT) {
    Rng rng(31);
    const auto d = random_design(12, 3, 3, 1.0, rng);
    const auto fit = fit_model(d, {0, 1, 2});
    const int n = d.n(), m = 3, nu = n - m, N = 200000;
    const Matrix draws = sample_beta_t(fit, n, rng, N);
    const Vector mean = draws.colwise().mean().transpose();
    const Matrix centered = draws.rowwise() - mean.transpose();
    const Matrix cov = centered.transpose() * centered / (N - 1);
    const Matrix G = d.columns(fit.M).transpose() * d.columns(fit.M);
    const Matrix expected = (fit.rss / nu) * (static_cast<double>(nu) / (nu - 2)) * G.inverse();
    for (int a = 0; a < m; ++a) {
        const double se = std::sqrt(expected(a, a) / N);
        EXPECT_NEAR(mean(a), fit.beta_hat(a), 5.0 * se);
        for (int b = 0; b < m; ++b) {
            // Heavy-ish tails at nu = 9: allow 5% of the scale on each entry.
            const double tol = 0.05 * std::sqrt(expected(a, a) * expected(b, b));
            EXPECT_NEAR(cov(a, b), expected(a, b), tol) << a << "," << b;
        }
    }
}

TEST(SampleBetaT, RequiresDegreesOfFreedom) {
    ModelFit f = fit_with_rss(3, 1.0);
    f.chol = Matrix::Identity(3, 3);
    Rng rng(1);
    EXPECT_THROW(sample_beta_t(f, 3, rng, 1), InputError);
}

TEST(EstimateEh, NonPositiveEpsilonCountsEveryDraw) {
    Rng rng(32);
    const auto d = random_design(15, 4, 2, 1.0, rng);
    const ModelIndex M{0, 1};
    const auto s = estimate_e_h(d, M, try_fit_model(d, M), 0.0, 25, rng, {});
    EXPECT_EQ(s.admissible_count, 25);
    EXPECT_DOUBLE_EQ(s.e_h_hat, 1.0);
    EXPECT_NEAR(s.log_score, s.log_base, 1e-15);
}

TEST(EstimateEh, RankDeficientScoresMinusInfinity) {
    Rng rng(33);
    const auto d = random_design(15, 4, 2, 1.0, rng);
    const auto s = estimate_e_h(d, {0, 1}, std::nullopt, 1.0, 10, rng, {});
    EXPECT_FALSE(s.viable());
    EXPECT_THROW(estimate_e_h(d, {0}, try_fit_model(d, {0}), 1.0, 0, rng, {}), InputError);
}

TEST(EstimateEh, SmallBlockAverageMatchesLargeBlock) {
    Rng rng(34);
    const auto d = random_design(20, 5, 2, 1.5, rng);
    const ModelIndex M{0, 1, 2};
    const auto fit = try_fit_model(d, M);
    const double eps = default_epsilon(*fit, d.n(), d.p(), 1);
    const auto big = estimate_e_h(d, M, fit, eps, 20000, rng, {});
    double mean = 0.0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) mean += estimate_e_h(d, M, fit, eps, 10, rng, {}).e_h_hat;
    mean /= reps;
    const double q = big.e_h_hat;
    const double se = std::sqrt(q * (1 - q) / (10.0 * reps) + q * (1 - q) / 20000.0);
    EXPECT_NEAR(mean, q, 5.0 * se + 1e-12);
}
