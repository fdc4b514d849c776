#pragma once

#include "design.hpp"
#include "l0.hpp"
#include "random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace gfivs {

/** Unnormalized log fiducial mass of a model: the analytic factor plus the log of a
 * Monte Carlo estimate of E(h(beta_M)).
 */
struct ModelScore {
    double log_base = -std::numeric_limits<double>::infinity();
    double e_h_hat = 0.0;
    int n_importance = 0;
    int admissible_count = 0;
    double log_score = -std::numeric_limits<double>::infinity();

    bool viable() const noexcept { return std::isfinite(log_score); }
};

/** log of pi^{|M|/2} Gamma((n-|M|)/2) RSS_M^{-(n-|M|-1)/2}.
 *
 * Returns std::nullopt for degenerate models: |M| >= n - 1, or an interpolating fit
 * (RSS_M at round-off level relative to the fitted signal).
 */
inline std::optional<double> log_base_score(const ModelFit& fit, int n) {
    const int m = static_cast<int>(fit.M.size());
    if (m >= n - 1) return std::nullopt;
    if (!(fit.rss > 0.0) || !std::isfinite(fit.rss)) return std::nullopt;
    const double scale = fit.beta_hat.squaredNorm() + fit.rss;
    if (fit.rss <= 1e-24 * scale) return std::nullopt;
    return 0.5 * m * std::log(std::numbers::pi) + std::lgamma(0.5 * (n - m)) -
           0.5 * (n - m - 1) * std::log(fit.rss);
}

/** `count` draws from the location-scale multivariate t law with n - |M| degrees of freedom,
 * location beta_hat and scale (RSS/(n-|M|)) (X_M'X_M)^{-1}.  Returns a count x |M| matrix.
 */
inline Matrix sample_beta_t(const ModelFit& fit, int n, Rng& rng, int count) {
    const int m = static_cast<int>(fit.M.size());
    const int dof = n - m;
    if (dof < 1) throw InputError("sample_beta_t: need n > |M|");
    if (fit.chol.rows() != m) throw RankDeficient("sample_beta_t: missing Cholesky factor");
    const double s = std::sqrt(fit.rss / dof);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chisq(dof);
    const auto Lt = fit.chol.transpose().triangularView<Eigen::Upper>();

    Matrix out(count, m);
    Vector z(m);
    for (int i = 0; i < count; ++i) {
        for (int a = 0; a < m; ++a) z(a) = normal(rng);
        const double V = chisq(rng);
        Lt.solveInPlace(z);
        out.row(i) = (fit.beta_hat + (s / std::sqrt(V / dof)) * z).transpose();
    }
    return out;
}

/** Fresh N-sample estimate of E(h(beta_M)) combined with the analytic factor.
 *
 * `fit` is std::nullopt when X_M is rank deficient; the score is then -inf.
 */
inline ModelScore estimate_e_h(const StandardizedDesign& d, const ModelIndex& M,
                               const std::optional<ModelFit>& fit, double epsilon, int N,
                               Rng& rng, const L0Config& cfg) {
    if (N < 1) throw InputError("estimate_e_h: N must be >= 1");
    ModelScore score;
    score.n_importance = N;
    if (!fit || static_cast<int>(M.size()) > d.n()) return score;
    const auto base = log_base_score(*fit, d.n());
    if (!base) return score;
    score.log_base = *base;

    if (epsilon <= 0.0) {
        score.admissible_count = N;
    } else {
        const Matrix draws = sample_beta_t(*fit, d.n(), rng, N);
        for (int i = 0; i < N; ++i) {
            const Vector beta = draws.row(i).transpose();
            if (eval_h(d, M, beta, epsilon, fit, cfg).admissible) ++score.admissible_count;
        }
    }
    score.e_h_hat = static_cast<double>(score.admissible_count) / N;
    if (score.admissible_count > 0) score.log_score = score.log_base + std::log(score.e_h_hat);
    return score;
}

}  // namespace gfivs
