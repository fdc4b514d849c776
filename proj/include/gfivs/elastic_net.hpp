#pragma once

#include "design.hpp"
#include "random.hpp"
#include "sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace gfivs {

struct ElasticNetConfig {
    /// Mixing between the L1 (1) and ridge (0) penalties.
    double alpha_mix = 0.5;
    int n_lambda = 100;
    /// lambda_min = lambda_max * lambda_ratio.
    double lambda_ratio = 1e-3;
    int cv_folds = 5;
    int max_sweeps = 1000;
    double tol = 1e-7;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(alpha_mix > 0.0 && alpha_mix <= 1.0))
            throw InputError("ElasticNetConfig: alpha_mix must be in (0, 1]");
        if (n_lambda < 1) throw InputError("ElasticNetConfig: n_lambda must be >= 1");
        if (cv_folds < 2) throw InputError("ElasticNetConfig: cv_folds must be >= 2");
    }
};

inline double soft_threshold(double z, double g) {
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

/** Cyclic coordinate descent for
 *     (1/2n) ||y - X b||^2 + lambda (alpha ||b||_1 + (1 - alpha)/2 ||b||^2)
 * starting from `beta` (updated in place).
 */
inline void elastic_net_cd(const Matrix& X, const Vector& y, double lambda, double alpha,
                           Vector& beta, int max_sweeps = 1000, double tol = 1e-7) {
    const Eigen::Index n = X.rows(), p = X.cols();
    const double nd = static_cast<double>(n);
    Vector sqnorm = X.colwise().squaredNorm().transpose() / nd;
    Vector r = y - X * beta;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (sqnorm(j) == 0.0) continue;
            const double old = beta(j);
            const double z = X.col(j).dot(r) / nd + sqnorm(j) * old;
            const double nb = soft_threshold(z, lambda * alpha) / (sqnorm(j) + lambda * (1 - alpha));
            if (nb != old) {
                r.noalias() -= (nb - old) * X.col(j);
                beta(j) = nb;
                max_delta = std::max(max_delta, std::abs(nb - old) * std::sqrt(sqnorm(j)));
            }
        }
        if (max_delta < tol) break;
    }
}

/// Geometric grid from lambda_max down to lambda_max * ratio.
inline std::vector<double> lambda_grid(const Matrix& X, const Vector& y, double alpha, int count,
                                       double ratio) {
    const double lmax = (X.transpose() * y).cwiseAbs().maxCoeff() /
                        (static_cast<double>(X.rows()) * alpha);
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double t = count > 1 ? static_cast<double>(k) / (count - 1) : 0.0;
        grid[static_cast<std::size_t>(k)] = lmax * std::pow(ratio, t);
    }
    return grid;
}

/// Elastic net coefficients over the full path, warm-started from lambda_max downwards.
inline std::vector<Vector> elastic_net_path(const Matrix& X, const Vector& y,
                                            const std::vector<double>& grid,
                                            const ElasticNetConfig& cfg) {
    std::vector<Vector> path;
    Vector beta = Vector::Zero(X.cols());
    for (double lam : grid) {
        elastic_net_cd(X, y, lam, cfg.alpha_mix, beta, cfg.max_sweeps, cfg.tol);
        path.push_back(beta);
    }
    return path;
}

/// Shuffled, near-equal, contiguous fold labels for n rows.
inline std::vector<int> fold_assignment(int n, int folds, std::uint64_t seed) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> label(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        label[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] =
            static_cast<int>((static_cast<long>(k) * folds) / n);
    return label;
}

struct ElasticNetFit {
    Vector beta;
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_error;
};

/// Elastic net with lambda chosen by K-fold CV on squared prediction error.
inline ElasticNetFit elastic_net_cv(const StandardizedDesign& d, const ElasticNetConfig& cfg) {
    cfg.validate();
    if (d.n() < cfg.cv_folds) throw InputError("elastic_net_cv: n must be >= cv_folds");
    ElasticNetFit out;
    out.grid = lambda_grid(d.X(), d.y(), cfg.alpha_mix, cfg.n_lambda, cfg.lambda_ratio);
    out.cv_error.assign(out.grid.size(), 0.0);
    const auto label = fold_assignment(d.n(), cfg.cv_folds, cfg.seed);

    for (int f = 0; f < cfg.cv_folds; ++f) {
        std::vector<int> train, test;
        for (int i = 0; i < d.n(); ++i)
            (label[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        Matrix Xtr(static_cast<Eigen::Index>(train.size()), d.p());
        Vector ytr(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = d.X().row(train[i]);
            ytr(static_cast<Eigen::Index>(i)) = d.y()(train[i]);
        }
        const auto path = elastic_net_path(Xtr, ytr, out.grid, cfg);
        for (std::size_t k = 0; k < path.size(); ++k) {
            double sse = 0.0;
            for (int i : test) {
                const double e = d.y()(i) - d.X().row(i).dot(path[k]);
                sse += e * e;
            }
            out.cv_error[k] += sse / d.n();
        }
    }
    const auto best = std::min_element(out.cv_error.begin(), out.cv_error.end());
    out.lambda = out.grid[static_cast<std::size_t>(best - out.cv_error.begin())];
    const auto full = elastic_net_path(
        d.X(), d.y(),
        std::vector<double>(out.grid.begin(), out.grid.begin() + (best - out.cv_error.begin()) + 1),
        cfg);
    out.beta = full.back();
    return out;
}

/// Proposal weights w_j = beta_j^2 + n^{-2} from a cross-validated elastic net.
inline ProposalWeights elastic_net_weights(const StandardizedDesign& d,
                                           const ElasticNetConfig& cfg = {}) {
    const ElasticNetFit fit = elastic_net_cv(d, cfg);
    const double floor = 1.0 / (static_cast<double>(d.n()) * d.n());
    return ProposalWeights((fit.beta.array().square() + floor).matrix());
}

}  // namespace gfivs
