#pragma once

#include "design.hpp"
#include "elastic_net.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sampler.hpp"
#include "tuning.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gfivs {

/// One synthetic data set: raw training and test rows plus the generating truth.
struct SimDataset {
    Matrix X_train;
    Vector y_train;
    Matrix X_test;
    Vector y_test;
    ModelIndex M_o;
    Vector beta0;
};

struct Setup1Config {
    int n = 100;
    int p = 100;
    double rho = 0.0;
    Vector beta0 = (Vector(8) << -1.5, -1.0, -0.8, -0.6, 0.6, 0.8, 1.0, 1.5).finished();
    double sigma0 = 1.0;
    int n_test = 100;

    void validate() const {
        if (beta0.size() != 8) throw InputError("Setup1Config: beta0 must have 8 entries");
        if (!(rho >= 0.0 && rho < 1.0)) throw InputError("Setup1Config: rho must be in [0, 1)");
        if (p < beta0.size()) throw InputError("Setup1Config: p must be >= 8");
        if (n < 2 || n_test < 1) throw InputError("Setup1Config: bad sample sizes");
    }
};

struct Setup2Config {
    int n = 30;
    int n_test = 30;
    double dependent_sd = 0.1;
    double sigma0 = 1.0;
};

namespace detail {

/// Rows from N_p(0, Sigma) with unit variances and equal correlation rho.
inline Matrix equicorrelated_rows(int rows, int p, double rho, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix X(rows, p);
    const double a = std::sqrt(1.0 - rho), b = std::sqrt(rho);
    for (int i = 0; i < rows; ++i) {
        const double shared = normal(rng);
        for (int j = 0; j < p; ++j) X(i, j) = a * normal(rng) + b * shared;
    }
    return X;
}

inline Vector gaussian_response(const Matrix& X, const ModelIndex& M, const Vector& beta,
                                double sigma, Rng& rng) {
    std::normal_distribution<double> normal;
    Vector y = Vector::Zero(X.rows());
    for (std::size_t a = 0; a < M.size(); ++a) y += beta(static_cast<Eigen::Index>(a)) * X.col(M[a]);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sigma * normal(rng);
    return y;
}

/// x1..x3 iid standard normal; x4..x9 noisy linear combinations of them.
inline Matrix setup2_design(int rows, double sd, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix X(rows, 9);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < rows; ++i) X(i, j) = normal(rng);
    auto noisy = [&](int col, const Vector& mean) {
        for (int i = 0; i < rows; ++i) X(i, col) = mean(i) + sd * normal(rng);
    };
    noisy(3, 0.25 * X.col(0));
    noisy(4, 0.5 * X.col(1));
    noisy(5, -0.75 * X.col(2));
    noisy(6, X.col(0) + X.col(2));
    noisy(7, X.col(1) - X.col(2));
    noisy(8, X.col(0) + X.col(1) + X.col(2));
    return X;
}

}  // namespace detail

inline SimDataset generate_setup1(const Setup1Config& cfg, Rng& rng) {
    cfg.validate();
    SimDataset ds;
    ds.beta0 = cfg.beta0;
    std::vector<int> active(static_cast<std::size_t>(cfg.beta0.size()));
    for (std::size_t j = 0; j < active.size(); ++j) active[j] = static_cast<int>(j);
    ds.M_o = ModelIndex(active);
    ds.X_train = detail::equicorrelated_rows(cfg.n, cfg.p, cfg.rho, rng);
    ds.y_train = detail::gaussian_response(ds.X_train, ds.M_o, ds.beta0, cfg.sigma0, rng);
    ds.X_test = detail::equicorrelated_rows(cfg.n_test, cfg.p, cfg.rho, rng);
    ds.y_test = detail::gaussian_response(ds.X_test, ds.M_o, ds.beta0, cfg.sigma0, rng);
    return ds;
}

inline SimDataset generate_setup2(const Setup2Config& cfg, Rng& rng) {
    SimDataset ds;
    ds.M_o = ModelIndex({0, 1, 2, 3, 4, 5, 6, 7, 8});
    ds.beta0 = Vector::Ones(9);
    ds.X_train = detail::setup2_design(cfg.n, cfg.dependent_sd, rng);
    ds.y_train = detail::gaussian_response(ds.X_train, ds.M_o, ds.beta0, cfg.sigma0, rng);
    ds.X_test = detail::setup2_design(cfg.n_test, cfg.dependent_sd, rng);
    ds.y_test = detail::gaussian_response(ds.X_test, ds.M_o, ds.beta0, cfg.sigma0, rng);
    return ds;
}

struct ReplicateMetrics {
    double r_MAP = 0.0;
    /// Visit frequency of the generating model.
    double r_true = 0.0;
    bool correct_selection = false;
    int map_size = 0;
    double rmse_test = 0.0;
};

/// Root mean squared prediction error of model M (training least-squares coefficients) on
/// raw test rows mapped through the training standardization.
inline double test_rmse(const StandardizedDesign& train, const ModelIndex& M, const Matrix& X_test,
                        const Vector& y_test) {
    Vector pred = Vector::Constant(y_test.size(), train.y_mean());
    if (!M.empty()) {
        const ModelFit fit = fit_model(train, M);
        const Matrix Xs = train.transform(X_test);
        for (std::size_t a = 0; a < M.size(); ++a)
            pred.noalias() += fit.beta_hat(static_cast<Eigen::Index>(a)) * Xs.col(M[a]);
    }
    return std::sqrt((y_test - pred).squaredNorm() / static_cast<double>(y_test.size()));
}

inline ReplicateMetrics evaluate_replicate(const PosteriorSummary& run,
                                           const StandardizedDesign& train,
                                           const SimDataset& truth) {
    ReplicateMetrics m;
    m.r_MAP = run.prob(run.map_model);
    m.r_true = run.prob(truth.M_o);
    m.correct_selection = run.map_model == truth.M_o;
    m.map_size = static_cast<int>(run.map_model.size());
    m.rmse_test = test_rmse(train, run.map_model, truth.X_test, truth.y_test);
    return m;
}

struct ExperimentConfig {
    int setup = 2;
    Setup1Config setup1;
    Setup2Config setup2;
    int replicates = 200;
    std::uint64_t seed = 1;
    ChainConfig chain;
    CvConfig cv;
    /// When set, CV is skipped and this p_o is used.
    std::optional<int> fixed_p_o;
    ElasticNetConfig enet;
    bool center = false;
    int threads = 1;
};

struct ReplicateRecord {
    int replicate = 0;
    std::uint64_t seed = 0;
    int p_o = 0;
    ModelIndex map_model;
    ReplicateMetrics metrics;
    /// Visit frequencies of this replicate's chain.
    std::map<ModelIndex, double> r_hat;
};

struct ExperimentResult {
    std::vector<ReplicateRecord> records;
    double mean_map_size = 0.0;
    double mean_rmse = 0.0;
    double mean_r_map = 0.0;
    double mean_r_true = 0.0;
    double prop_correct = 0.0;
};

/// Generate, tune, sample and score one replicate.
inline ReplicateRecord run_replicate(const ExperimentConfig& cfg, int rep) {
    ReplicateRecord rec;
    rec.replicate = rep;
    rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    Rng data_rng(derive_seed(rec.seed, 1));
    const SimDataset ds = cfg.setup == 1 ? generate_setup1(cfg.setup1, data_rng)
                                         : generate_setup2(cfg.setup2, data_rng);
    const StandardizedDesign d = standardize(ds.y_train, ds.X_train, cfg.center);

    ElasticNetConfig ec = cfg.enet;
    ec.seed = derive_seed(rec.seed, 2);
    const ProposalWeights w = elastic_net_weights(d, ec);

    if (cfg.fixed_p_o) {
        rec.p_o = *cfg.fixed_p_o;
    } else {
        CvConfig cc = cfg.cv;
        cc.seed = derive_seed(rec.seed, 3);
        cc.threads = 1;
        rec.p_o = select_p_o(d, w, cc).p_o_star;
    }
    ChainConfig ch = cfg.chain;
    ch.p_o = rec.p_o;
    ch.seed = derive_seed(rec.seed, 4);
    const ChainResult run = run_chain(d, w, ch);
    rec.map_model = run.summary.map_model;
    rec.metrics = evaluate_replicate(run.summary, d, ds);
    rec.r_hat = run.summary.r_hat;
    return rec;
}

/// Independent replicates (parallel, per-replicate derived seeds) and their averages.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.replicates < 1) throw InputError("run_experiment: replicates must be >= 1");
    if (cfg.setup != 1 && cfg.setup != 2) throw InputError("run_experiment: setup must be 1 or 2");
    ExperimentResult res;
    res.records.resize(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, cfg.threads,
                 [&](int r) { res.records[static_cast<std::size_t>(r)] = run_replicate(cfg, r); });
    for (const auto& rec : res.records) {
        res.mean_map_size += rec.metrics.map_size;
        res.mean_rmse += rec.metrics.rmse_test;
        res.mean_r_map += rec.metrics.r_MAP;
        res.mean_r_true += rec.metrics.r_true;
        res.prop_correct += rec.metrics.correct_selection ? 1.0 : 0.0;
    }
    const double R = static_cast<double>(res.records.size());
    res.mean_map_size /= R;
    res.mean_rmse /= R;
    res.mean_r_map /= R;
    res.mean_r_true /= R;
    res.prop_correct /= R;
    return res;
}

}  // namespace gfivs
