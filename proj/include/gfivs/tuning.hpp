#pragma once

#include "design.hpp"
#include "elastic_net.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sampler.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace gfivs {

struct CvConfig {
    int folds = 10;
    std::vector<int> p_o_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int cv_steps = 200;
    int cv_burn_in = 100;
    int cv_N = 30;
    /// 0 selects floor(sqrt(n_train)).
    int max_size = 0;
    std::uint64_t seed = 1;
    L0Config l0;
    int threads = 1;

    void validate() const {
        if (folds < 2) throw InputError("CvConfig: folds must be >= 2");
        if (p_o_grid.empty()) throw InputError("CvConfig: p_o grid is empty");
        for (int v : p_o_grid)
            if (v < 0) throw InputError("CvConfig: p_o grid entries must be >= 0");
        if (cv_steps <= cv_burn_in || cv_burn_in < 0)
            throw InputError("CvConfig: need cv_steps > cv_burn_in >= 0");
        if (cv_N < 1) throw InputError("CvConfig: cv_N must be >= 1");
        l0.validate();
    }
};

struct CvResult {
    int p_o_star = 0;
    /// grid x folds; NaN marks a cell whose chain failed to initialize.
    Matrix bic_table;
    Vector mean_bic;
    std::vector<std::string> warnings;
};

/// Training/test split of a design, with the test rows mapped through the training
/// standardization.
struct FoldSplit {
    StandardizedDesign train;
    Matrix X_test;  // standardized with training parameters
    Vector y_test;  // centered with the training mean when centering is on
};

inline FoldSplit split_fold(const StandardizedDesign& d, const std::vector<int>& label, int fold) {
    std::vector<int> tr, te;
    for (int i = 0; i < d.n(); ++i) (label[static_cast<std::size_t>(i)] == fold ? te : tr).push_back(i);
    auto rows = [&](const std::vector<int>& idx, Matrix& X, Vector& y) {
        X.resize(static_cast<Eigen::Index>(idx.size()), d.p());
        y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            X.row(static_cast<Eigen::Index>(i)) = d.X().row(idx[i]);
            y(static_cast<Eigen::Index>(i)) = d.y()(idx[i]);
        }
    };
    Matrix Xtr, Xte;
    Vector ytr, yte;
    rows(tr, Xtr, ytr);
    rows(te, Xte, yte);
    StandardizedDesign train = standardize(ytr, Xtr, d.centered());
    Matrix Xt = train.transform(Xte);
    Vector yt = yte.array() - train.y_mean();
    return {std::move(train), std::move(Xt), std::move(yt)};
}

/// n_test log(RSS_test / n_test) + |M| log(n_test) with training-fit coefficients.
inline double heldout_bic(const StandardizedDesign& train, const ModelIndex& M,
                          const Matrix& X_test, const Vector& y_test) {
    const ModelFit fit = fit_model(train, M);
    Vector pred = Vector::Zero(y_test.size());
    for (std::size_t a = 0; a < M.size(); ++a)
        pred.noalias() += fit.beta_hat(static_cast<Eigen::Index>(a)) * X_test.col(M[a]);
    const double nt = static_cast<double>(y_test.size());
    const double rss = (y_test - pred).squaredNorm();
    return nt * std::log(rss / nt) + static_cast<double>(M.size()) * std::log(nt);
}

/// Index of the smallest fold-averaged BIC; ties go to the smallest p_o value.
inline std::size_t best_grid_index(const std::vector<int>& grid, const Vector& mean_bic) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double a = mean_bic(static_cast<Eigen::Index>(g));
        const double b = mean_bic(static_cast<Eigen::Index>(best));
        if (a < b || (a == b && grid[g] < grid[best])) best = g;
    }
    return best;
}

/** Chooses p_o by K-fold cross-validated held-out BIC of the chain's MAP model.
 *
 * Every (p_o, fold) cell runs its own short chain on the training rows with a seed derived
 * from (seed, grid position, fold), so the table does not depend on evaluation order.
 */
inline CvResult select_p_o(const StandardizedDesign& d, const ProposalWeights& w,
                           const CvConfig& cfg) {
    cfg.validate();
    if (d.n() < cfg.folds) throw InputError("select_p_o: n must be >= folds");
    if (w.p() != d.p()) throw InputError("select_p_o: weight vector length != p");
    CvResult res;
    const auto G = static_cast<Eigen::Index>(cfg.p_o_grid.size());
    res.bic_table = Matrix::Constant(G, cfg.folds, std::numeric_limits<double>::quiet_NaN());
    if (cfg.p_o_grid.size() == 1) {
        res.p_o_star = cfg.p_o_grid.front();
        res.mean_bic = Vector::Zero(1);
        return res;
    }

    const auto label = fold_assignment(d.n(), cfg.folds, derive_seed(cfg.seed, 0xf01d));
    std::vector<FoldSplit> splits;
    splits.reserve(static_cast<std::size_t>(cfg.folds));
    for (int f = 0; f < cfg.folds; ++f) splits.push_back(split_fold(d, label, f));

    std::vector<std::string> cell_warning(static_cast<std::size_t>(G * cfg.folds));
    parallel_for(static_cast<int>(G * cfg.folds), cfg.threads, [&](int cell) {
        const int g = cell / cfg.folds;
        const int f = cell % cfg.folds;
        const FoldSplit& s = splits[static_cast<std::size_t>(f)];
        ChainConfig cc;
        cc.steps = cfg.cv_steps;
        cc.burn_in = cfg.cv_burn_in;
        cc.n_importance = cfg.cv_N;
        cc.p_o = cfg.p_o_grid[static_cast<std::size_t>(g)];
        cc.max_size = cfg.max_size;
        cc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(g) + 1,
                              static_cast<std::uint64_t>(f) + 1);
        cc.l0 = cfg.l0;
        try {
            const ChainResult run = run_chain(s.train, w, cc);
            res.bic_table(g, f) = heldout_bic(s.train, run.summary.map_model, s.X_test, s.y_test);
        } catch (const InitializationFailed& e) {
            cell_warning[static_cast<std::size_t>(cell)] =
                "p_o=" + std::to_string(cc.p_o) + " fold=" + std::to_string(f) + ": " + e.what();
        }
    });
    for (auto& msg : cell_warning)
        if (!msg.empty()) res.warnings.push_back(std::move(msg));

    res.mean_bic.resize(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        double sum = 0.0;
        int count = 0;
        for (int f = 0; f < cfg.folds; ++f)
            if (!std::isnan(res.bic_table(g, f))) {
                sum += res.bic_table(g, f);
                ++count;
            }
        res.mean_bic(g) = count > 0 ? sum / count : std::numeric_limits<double>::infinity();
    }
    res.p_o_star = cfg.p_o_grid[best_grid_index(cfg.p_o_grid, res.mean_bic)];
    return res;
}

}  // namespace gfivs
