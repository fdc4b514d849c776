#pragma once

#include "design.hpp"
#include "fiducial.hpp"
#include "l0.hpp"
#include "parallel.hpp"
#include "random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

namespace gfivs {

/// All size-k subsets of {0..p-1} in lexicographic order.
inline std::vector<std::vector<int>> combinations(int p, int k) {
    std::vector<std::vector<int>> out;
    if (k < 0 || k > p) return out;
    std::vector<int> c(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(c);
        int i = k - 1;
        while (i >= 0 && c[static_cast<std::size_t>(i)] == p - k + i) --i;
        if (i < 0) break;
        ++c[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

inline double binomial(int p, int k) {
    if (k < 0 || k > p) return 0.0;
    return std::exp(std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0));
}

struct BruteForceResult {
    double min_objective = 0.0;
    std::vector<int> argmin_support;
};

/** Exact min over ||b||_0 <= kappa of 1/2 ||c - G b||^2 (G = X'X, c = X' target) by
 * enumerating every support of size kappa and solving its normal equations
 * (G_S'G_S) x = G_S' c.  Factorizations are prepared once per (design, kappa).
 */
class BruteForceL0 {
public:
    static constexpr double kMaxSupports = 1e6;

    BruteForceL0(const StandardizedDesign& d, int kappa) : kappa_(kappa) {
        if (kappa < 0 || kappa > d.p()) throw InputError("brute_force_l0: kappa out of range");
        if (binomial(d.p(), kappa) > kMaxSupports)
            throw InputError("brute_force_l0: C(p, kappa) exceeds 1e6 supports");
        if (kappa == 0) return;
        for (auto& S : combinations(d.p(), kappa)) {
            Matrix GS(d.p(), kappa);
            for (int a = 0; a < kappa; ++a) GS.col(a) = d.gram().col(S[static_cast<std::size_t>(a)]);
            Matrix normal = GS.transpose() * GS;
            supports_.push_back({std::move(S), GS, Eigen::LDLT<Matrix>(normal)});
        }
    }

    int kappa() const noexcept { return kappa_; }

    /// Global minimum for X'target = c.  Stops early (returning an objective below
    /// `stop_below`) as soon as any support attains less than `stop_below`.
    BruteForceResult solve(const Vector& c,
                           double stop_below = -std::numeric_limits<double>::infinity()) const {
        BruteForceResult best;
        best.min_objective = 0.5 * c.squaredNorm();
        if (kappa_ == 0) return best;
        best.min_objective = std::numeric_limits<double>::infinity();
        for (const auto& s : supports_) {
            const Vector x = s.normal.solve(s.GS.transpose() * c);
            const double f = 0.5 * (c - s.GS * x).squaredNorm();
            if (f < best.min_objective) {
                best.min_objective = f;
                best.argmin_support = s.support;
                if (f < stop_below) break;
            }
        }
        return best;
    }

    BruteForceResult solve_target(const StandardizedDesign& d, const Vector& target) const {
        return solve(d.X().transpose() * target);
    }

private:
    struct Support {
        std::vector<int> support;
        Matrix GS;
        Eigen::LDLT<Matrix> normal;
    };
    int kappa_;
    std::vector<Support> supports_;
};

inline BruteForceResult brute_force_l0(const StandardizedDesign& d, const Vector& target, int kappa) {
    if (target.size() != d.n()) throw InputError("brute_force_l0: target length != n");
    return BruteForceL0(d, kappa).solve_target(d, target);
}

/// h(beta_M) decided by exhaustive support search instead of projected gradient descent.
inline bool exact_admissible(const StandardizedDesign& d, const ModelIndex& M, const Vector& beta_M,
                             double epsilon, const BruteForceL0& solver) {
    if (epsilon <= 0.0) return true;
    Vector c = Vector::Zero(d.p());
    for (std::size_t a = 0; a < M.size(); ++a)
        c.noalias() += beta_M(static_cast<Eigen::Index>(a)) * d.gram().col(M[a]);
    return solver.solve(c, epsilon).min_objective >= epsilon;
}

struct EnumeratedEntry {
    double log_base = -std::numeric_limits<double>::infinity();
    double e_h_ref = 0.0;
    double prob = 0.0;
};

struct EnumeratedPosterior {
    std::map<ModelIndex, EnumeratedEntry> table;
    int N_ref = 0;

    double prob(const ModelIndex& M) const {
        auto it = table.find(M);
        return it == table.end() ? 0.0 : it->second.prob;
    }
};

/** Normalized fiducial mass of every nonempty full-rank model with |M| <= max_size.
 *
 * E(h) is estimated from N_ref multivariate-t draws per model with the exact (enumerated)
 * admissibility decision.  Each model draws from its own substream of `seed`.
 */
inline EnumeratedPosterior enumerate_posterior(const StandardizedDesign& d, int p_o, int max_size,
                                               int N_ref, std::uint64_t seed, int threads = 1) {
    if (d.p() > 15) throw InputError("enumerate_posterior: p > 15 refused");
    if (N_ref < 1000) throw InputError("enumerate_posterior: N_ref must be >= 1000");
    max_size = std::clamp(max_size, 1, d.p());

    std::vector<BruteForceL0> solvers;
    for (int k = 0; k < max_size; ++k) solvers.emplace_back(d, k);

    std::vector<ModelIndex> models;
    for (int k = 1; k <= max_size; ++k)
        for (auto& c : combinations(d.p(), k)) models.emplace_back(std::move(c));

    std::vector<EnumeratedEntry> entries(models.size());
    parallel_for(static_cast<int>(models.size()), threads, [&](int i) {
        const ModelIndex& M = models[static_cast<std::size_t>(i)];
        EnumeratedEntry& e = entries[static_cast<std::size_t>(i)];
        const auto fit = try_fit_model(d, M);
        if (!fit) return;
        const auto base = log_base_score(*fit, d.n());
        if (!base) return;
        e.log_base = *base;
        const double eps = default_epsilon(*fit, d.n(), d.p(), p_o);
        std::uint64_t key = 0;
        for (int j : M) key |= std::uint64_t{1} << j;
        Rng rng(derive_seed(seed, key));
        const Matrix draws = sample_beta_t(*fit, d.n(), rng, N_ref);
        const BruteForceL0& solver = solvers[M.size() - 1];
        int hits = 0;
        for (int r = 0; r < N_ref; ++r)
            if (exact_admissible(d, M, draws.row(r).transpose(), eps, solver)) ++hits;
        e.e_h_ref = static_cast<double>(hits) / N_ref;
    });

    EnumeratedPosterior out;
    out.N_ref = N_ref;
    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(models.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (entries[i].e_h_ref > 0.0) logw[i] = entries[i].log_base + std::log(entries[i].e_h_ref);
        lmax = std::max(lmax, logw[i]);
    }
    if (!std::isfinite(lmax)) throw InputError("enumerate_posterior: every model has zero mass");
    double total = 0.0;
    for (double lw : logw) total += std::exp(lw - lmax);
    for (std::size_t i = 0; i < models.size(); ++i) {
        entries[i].prob = std::exp(logw[i] - lmax) / total;
        out.table.emplace(models[i], entries[i]);
    }
    return out;
}

/// Total-variation distance between a visit-frequency estimate and the enumerated law.
template <class Summary>
double total_variation(const Summary& est, const EnumeratedPosterior& ref) {
    double tv = 0.0;
    for (const auto& [M, e] : ref.table) tv += std::abs(est.prob(M) - e.prob);
    for (const auto& [M, r] : est.r_hat)
        if (!ref.table.count(M)) tv += r;
    return 0.5 * tv;
}

}  // namespace gfivs
