#pragma once

#include "design.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

namespace gfivs {

struct L0Config {
    int max_iters = 1000;
    double rel_tol = 1e-7;
    /// Gradient Lipschitz constant lambda_max(X'X)^2; 0 uses the value cached on the design.
    double lipschitz = 0.0;
    /// Least-squares refit on the final support.
    bool polish = true;
    /// Jump to the least-squares point of the current support whenever a step leaves the
    /// support unchanged.  Each jump can only lower the objective.
    bool refit_stable_support = true;
    /// After the smallest-coefficient-removed warm start, also start from every other
    /// drop-one truncation of beta_M and from b = 0, keeping the best objective.
    bool multi_start = true;

    void validate() const {
        if (max_iters < 1) throw InputError("L0Config: max_iters must be >= 1");
        if (!(rel_tol > 0.0)) throw InputError("L0Config: rel_tol must be > 0");
        if (!(lipschitz >= 0.0)) throw InputError("L0Config: lipschitz must be >= 0");
    }
};

struct AdmissibilityVerdict {
    bool admissible = true;
    double objective_bound = 0.0;
    double epsilon = 0.0;
    int iterations = 0;
    bool early_exit = false;
};

/// Result of the cardinality-constrained minimization.  `b` is an achieved point, so
/// `objective` upper-bounds the constrained minimum.
struct L0Result {
    Vector b;
    double objective = 0.0;
    int iterations = 0;
    bool early_exit = false;
};

/// Default admissibility threshold for a fitted model.
inline double default_epsilon(const ModelFit& fit, int n, int p, int p_o) {
    const double m = static_cast<double>(fit.M.size());
    const double bracket = std::pow(static_cast<double>(n), 0.51) / 9.0 +
                           m * std::pow(std::log(p * std::numbers::pi), 1.1) / 9.0 -
                           static_cast<double>(p_o);
    return fit.lambda_M * fit.sigma2_hat * std::max(bracket, 0.0);
}

namespace detail {

/// Indices of the kappa largest |v_j|, equal magnitudes resolved toward the lower index.
inline std::vector<int> top_k_support(const Vector& v, int kappa) {
    std::vector<int> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), 0);
    auto before = [&](int a, int b) {
        const double fa = std::abs(v(a)), fb = std::abs(v(b));
        return fa > fb || (fa == fb && a < b);
    };
    if (kappa < static_cast<int>(order.size()))
        std::nth_element(order.begin(), order.begin() + kappa, order.end(), before);
    order.resize(static_cast<std::size_t>(kappa));
    std::sort(order.begin(), order.end());
    return order;
}

/// Sparse view of a p-vector: indices carrying a nonzero value.
inline std::vector<int> nonzeros(const Vector& b) {
    std::vector<int> s;
    for (Eigen::Index j = 0; j < b.size(); ++j)
        if (b(j) != 0.0) s.push_back(static_cast<int>(j));
    return s;
}

/// 1/2 ||G b - c||^2 using only the nonzero entries of b.
inline double objective(const Matrix& G, const Vector& c, const Vector& b,
                        const std::vector<int>& supp) {
    Vector r = -c;
    for (int j : supp) r.noalias() += b(j) * G.col(j);
    return 0.5 * r.squaredNorm();
}

/// argmin over b supported on S of 1/2 ||G_S b_S - c||^2, embedded in p dimensions.
inline Vector refit(const Matrix& G, const Vector& c, const std::vector<int>& supp) {
    Vector b = Vector::Zero(G.cols());
    if (supp.empty()) return b;
    Matrix GS(G.rows(), static_cast<Eigen::Index>(supp.size()));
    for (std::size_t k = 0; k < supp.size(); ++k) GS.col(k) = G.col(supp[k]);
    Vector x = GS.colPivHouseholderQr().solve(c);
    for (std::size_t k = 0; k < supp.size(); ++k) b(supp[k]) = x(k);
    return b;
}

/** Projected gradient descent for min 1/2 ||c - G b||^2 s.t. ||b||_0 <= kappa, where
 * G = X'X and c = X' target.  `Gc` must equal G*c.  The gradient G(Gb - c) is evaluated as
 * (G^2) b - Gc so each step costs O(p * kappa).
 */
inline L0Result minimize_gram(const StandardizedDesign& d, const Vector& c, const Vector& Gc,
                              int kappa, const Vector& warm, const L0Config& cfg,
                              double epsilon, std::vector<double>* trace) {
    const Matrix& G = d.gram();
    const Matrix& G2 = d.gram_sq();
    const int p = d.p();
    L0Result res;
    if (kappa <= 0) {
        res.b = Vector::Zero(p);
        res.objective = 0.5 * c.squaredNorm();
        res.early_exit = res.objective < epsilon;
        if (trace) trace->push_back(res.objective);
        return res;
    }
    kappa = std::min(kappa, p);
    const double L = cfg.lipschitz > 0.0 ? cfg.lipschitz : d.lipschitz();
    if (!(L > 0.0)) throw InputError("l0 minimization: non-positive Lipschitz constant");

    Vector b = Vector::Zero(p);
    std::vector<int> supp = top_k_support(warm, kappa);
    for (int j : supp) b(j) = warm(j);
    supp = nonzeros(b);
    double f = objective(G, c, b, supp);
    if (trace) trace->push_back(f);

    Vector u(p);
    int it = 0;
    bool early = f < epsilon;
    while (!early && it < cfg.max_iters && f > 0.0) {
        ++it;
        u = Gc / L;
        for (int j : supp) u.noalias() -= (b(j) / L) * G2.col(j);
        u += b;
        const std::vector<int> next = top_k_support(u, kappa);
        Vector nb = Vector::Zero(p);
        for (int j : next) nb(j) = u(j);
        std::vector<int> nsupp = nonzeros(nb);
        double nf = objective(G, c, nb, nsupp);
        if (cfg.refit_stable_support && nsupp == supp) {
            Vector rb = refit(G, c, nsupp);
            std::vector<int> rsupp = nonzeros(rb);
            const double rf = objective(G, c, rb, rsupp);
            if (rf <= nf) {
                nb = std::move(rb);
                nsupp = std::move(rsupp);
                nf = rf;
            }
        }
        const double change = std::abs(f - nf);
        const bool improved = nf <= f;
        if (improved) {
            b = std::move(nb);
            supp = std::move(nsupp);
            f = nf;
        }
        if (trace) trace->push_back(f);
        if (f < epsilon) {
            early = true;
            break;
        }
        if (!improved || change <= cfg.rel_tol * f) break;
    }

    if (!early && cfg.polish) {
        Vector rb = refit(G, c, supp);
        std::vector<int> rsupp = nonzeros(rb);
        const double rf = objective(G, c, rb, rsupp);
        if (rf < f) {
            b = std::move(rb);
            f = rf;
            if (trace) trace->push_back(f);
        }
    }
    res.b = std::move(b);
    res.objective = f;
    res.iterations = it;
    res.early_exit = early;
    return res;
}

}  // namespace detail

/** Upper bound on min_b 1/2 ||X'(target - X b)||^2 subject to ||b||_0 <= kappa, by
 * iterative hard thresholding with step 1/l, l = lambda_max(X'X)^2.
 *
 * Stops once the objective drops below `epsilon` (early_exit), when the relative change in
 * the objective falls under cfg.rel_tol, or after cfg.max_iters steps.  `warm` is
 * hard-thresholded to kappa entries before the first step.  When `trace` is non-null the
 * objective after every step is appended to it.
 */
inline L0Result l0_min_upper_bound(const StandardizedDesign& d, const Vector& target, int kappa,
                                   const Vector& warm, const L0Config& cfg, double epsilon,
                                   std::vector<double>* trace = nullptr) {
    cfg.validate();
    if (target.size() != d.n()) throw InputError("l0_min_upper_bound: target length != n");
    if (warm.size() != d.p()) throw InputError("l0_min_upper_bound: warm start length != p");
    if (kappa < 0 || kappa > d.p()) throw InputError("l0_min_upper_bound: kappa out of range");
    const Vector c = d.X().transpose() * target;
    const Vector Gc = d.gram() * c;
    return detail::minimize_gram(d, c, Gc, kappa, warm, cfg, epsilon, trace);
}

/** The admissibility indicator h(beta_M) for coefficients beta_M on model M.
 *
 * `fit` is the model's least-squares fit, or std::nullopt when X_M is rank deficient (in
 * which case h = 0).
 */
inline AdmissibilityVerdict eval_h(const StandardizedDesign& d, const ModelIndex& M,
                                   const Vector& beta_M, double epsilon,
                                   const std::optional<ModelFit>& fit, const L0Config& cfg) {
    AdmissibilityVerdict v;
    v.epsilon = epsilon;
    if (epsilon <= 0.0) return v;
    const int m = static_cast<int>(M.size());
    if (m > d.n() || !fit) {
        v.admissible = false;
        return v;
    }
    if (beta_M.size() != m) throw InputError("eval_h: beta_M length != |M|");

    // c = X' X_M beta_M and Gc = (X'X)^2 restricted to M times beta_M.
    Vector c = Vector::Zero(d.p());
    Vector Gc = Vector::Zero(d.p());
    for (int a = 0; a < m; ++a) {
        c.noalias() += beta_M(a) * d.gram().col(M[a]);
        Gc.noalias() += beta_M(a) * d.gram_sq().col(M[a]);
    }

    Vector full = Vector::Zero(d.p());
    int smallest = 0;
    for (int a = 0; a < m; ++a) {
        full(M[a]) = beta_M(a);
        if (std::abs(beta_M(a)) < std::abs(beta_M(smallest))) smallest = a;
    }
    std::vector<int> drop_order{smallest};
    if (cfg.multi_start)
        for (int a = 0; a < m; ++a)
            if (a != smallest) drop_order.push_back(a);

    v.objective_bound = std::numeric_limits<double>::infinity();
    auto run = [&](const Vector& warm) {
        const L0Result r = detail::minimize_gram(d, c, Gc, m - 1, warm, cfg, epsilon, nullptr);
        v.iterations += r.iterations;
        v.objective_bound = std::min(v.objective_bound, r.objective);
        v.early_exit = r.early_exit;
        return r.early_exit || r.objective < epsilon;
    };
    bool below = false;
    for (int a : drop_order) {
        Vector warm = full;
        warm(M[a]) = 0.0;
        if ((below = run(warm))) break;
    }
    if (!below && cfg.multi_start && m > 1) below = run(Vector::Zero(d.p()));
    v.admissible = !below;
    return v;
}

}  // namespace gfivs
