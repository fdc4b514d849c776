#pragma once

#include "design.hpp"
#include "fiducial.hpp"
#include "l0.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfivs {

/// No viable starting model was found.
class InitializationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-covariate proposal weights, all strictly positive.
struct ProposalWeights {
    Vector w;

    ProposalWeights() = default;
    explicit ProposalWeights(Vector weights) : w(std::move(weights)) {
        for (Eigen::Index j = 0; j < w.size(); ++j)
            if (!(w(j) > 0.0) || !std::isfinite(w(j)))
                throw InputError("ProposalWeights: weight " + std::to_string(j) +
                                 " is not a positive finite number");
    }
    static ProposalWeights uniform(int p) { return ProposalWeights(Vector::Ones(p)); }
    int p() const noexcept { return static_cast<int>(w.size()); }
};

enum class MoveType { Add, Drop, Swap };

struct Proposal {
    ModelIndex M;
    MoveType move = MoveType::Add;
    double log_q_forward = 0.0;
    double log_q_backward = 0.0;
};

namespace detail {

inline std::vector<MoveType> feasible_moves(const ModelIndex& M, int p, int max_size) {
    const int m = static_cast<int>(M.size());
    std::vector<MoveType> moves;
    if (m < max_size && m < p) moves.push_back(MoveType::Add);
    if (m > 1) moves.push_back(MoveType::Drop);
    if (m >= 1 && m < p) moves.push_back(MoveType::Swap);
    return moves;
}

inline double complement_weight(const ModelIndex& M, const ProposalWeights& w) {
    double total = w.w.sum();
    for (int j : M) total -= w.w(j);
    return total;
}

/// Draw j outside M with probability w_j / sum_{k not in M} w_k.
inline int draw_outside(const ModelIndex& M, const ProposalWeights& w, double total, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, total);
    const double u = unif(rng);
    double acc = 0.0;
    int last = -1;
    for (int j = 0; j < w.p(); ++j) {
        if (M.contains(j)) continue;
        acc += w.w(j);
        last = j;
        if (u < acc) return j;
    }
    return last;
}

}  // namespace detail

/** Log probability that `propose` moves M to M2 in one step, or -inf if it cannot.
 * Enumerates the kernel directly; used for q-ratios and for kernel checks.
 */
inline double log_proposal_density(const ModelIndex& M, const ModelIndex& M2,
                                   const ProposalWeights& w, int max_size) {
    const double ninf = -std::numeric_limits<double>::infinity();
    const auto moves = detail::feasible_moves(M, w.p(), max_size);
    if (moves.empty()) return ninf;
    const double log_move = -std::log(static_cast<double>(moves.size()));
    auto has = [&](MoveType t) { return std::find(moves.begin(), moves.end(), t) != moves.end(); };
    const int m = static_cast<int>(M.size());
    const int m2 = static_cast<int>(M2.size());

    std::vector<int> added, dropped;
    std::set_difference(M2.begin(), M2.end(), M.begin(), M.end(), std::back_inserter(added));
    std::set_difference(M.begin(), M.end(), M2.begin(), M2.end(), std::back_inserter(dropped));

    if (m2 == m + 1 && added.size() == 1 && dropped.empty() && has(MoveType::Add))
        return log_move + std::log(w.w(added[0]) / detail::complement_weight(M, w));
    if (m2 == m - 1 && dropped.size() == 1 && added.empty() && has(MoveType::Drop))
        return log_move - std::log(static_cast<double>(m));
    if (m2 == m && added.size() == 1 && dropped.size() == 1 && has(MoveType::Swap))
        return log_move - std::log(static_cast<double>(m)) +
               std::log(w.w(added[0]) / detail::complement_weight(M, w));
    return ninf;
}

/** One proposal from the ADD / DROP / SWAP kernel.
 *
 * A move type is chosen uniformly among those feasible at M.  ADD inserts j outside M with
 * probability proportional to w_j; DROP removes a uniformly chosen member; SWAP removes a
 * uniform member and inserts a weighted non-member.  Returns std::nullopt when no move is
 * feasible (a single-model space).
 */
inline std::optional<Proposal> propose(const ModelIndex& M, const ProposalWeights& w, Rng& rng,
                                       int max_size) {
    const auto moves = detail::feasible_moves(M, w.p(), max_size);
    if (moves.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick_move(0, moves.size() - 1);
    Proposal prop;
    prop.move = moves[pick_move(rng)];
    const int m = static_cast<int>(M.size());
    switch (prop.move) {
    case MoveType::Add: {
        const int j = detail::draw_outside(M, w, detail::complement_weight(M, w), rng);
        prop.M = M.with(j);
        break;
    }
    case MoveType::Drop: {
        std::uniform_int_distribution<int> pick(0, m - 1);
        prop.M = M.without(M[static_cast<std::size_t>(pick(rng))]);
        break;
    }
    case MoveType::Swap: {
        std::uniform_int_distribution<int> pick(0, m - 1);
        const int out = M[static_cast<std::size_t>(pick(rng))];
        const int in = detail::draw_outside(M, w, detail::complement_weight(M, w), rng);
        prop.M = M.without(out).with(in);
        break;
    }
    }
    prop.log_q_forward = log_proposal_density(M, prop.M, w, max_size);
    prop.log_q_backward = log_proposal_density(prop.M, M, w, max_size);
    return prop;
}

struct ChainConfig {
    int steps = 15000;
    int burn_in = 5000;
    int n_importance = 100;
    int p_o = 1;
    /// 0 selects floor(sqrt(n)).
    int max_size = 0;
    std::uint64_t seed = 1;
    L0Config l0;
    bool record_trace = false;

    int resolved_max_size(int n, int p) const {
        const int ms = max_size > 0 ? max_size
                                    : static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
        return std::clamp(ms, 1, p);
    }

    void validate() const {
        if (steps < 1) throw InputError("ChainConfig: steps must be >= 1");
        if (burn_in < 0 || burn_in >= steps)
            throw InputError("ChainConfig: need steps > burn_in >= 0");
        if (n_importance < 1) throw InputError("ChainConfig: n_importance must be >= 1");
        if (p_o < 0) throw InputError("ChainConfig: p_o must be >= 0");
        if (max_size < 0) throw InputError("ChainConfig: max_size must be >= 0");
        l0.validate();
    }
};

/// Current state of the pseudo-marginal chain.  The score travels with the state.
struct ChainState {
    ModelIndex M;
    ModelScore score;
    ModelFit fit;
};

struct TraceRecord {
    int step = 0;
    ModelIndex M;
    double log_score = 0.0;
    bool accepted = false;
};

struct PosteriorSummary {
    std::map<ModelIndex, long> visit_counts;
    std::map<ModelIndex, double> r_hat;
    ModelIndex map_model;
    Vector inclusion_prob;
    long total_visits = 0;

    /// Models sorted by decreasing r_hat (ties in ModelIndex order).
    std::vector<std::pair<ModelIndex, double>> top(std::size_t k) const {
        std::vector<std::pair<ModelIndex, double>> v(r_hat.begin(), r_hat.end());
        std::stable_sort(v.begin(), v.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        if (v.size() > k) v.resize(k);
        return v;
    }

    double prob(const ModelIndex& M) const {
        auto it = r_hat.find(M);
        return it == r_hat.end() ? 0.0 : it->second;
    }
};

/// Normalizes visit counts into frequencies, MAP model and inclusion probabilities.
inline PosteriorSummary summarize(std::map<ModelIndex, long> counts, int p) {
    PosteriorSummary s;
    s.visit_counts = std::move(counts);
    s.inclusion_prob = Vector::Zero(p);
    for (const auto& [M, c] : s.visit_counts) s.total_visits += c;
    long best = -1;
    for (const auto& [M, c] : s.visit_counts) {
        const double r = s.total_visits > 0 ? static_cast<double>(c) / s.total_visits : 0.0;
        s.r_hat[M] = r;
        for (int j : M) s.inclusion_prob(j) += r;
        if (c > best) {
            best = c;
            s.map_model = M;
        }
    }
    return s;
}

/// Merge independent chains by adding visit counts.
inline PosteriorSummary merge(const std::vector<PosteriorSummary>& parts, int p) {
    std::map<ModelIndex, long> counts;
    for (const auto& s : parts)
        for (const auto& [M, c] : s.visit_counts) counts[M] += c;
    return summarize(std::move(counts), p);
}

struct ChainResult {
    PosteriorSummary summary;
    std::vector<TraceRecord> trace;
    ChainState initial;
    long accepted = 0;
};

/// Fit and score a model with a fresh importance block.
inline ChainState score_model(const StandardizedDesign& d, const ModelIndex& M, int p_o, int N,
                              Rng& rng, const L0Config& l0) {
    ChainState st;
    st.M = M;
    auto fit = try_fit_model(d, M);
    const double eps = fit ? default_epsilon(*fit, d.n(), d.p(), p_o) : 0.0;
    st.score = estimate_e_h(d, M, fit, eps, N, rng, l0);
    if (fit) st.fit = *std::move(fit);
    return st;
}

namespace detail {

/// Top-k covariates by weight; equal weights resolved toward the lower index.
inline std::vector<int> by_weight(const ProposalWeights& w) {
    std::vector<int> order(static_cast<std::size_t>(w.p()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w.w(a) > w.w(b); });
    return order;
}

inline ChainState initialize(const StandardizedDesign& d, const ProposalWeights& w,
                             const ChainConfig& cfg, int max_size, Rng& rng) {
    const auto order = by_weight(w);
    int size = std::clamp(cfg.p_o, 1, max_size);
    std::size_t single = 0;
    for (int attempt = 0; attempt <= d.p(); ++attempt) {
        std::vector<int> pick;
        if (size > 1) {
            pick.assign(order.begin(), order.begin() + size);
        } else {
            if (single >= order.size()) break;
            pick.push_back(order[single++]);
        }
        ChainState st = score_model(d, ModelIndex(pick), cfg.p_o, cfg.n_importance, rng, cfg.l0);
        if (st.score.viable()) return st;
        if (size > 1) --size;
    }
    throw InitializationFailed("run_chain: every starting model from the top-" +
                               std::to_string(std::clamp(cfg.p_o, 1, max_size)) +
                               " weighted covariates down to singletons scored zero (p_o = " +
                               std::to_string(cfg.p_o) + ")");
}

}  // namespace detail

/** One pseudo-marginal Metropolis-Hastings step.  Proposes from `state`, scores the proposal
 * with a fresh importance block and accepts with probability
 * min{1, exp(log_score' - log_score + log_q_backward - log_q_forward)}.  On rejection `state`
 * is left untouched.  Returns whether the proposal was accepted.
 */
inline bool gimh_step(const StandardizedDesign& d, const ProposalWeights& w, ChainState& state,
                      const ChainConfig& cfg, int max_size, Rng& rng) {
    auto prop = propose(state.M, w, rng, max_size);
    if (!prop) return false;
    ChainState cand = score_model(d, prop->M, cfg.p_o, cfg.n_importance, rng, cfg.l0);
    if (!cand.score.viable()) return false;
    const double log_ratio = cand.score.log_score - state.score.log_score +
                             prop->log_q_backward - prop->log_q_forward;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) {
        state = std::move(cand);
        return true;
    }
    return false;
}

/** Grouped independence Metropolis-Hastings over models.
 *
 * Each proposal gets a freshly drawn importance block; on rejection the stored estimate is
 * kept untouched.  Visits after burn-in are counted into the summary.
 */
inline ChainResult run_chain(const StandardizedDesign& d, const ProposalWeights& w,
                             const ChainConfig& cfg) {
    cfg.validate();
    if (w.p() != d.p()) throw InputError("run_chain: weight vector length != p");
    const int max_size = cfg.resolved_max_size(d.n(), d.p());
    Rng rng(cfg.seed);

    ChainResult out;
    ChainState state = detail::initialize(d, w, cfg, max_size, rng);
    out.initial = state;
    std::map<ModelIndex, long> counts;

    for (int step = 0; step < cfg.steps; ++step) {
        const bool accepted = gimh_step(d, w, state, cfg, max_size, rng);
        if (accepted) ++out.accepted;
        if (step >= cfg.burn_in) ++counts[state.M];
        if (cfg.record_trace)
            out.trace.push_back({step, state.M, state.score.log_score, accepted});
    }
    out.summary = summarize(std::move(counts), d.p());
    return out;
}

}  // namespace gfivs
