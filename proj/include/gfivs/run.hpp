#pragma once

#include "design.hpp"
#include "elastic_net.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "sampler.hpp"
#include "tuning.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

namespace gfivs {

using json = nlohmann::ordered_json;

struct RunConfig {
    std::string mode = "select";  // select | cv | sim1 | sim2 | oracle
    std::string input;
    std::string output;
    int steps = 15000;
    int burn_in = 5000;
    int n_importance = 100;
    std::optional<int> p_o;
    int max_model_size = 0;
    bool center = false;
    std::uint64_t seed = 1;
    int threads = 1;
    int replicates = 200;
    int p = 100;
    double rho = 0.0;
    int n = 0;  // 0 keeps the setup's default
    int top_k = 10;
    int n_ref = 50000;
    CvConfig cv;

    /// Every precondition checked up front, before any data is read or generated.
    void validate() const {
        if (mode != "select" && mode != "cv" && mode != "sim1" && mode != "sim2" && mode != "oracle")
            throw InputError("config: unknown mode '" + mode + "'");
        if ((mode == "select" || mode == "cv" || mode == "oracle") && input.empty())
            throw InputError("config: mode " + mode + " needs --input");
        if (threads < 1) throw InputError("config: threads must be >= 1");
        if (replicates < 1) throw InputError("config: replicates must be >= 1");
        if (top_k < 1) throw InputError("config: top_k must be >= 1");
        if (p_o && *p_o < 0) throw InputError("config: p_o must be >= 0");
        if (n < 0) throw InputError("config: n must be >= 0");
        if (n_ref < 1000) throw InputError("config: n_ref must be >= 1000");
        chain().validate();
        if (!p_o) cv.validate();
        if (mode == "sim1") {
            Setup1Config s = setup1();
            s.validate();
        }
    }

    ChainConfig chain() const {
        ChainConfig c;
        c.steps = steps;
        c.burn_in = burn_in;
        c.n_importance = n_importance;
        c.p_o = p_o.value_or(1);
        c.max_size = max_model_size;
        c.seed = derive_seed(seed, 4);
        return c;
    }

    Setup1Config setup1() const {
        Setup1Config s;
        s.p = p;
        s.rho = rho;
        if (n > 0) s.n = n;
        return s;
    }

    json to_json() const {
        json j;
        j["mode"] = mode;
        if (!input.empty()) j["input"] = input;
        j["steps"] = steps;
        j["burn_in"] = burn_in;
        j["n_importance"] = n_importance;
        j["p_o"] = p_o ? json(*p_o) : json(nullptr);
        j["max_model_size"] = max_model_size;
        j["center"] = center;
        j["seed"] = seed;
        if (mode == "sim1" || mode == "sim2") j["replicates"] = replicates;
        if (mode == "sim1") {
            j["p"] = p;
            j["rho"] = rho;
        }
        if (n > 0) j["n"] = n;
        if (mode == "oracle") j["n_ref"] = n_ref;
        if (!p_o) {
            j["cv"] = {{"folds", cv.folds},       {"p_o_grid", cv.p_o_grid},
                       {"steps", cv.cv_steps},    {"burn_in", cv.cv_burn_in},
                       {"n_importance", cv.cv_N}};
        }
        return j;
    }
};

struct RunOutput {
    json document;
    std::string plot_csv;  // empty when the mode has nothing to plot
};

namespace detail {

inline json model_json(const ModelIndex& M) { return json(std::vector<int>(M.begin(), M.end())); }

/// Least-squares coefficients of M mapped back to the raw covariate scale.
inline json original_scale_fit(const StandardizedDesign& d, const ModelIndex& M,
                               const std::vector<std::string>& names) {
    json out = json::object();
    double intercept = d.y_mean();
    json coef = json::array();
    if (!M.empty()) {
        const ModelFit fit = fit_model(d, M);
        for (std::size_t a = 0; a < M.size(); ++a) {
            const int j = M[a];
            const double b = fit.beta_hat(static_cast<Eigen::Index>(a)) / d.col_norms()(j);
            intercept -= b * d.col_means()(j);
            json c;
            c["index"] = j;
            if (static_cast<std::size_t>(j + 1) < names.size()) c["name"] = names[static_cast<std::size_t>(j + 1)];
            c["beta"] = b;
            coef.push_back(std::move(c));
        }
    }
    out["coefficients"] = std::move(coef);
    if (d.centered()) out["intercept"] = intercept;
    return out;
}

inline json cv_json(const CvResult& cv, const CvConfig& cfg) {
    json j;
    j["p_o"] = cv.p_o_star;
    json rows = json::array();
    for (std::size_t g = 0; g < cfg.p_o_grid.size() && static_cast<Eigen::Index>(g) < cv.mean_bic.size(); ++g) {
        json r;
        r["p_o"] = cfg.p_o_grid[g];
        const double m = cv.mean_bic(static_cast<Eigen::Index>(g));
        r["mean_bic"] = std::isfinite(m) ? json(m) : json(nullptr);
        rows.push_back(std::move(r));
    }
    j["table"] = std::move(rows);
    j["warnings"] = cv.warnings;
    return j;
}

inline CvConfig seeded_cv(const RunConfig& cfg) {
    CvConfig c = cfg.cv;
    c.seed = derive_seed(cfg.seed, 3);
    c.threads = cfg.threads;
    return c;
}

inline ElasticNetConfig seeded_enet(const RunConfig& cfg) {
    ElasticNetConfig e;
    e.seed = derive_seed(cfg.seed, 2);
    return e;
}

inline RunOutput run_select(const RunConfig& cfg, bool cv_only) {
    const Dataset ds = ingest_csv(cfg.input);
    const StandardizedDesign d = standardize(ds.y, ds.X, cfg.center);
    const ProposalWeights w = elastic_net_weights(d, seeded_enet(cfg));
    RunOutput out;
    json& doc = out.document;
    doc["config"] = cfg.to_json();
    doc["seed"] = cfg.seed;
    doc["n"] = d.n();
    doc["p"] = d.p();

    int p_o = cfg.p_o.value_or(1);
    if (!cfg.p_o) {
        const CvConfig cc = seeded_cv(cfg);
        const CvResult cv = select_p_o(d, w, cc);
        p_o = cv.p_o_star;
        doc["cv"] = cv_json(cv, cc);
    }
    doc["p_o"] = p_o;
    if (cv_only) return out;

    ChainConfig ch = cfg.chain();
    ch.p_o = p_o;
    const ChainResult run = run_chain(d, w, ch);
    const PosteriorSummary& s = run.summary;
    doc["acceptance_rate"] = static_cast<double>(run.accepted) / ch.steps;
    json top = json::array();
    for (const auto& [M, r] : s.top(static_cast<std::size_t>(cfg.top_k)))
        top.push_back({{"model", model_json(M)}, {"r_hat", r}});
    doc["top_models"] = std::move(top);
    json map = original_scale_fit(d, s.map_model, ds.names);
    map["model"] = model_json(s.map_model);
    map["r_hat"] = s.prob(s.map_model);
    doc["map"] = std::move(map);
    doc["inclusion_prob"] = std::vector<double>(s.inclusion_prob.begin(), s.inclusion_prob.end());

    std::ostringstream plot;
    plot << "covariate,inclusion_prob\n";
    for (int j = 0; j < d.p(); ++j) plot << j << ',' << format_double(s.inclusion_prob(j)) << '\n';
    out.plot_csv = plot.str();
    return out;
}

inline RunOutput run_sim(const RunConfig& cfg) {
    ExperimentConfig ec;
    ec.setup = cfg.mode == "sim1" ? 1 : 2;
    ec.setup1 = cfg.setup1();
    if (cfg.n > 0) ec.setup2.n = cfg.n;
    ec.replicates = cfg.replicates;
    ec.seed = cfg.seed;
    ec.chain = cfg.chain();
    ec.cv = cfg.cv;
    ec.fixed_p_o = cfg.p_o;
    ec.center = cfg.center;
    ec.threads = cfg.threads;
    const ExperimentResult res = run_experiment(ec);

    RunOutput out;
    json& doc = out.document;
    doc["config"] = cfg.to_json();
    doc["seed"] = cfg.seed;
    doc["summary"] = {{"mean_map_size", res.mean_map_size},
                      {"mean_rmse", res.mean_rmse},
                      {"mean_r_map", res.mean_r_map},
                      {"mean_r_true", res.mean_r_true},
                      {"prop_correct", res.prop_correct}};
    json rows = json::array();
    std::ostringstream plot;
    plot << "replicate,p_o,map_size,r_map,r_true,correct,rmse\n";
    for (const auto& r : res.records) {
        rows.push_back({{"replicate", r.replicate},
                        {"seed", r.seed},
                        {"p_o", r.p_o},
                        {"map_model", model_json(r.map_model)},
                        {"map_size", r.metrics.map_size},
                        {"r_map", r.metrics.r_MAP},
                        {"r_true", r.metrics.r_true},
                        {"correct", r.metrics.correct_selection},
                        {"rmse", r.metrics.rmse_test}});
        plot << r.replicate << ',' << r.p_o << ',' << r.metrics.map_size << ','
             << format_double(r.metrics.r_MAP) << ',' << format_double(r.metrics.r_true) << ','
             << (r.metrics.correct_selection ? 1 : 0) << ',' << format_double(r.metrics.rmse_test)
             << '\n';
    }
    doc["replicates"] = std::move(rows);
    out.plot_csv = plot.str();
    return out;
}

inline RunOutput run_oracle(const RunConfig& cfg) {
    const Dataset ds = ingest_csv(cfg.input);
    const StandardizedDesign d = standardize(ds.y, ds.X, cfg.center);
    RunOutput out;
    json& doc = out.document;
    doc["config"] = cfg.to_json();
    doc["seed"] = cfg.seed;
    int p_o = cfg.p_o.value_or(1);
    if (!cfg.p_o) {
        const ProposalWeights w = elastic_net_weights(d, seeded_enet(cfg));
        const CvConfig cc = seeded_cv(cfg);
        const CvResult cv = select_p_o(d, w, cc);
        p_o = cv.p_o_star;
        doc["cv"] = cv_json(cv, cc);
    }
    doc["p_o"] = p_o;
    const int max_size = cfg.chain().resolved_max_size(d.n(), d.p());
    const EnumeratedPosterior post =
        enumerate_posterior(d, p_o, max_size, cfg.n_ref, derive_seed(cfg.seed, 5), cfg.threads);
    std::vector<std::pair<ModelIndex, EnumeratedEntry>> rows(post.table.begin(), post.table.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second.prob > b.second.prob; });
    json table = json::array();
    double total = 0.0;
    for (const auto& [M, e] : rows) {
        total += e.prob;
        table.push_back({{"model", model_json(M)}, {"prob", e.prob}, {"e_h", e.e_h_ref}});
    }
    doc["total_probability"] = total;
    doc["table"] = std::move(table);
    return out;
}

}  // namespace detail

inline RunOutput run(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.mode == "select") return detail::run_select(cfg, false);
    if (cfg.mode == "cv") return detail::run_select(cfg, true);
    if (cfg.mode == "oracle") return detail::run_oracle(cfg);
    return detail::run_sim(cfg);
}

/// Companion path for the plot-data CSV next to the result document.
inline std::filesystem::path plot_path(const std::filesystem::path& output) {
    std::filesystem::path p = output;
    p.replace_extension(".plot.csv");
    return p;
}

}  // namespace gfivs
