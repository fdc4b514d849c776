#include <gfivs/run.hpp>

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    gfivs::RunConfig cfg;
    CLI::App app{"Model selection by fiducial posterior sampling"};
    app.add_option("--mode", cfg.mode, "select | cv | sim1 | sim2 | oracle")
        ->check(CLI::IsMember({"select", "cv", "sim1", "sim2", "oracle"}));
    app.add_option("--input", cfg.input, "CSV with a header row; response in the first column");
    app.add_option("--output", cfg.output, "result JSON (stdout when omitted)");
    app.add_option("--steps", cfg.steps, "MCMC steps");
    app.add_option("--burn-in", cfg.burn_in, "discarded initial steps");
    app.add_option("--n-importance", cfg.n_importance, "draws per E(h) estimate");
    int p_o = -1;
    auto* po = app.add_option("--p-o", p_o, "fixed p_o; skips cross-validation");
    app.add_option("--max-model-size", cfg.max_model_size, "0 means floor(sqrt(n))");
    app.add_flag("--center,!--no-center", cfg.center, "center y and the covariates");
    app.add_option("--seed", cfg.seed);
    app.add_option("--threads", cfg.threads);
    app.add_option("--replicates", cfg.replicates, "simulation replicates");
    app.add_option("--p", cfg.p, "covariates in setup 1");
    app.add_option("--rho", cfg.rho, "equicorrelation in setup 1");
    app.add_option("--n", cfg.n, "training rows in the simulation (0 keeps the default)");
    app.add_option("--top-k", cfg.top_k, "models listed in the result");
    app.add_option("--n-ref", cfg.n_ref, "draws per model in oracle mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    if (*po) cfg.p_o = p_o;

    try {
        const gfivs::RunOutput out = gfivs::run(cfg);
        const std::string doc = out.document.dump(2) + "\n";
        if (cfg.output.empty()) {
            std::cout << doc;
        } else {
            gfivs::write_atomic(cfg.output, doc);
            if (!out.plot_csv.empty()) gfivs::write_atomic(gfivs::plot_path(cfg.output), out.plot_csv);
        }
    } catch (const gfivs::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
