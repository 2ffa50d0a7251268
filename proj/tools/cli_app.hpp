#pragma once

// Command-line front end. Options live on the top-level app and are visible
// from every subcommand; --config reads a flat `key = value` file whose keys
// are the long option names. Command-line flags override the file.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "spca/harness.hpp"

namespace spca::cli {

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    using harness::ExitCode;
    harness::ExperimentConfig cfg;

    CLI::App app{"Bayes-optimal AMP for sparse PCA: theory curves, AMP runs and Monte Carlo sweeps", "spca"};
    app.set_version_flag("--version", std::string(harness::kVersion));
    app.set_config("--config", "", "flat key = value file with long option names as keys");
    app.require_subcommand(1, 1);

    const std::map<std::string, Model> models{{"wigner", Model::wigner}, {"wishart", Model::wishart}};
    const std::map<std::string, harness::Format> formats{{"csv", harness::Format::csv},
                                                         {"json", harness::Format::json}};
    app.add_option("--model", cfg.model, "observation model")
        ->transform(CLI::CheckedTransformer(models, CLI::ignore_case))
        ->option_text("wigner|wishart");
    app.add_option("--epsilon", cfg.epsilon_spec, "sparsity; integral-check accepts a comma list")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    auto* alpha = app.add_option("--alpha", cfg.alpha, "Wishart aspect ratio m/n");
    auto* lambda = app.add_option("--lambda,--lambda-grid", cfg.lambda_spec,
                                  "SNR grid: a,b,c | linspace:lo:hi:count | logspace:lo:hi:count")
                     ->delimiter(',')
                     ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    app.add_option("--n", cfg.n, "signal dimension n");
    auto* m = app.add_option("--m", cfg.m, "Wishart row count m (default round(alpha*n))");
    app.add_option("--replicates", cfg.replicates, "Monte Carlo replicates per lambda");
    app.add_option("--seed", cfg.base_seed, "base seed");
    app.add_option("--t-max", cfg.t_max, "maximum AMP / state-evolution iterations");
    app.add_option("--tol", cfg.stop_tol, "stop when successive MSE (or SE state) moves less than this");
    app.add_option("--jobs", cfg.jobs, "worker threads for Monte Carlo sweeps");
    app.add_option("--out", cfg.out, "output path (default stdout)");
    app.add_option("--format", cfg.format, "output format")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("csv|json");

    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const harness::ExperimentConfig&, std::ostream&);
    };
    const Command commands[] = {
        {"mmse-curve", "theoretical M-mmse over the lambda grid", harness::cmd_mmse_curve},
        {"amp-run", "one AMP run with per-iteration metrics", harness::cmd_amp_run},
        {"monte-carlo", "AMP replicates over the lambda grid with a median summary", harness::cmd_monte_carlo},
        {"thresholds", "uniqueness threshold and S-mmse convexity bound", harness::cmd_thresholds},
        {"integral-check", "integral of M-mmse against 4 h(eps)", harness::cmd_integral_check},
        {"se-trace", "state-evolution trajectories over the lambda grid", harness::cmd_se_trace},
    };
    const Command* chosen = nullptr;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->fallthrough();
        sub->callback([&chosen, &c] { chosen = &c; });
        if (std::string(c.name) == "amp-run")
            sub->add_option("--dump", cfg.dump, "write the sampled instance (binary) to this path");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return static_cast<int>(ExitCode::parameter);
    }

    cfg.command = chosen->name;
    cfg.lambda_given = lambda->count() > 0;
    cfg.m_given = m->count() > 0;
    cfg.alpha_given = alpha->count() > 0;
    try {
        harness::resolve(cfg);
        return chosen->fn(cfg, out);
    } catch (const ParameterError& e) {
        err << "parameter error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::parameter);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical);
    } catch (const DomainError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical);
    }
}

} // namespace spca::cli
