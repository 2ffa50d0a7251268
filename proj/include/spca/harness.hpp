#pragma once

// Experiment orchestration behind the command-line tool: resolved
// configuration, seeded Monte Carlo sweeps over a worker pool, and CSV/JSON
// emission with the configuration echoed into every output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "spca/amp.hpp"
#include "spca/error.hpp"
#include "spca/model_synth.hpp"
#include "spca/rng.hpp"
#include "spca/state_evolution.hpp"
#include "spca/theory.hpp"

#ifndef SPCA_VERSION
#define SPCA_VERSION "0.1.0"
#endif

namespace spca::harness {

inline constexpr const char* kVersion = SPCA_VERSION;

enum class ExitCode : int { ok = 0, parameter = 1, numerical = 2, gap = 3 };

enum class Format { csv, json };

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

/// Parses "a,b,c", "linspace:lo:hi:count" or "logspace:lo:hi:count"
/// (geometric spacing between lo and hi themselves, lo > 0).
inline std::vector<double> parse_grid(const std::string& spec)
{
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ParameterError("bad number '" + s + "' in grid '" + spec + "'");
        }
        if (used != s.size() || !std::isfinite(v))
            throw ParameterError("bad number '" + s + "' in grid '" + spec + "'");
        return v;
    };
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream is(s);
        while (std::getline(is, cur, sep)) parts.push_back(cur);
        if (!s.empty() && s.back() == sep) parts.emplace_back();
        return parts;
    };

    detail::require(!spec.empty(), "empty grid specification");
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const auto parts = split(spec, ':');
        detail::require(parts.size() == 4, "grid spec must be kind:lo:hi:count, got '" + spec + "'");
        const double lo = number(parts[1]), hi = number(parts[2]);
        const double count = number(parts[3]);
        detail::require(count >= 1 && count == std::floor(count) && count <= 1e7,
                        "grid count must be a positive integer in '" + spec + "'");
        const int k = static_cast<int>(count);
        if (k == 1) {
            detail::require(lo == hi, "a one-point grid needs lo == hi in '" + spec + "'");
            return {lo};
        }
        if (parts[0] == "linspace") {
            std::vector<double> g(static_cast<std::size_t>(k));
            for (int i = 0; i < k; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (k - 1);
            g.back() = hi;
            return g;
        }
        if (parts[0] == "logspace") {
            detail::require(lo > 0.0 && hi > 0.0, "logspace endpoints must be > 0 in '" + spec + "'");
            return log_grid(lo, hi, k);
        }
        throw ParameterError("unknown grid kind '" + parts[0] + "' (linspace or logspace)");
    }
    std::vector<double> g;
    for (const auto& s : split(spec, ',')) g.push_back(number(s));
    return g;
}

struct ExperimentConfig {
    std::string command;
    Model model = Model::wigner;
    std::string epsilon_spec = "0.3";
    double alpha = 1.0;
    std::string lambda_spec = "0.5,1,2,3,4,6";
    bool lambda_given = false;
    long n = 2000;
    long m = 0; ///< 0: derived as round(alpha * n)
    int replicates = 1;
    std::uint64_t base_seed = 1;
    int t_max = 200;
    double stop_tol = 1e-8;
    int jobs = 1;
    std::string out;
    Format format = Format::csv;
    std::string dump; ///< amp-run: write the sampled instance here
    bool m_given = false;
    bool alpha_given = false;

    // resolved
    std::vector<double> epsilons;
    std::vector<double> lambdas;

    double epsilon() const { return epsilons.front(); }
};

/// Validates and fills the resolved fields. Throws ParameterError.
inline void resolve(ExperimentConfig& cfg)
{
    cfg.epsilons = parse_grid(cfg.epsilon_spec);
    detail::require(!cfg.epsilons.empty(), "no epsilon given");
    for (double e : cfg.epsilons) detail::require_sparsity(e);
    cfg.lambdas = parse_grid(cfg.lambda_spec);
    detail::require(!cfg.lambdas.empty(), "empty lambda grid");
    for (double l : cfg.lambdas) detail::require(l >= 0.0, "lambda must be >= 0");

    detail::require(cfg.n >= 1, "n must be >= 1");
    detail::require(cfg.replicates >= 1, "replicates must be >= 1");
    detail::require(cfg.t_max >= 1, "t-max must be >= 1");
    detail::require(cfg.stop_tol >= 0.0 && std::isfinite(cfg.stop_tol), "tol must be finite and >= 0");
    detail::require(cfg.jobs >= 1, "jobs must be >= 1");

    if (cfg.model == Model::wishart) {
        if (cfg.m_given) {
            detail::require(cfg.m >= 1, "m must be >= 1");
            const double implied = static_cast<double>(cfg.m) / static_cast<double>(cfg.n);
            if (cfg.alpha_given)
                detail::require(std::abs(cfg.alpha - implied) <= 1e-12 * implied,
                                "alpha must equal m/n when both are given");
            cfg.alpha = implied;
        } else {
            detail::require(cfg.alpha > 0.0 && std::isfinite(cfg.alpha), "alpha must be > 0");
            cfg.m = std::max(1L, std::lround(cfg.alpha * static_cast<double>(cfg.n)));
            cfg.alpha = static_cast<double>(cfg.m) / static_cast<double>(cfg.n);
        }
    } else {
        cfg.m = cfg.n;
        cfg.alpha = 1.0;
    }
}

inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Configuration echo. The worker count is left out on purpose: outputs must
/// not depend on it.
inline std::vector<std::pair<std::string, std::string>> echo(const ExperimentConfig& cfg)
{
    std::string lambdas, epsilons;
    for (double l : cfg.lambdas) lambdas += (lambdas.empty() ? "" : ",") + fmt(l);
    for (double e : cfg.epsilons) epsilons += (epsilons.empty() ? "" : ",") + fmt(e);
    return {{"version", kVersion},
            {"command", cfg.command},
            {"model", to_string(cfg.model)},
            {"epsilon", epsilons},
            {"alpha", fmt(cfg.alpha)},
            {"lambda-grid", cfg.lambda_spec},
            {"lambdas", lambdas},
            {"n", std::to_string(cfg.n)},
            {"m", std::to_string(cfg.m)},
            {"replicates", std::to_string(cfg.replicates)},
            {"seed", std::to_string(cfg.base_seed)},
            {"t-max", std::to_string(cfg.t_max)},
            {"tol", fmt(cfg.stop_tol)}};
}

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

inline std::string csv_field(const Cell& c)
{
    if (std::holds_alternative<std::monostate>(c)) return "";
    if (const auto* d = std::get_if<double>(&c)) return fmt(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

inline Json json_cell(const Cell& c)
{
    if (std::holds_alternative<std::monostate>(c)) return nullptr;
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? Json(*d) : Json(fmt(*d));
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    return std::get<std::string>(c);
}

inline void write_csv(std::ostream& os, const ExperimentConfig& cfg, const Table& t)
{
    for (const auto& [k, v] : echo(cfg)) os << "# " << k << '=' << v << '\n';
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_field(row[j]);
        os << '\n';
    }
}

inline Json config_json(const ExperimentConfig& cfg)
{
    Json c = Json::object();
    for (const auto& [k, v] : echo(cfg)) c[k] = v;
    return c;
}

inline Json table_json(const Table& t)
{
    Json rows = Json::array();
    for (const auto& row : t.rows) {
        Json r = Json::object();
        for (std::size_t j = 0; j < row.size(); ++j) r[t.columns[j]] = json_cell(row[j]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Writes `t` (and `extra` for JSON) to cfg.out, or to `fallback` if no path was set.
inline void emit(const ExperimentConfig& cfg, const Table& t, std::ostream& fallback,
                 const Json& extra = Json::object())
{
    std::ofstream file;
    if (!cfg.out.empty()) {
        file.open(cfg.out, std::ios::binary);
        if (!file) throw ParameterError("cannot open " + cfg.out + " for writing");
    }
    std::ostream& os = cfg.out.empty() ? fallback : file;
    if (cfg.format == Format::csv) {
        write_csv(os, cfg, t);
        return;
    }
    Json doc = Json::object();
    doc["version"] = kVersion;
    doc["config"] = config_json(cfg);
    doc["rows"] = table_json(t);
    for (const auto& [k, v] : extra.items()) doc[k] = v;
    os << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Worker pool

/// Runs task(i) for i in [0, count) on `jobs` threads. Each index is handled
/// exactly once; callers write results into slot i, so assembly order does not
/// depend on scheduling.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task)
{
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) task(i);
        });
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct ResultRecord {
    Model model = Model::wigner;
    double epsilon = 0.0;
    double alpha = 1.0;
    double lambda = 0.0;
    std::size_t lambda_index = 0;
    int replicate = 0;
    long n = 0;
    long m = 0;
    std::uint64_t seed = 0;
    int t_final = 0;
    double mse_amp = std::nan("");
    double mse_se_pred = std::nan("");
    double mse_theory = std::nan("");
    double overlap = std::nan("");
    double wall_time_ms = 0.0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

inline double theory_mmse(Model model, double lambda, double epsilon, double alpha)
{
    return model == Model::wigner ? matrix_mmse_wigner(lambda, epsilon)
                                  : matrix_mmse_wishart(lambda, epsilon, alpha);
}

/// One AMP run on a fresh instance; never throws for numerical trouble, which
/// is reported through `status`.
inline ResultRecord run_replicate(const ExperimentConfig& cfg, std::size_t lambda_index, int replicate,
                                  double mse_theory)
{
    ResultRecord r;
    r.model = cfg.model;
    r.epsilon = cfg.epsilon();
    r.alpha = cfg.alpha;
    r.lambda = cfg.lambdas[lambda_index];
    r.lambda_index = lambda_index;
    r.replicate = replicate;
    r.n = cfg.n;
    r.m = cfg.m;
    r.seed = derive_seed(cfg.base_seed, lambda_index, static_cast<std::uint64_t>(replicate));
    r.mse_theory = mse_theory;

    const auto start = std::chrono::steady_clock::now();
    try {
        const AmpOptions opt{cfg.t_max, cfg.stop_tol, false};
        const AmpRun run = cfg.model == Model::wigner
                               ? amp_wigner_run(sample_wigner(cfg.n, r.lambda, r.epsilon, r.seed), opt)
                               : amp_wishart_run(sample_wishart(cfg.m, cfg.n, r.lambda, r.epsilon, r.seed), opt);
        const auto& last = run.final_record();
        r.t_final = last.t;
        r.mse_amp = last.mse;
        r.mse_se_pred = last.mse_se;
        r.overlap = last.overlap;
    } catch (const NumericalError& e) {
        r.status = std::string("numerical: ") + e.what();
    } catch (const DomainError& e) {
        r.status = std::string("domain: ") + e.what();
    }
    r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Sweep over (lambda, replicate); records sorted by (lambda index, replicate).
inline std::vector<ResultRecord> monte_carlo(const ExperimentConfig& cfg)
{
    std::vector<double> theory(cfg.lambdas.size());
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        try {
            theory[i] = theory_mmse(cfg.model, cfg.lambdas[i], cfg.epsilon(), cfg.alpha);
        } catch (const NumericalError&) {
            theory[i] = std::nan("");
        }
    }
    const auto reps = static_cast<std::size_t>(cfg.replicates);
    std::vector<ResultRecord> out(cfg.lambdas.size() * reps);
    parallel_for(out.size(), cfg.jobs, [&](std::size_t k) {
        const std::size_t li = k / reps;
        out[k] = run_replicate(cfg, li, static_cast<int>(k % reps), theory[li]);
    });
    return out;
}

/// Linear-interpolation quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& v, double p)
{
    detail::require(!v.empty(), "quantile of an empty sample");
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct LambdaSummary {
    double lambda = 0.0;
    std::size_t lambda_index = 0;
    int successes = 0;
    int replicates = 0;
    double median = std::nan("");
    double q1 = std::nan("");
    double q3 = std::nan("");
    double theory = std::nan("");

    bool complete() const { return successes == replicates; }
    double gap() const { return std::abs(median - theory); }
};

inline std::vector<LambdaSummary> summarize(const ExperimentConfig& cfg, const std::vector<ResultRecord>& recs)
{
    std::vector<LambdaSummary> out;
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        LambdaSummary s;
        s.lambda = cfg.lambdas[i];
        s.lambda_index = i;
        s.replicates = cfg.replicates;
        std::vector<double> mse;
        for (const auto& r : recs) {
            if (r.lambda_index != i) continue;
            s.theory = r.mse_theory;
            if (r.ok()) mse.push_back(r.mse_amp);
        }
        s.successes = static_cast<int>(mse.size());
        if (!mse.empty()) {
            std::sort(mse.begin(), mse.end());
            s.median = quantile_sorted(mse, 0.5);
            s.q1 = quantile_sorted(mse, 0.25);
            s.q3 = quantile_sorted(mse, 0.75);
        }
        out.push_back(s);
    }
    return out;
}

inline Table records_table(const std::vector<ResultRecord>& recs)
{
    Table t;
    t.columns = {"model", "epsilon", "alpha", "lambda", "lambda_index", "replicate", "n", "m", "seed",
                 "t_final", "mse_amp", "mse_se_pred", "mse_theory", "overlap", "wall_time_ms", "status"};
    for (const auto& r : recs) {
        auto opt = [&](double v) -> Cell { return r.ok() ? Cell{v} : Cell{}; };
        t.rows.push_back({std::string(to_string(r.model)), r.epsilon, r.alpha, r.lambda,
                          static_cast<long long>(r.lambda_index), static_cast<long long>(r.replicate),
                          static_cast<long long>(r.n), static_cast<long long>(r.m), std::to_string(r.seed),
                          static_cast<long long>(r.t_final), opt(r.mse_amp), opt(r.mse_se_pred), r.mse_theory,
                          opt(r.overlap), r.wall_time_ms, r.status});
    }
    return t;
}

inline Json summary_json(const std::vector<LambdaSummary>& sum)
{
    Json arr = Json::array();
    for (const auto& s : sum) {
        Json j = Json::object();
        j["lambda"] = s.lambda;
        j["lambda_index"] = s.lambda_index;
        j["successes"] = s.successes;
        j["replicates"] = s.replicates;
        j["complete"] = s.complete();
        j["median"] = json_cell(s.median);
        j["q1"] = json_cell(s.q1);
        j["q3"] = json_cell(s.q3);
        j["theory"] = json_cell(s.theory);
        j["abs_gap"] = json_cell(s.gap());
        arr.push_back(std::move(j));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Commands. Each returns an exit code; ParameterError escapes to the caller.

inline int cmd_mmse_curve(const ExperimentConfig& cfg, std::ostream& os)
{
    Table t;
    t.columns = {"lambda", "y_star", "mmse", "status"};
    bool ok = true;
    detail::require(cfg.epsilons.size() == 1, "mmse-curve takes a single epsilon");
    const auto curve = mmse_curve(cfg.model, cfg.epsilon(), cfg.alpha, cfg.lambdas);
    for (const auto& p : curve.points) {
        t.rows.push_back({p.lambda, p.y_star, p.mmse, p.status});
        ok = ok && p.status == "ok";
    }
    emit(cfg, t, os);
    return static_cast<int>(ok ? ExitCode::ok : ExitCode::numerical);
}

inline int cmd_monte_carlo(const ExperimentConfig& cfg, std::ostream& os)
{
    detail::require(cfg.epsilons.size() == 1, "monte-carlo takes a single epsilon");
    const auto recs = monte_carlo(cfg);
    const auto sum = summarize(cfg, recs);
    Json extra = Json::object();
    extra["summary"] = summary_json(sum);
    emit(cfg, records_table(recs), os, extra);
    if (cfg.format == Format::csv && !cfg.out.empty()) {
        std::ofstream side(cfg.out + ".summary.json");
        if (!side) throw ParameterError("cannot open " + cfg.out + ".summary.json for writing");
        Json doc = Json::object();
        doc["version"] = kVersion;
        doc["config"] = config_json(cfg);
        doc["summary"] = extra["summary"];
        side << doc.dump(2) << '\n';
    }
    for (const auto& s : sum)
        if (!s.complete()) return static_cast<int>(ExitCode::numerical);
    return static_cast<int>(ExitCode::ok);
}

inline int cmd_amp_run(const ExperimentConfig& cfg, std::ostream& os)
{
    detail::require(cfg.epsilons.size() == 1, "amp-run takes a single epsilon");
    detail::require(cfg.lambdas.size() == 1, "amp-run takes a single lambda");
    const double lambda = cfg.lambdas.front();
    const auto seed = derive_seed(cfg.base_seed, 0, 0);
    const AmpOptions opt{cfg.t_max, cfg.stop_tol, false};

    AmpRun run;
    if (cfg.model == Model::wigner) {
        const auto inst = sample_wigner(cfg.n, lambda, cfg.epsilon(), seed);
        if (!cfg.dump.empty()) write_instance(cfg.dump, inst);
        run = amp_wigner_run(inst, opt);
    } else {
        const auto inst = sample_wishart(cfg.m, cfg.n, lambda, cfg.epsilon(), seed);
        if (!cfg.dump.empty()) write_instance(cfg.dump, inst);
        run = amp_wishart_run(inst, opt);
    }

    Table t;
    t.columns = {"t", "b", "d", "mse", "mse_se", "overlap", "norm", "overlap_u", "norm_u",
                 "se_mu", "se_tau", "se_overlap", "se_overlap_u"};
    const bool wishart = cfg.model == Model::wishart;
    for (const auto& r : run.records) {
        auto w = [&](double v) -> Cell { return wishart ? Cell{v} : Cell{}; };
        t.rows.push_back({static_cast<long long>(r.t), r.b, w(r.d), r.mse, r.mse_se, r.overlap, r.norm,
                          w(r.overlap_u), w(r.norm_u), r.se_mu, r.se_tau, r.se_overlap, w(r.se_overlap_u)});
    }
    Json extra = Json::object();
    extra["instance_seed"] = std::to_string(seed);
    extra["mse_theory"] = theory_mmse(cfg.model, lambda, cfg.epsilon(), cfg.alpha);
    emit(cfg, t, os, extra);
    return static_cast<int>(ExitCode::ok);
}

inline int cmd_se_trace(const ExperimentConfig& cfg, std::ostream& os)
{
    detail::require(cfg.epsilons.size() == 1, "se-trace takes a single epsilon");
    Table t;
    // stop once the state moves by less than tol; tol = 0 runs all t-max steps
    if (cfg.model == Model::wigner) {
        t.columns = {"lambda", "t", "mu", "tau"};
        for (double l : cfg.lambdas)
            for (const auto& s : se_trajectory_wigner(l, cfg.epsilon(), cfg.t_max, cfg.stop_tol))
                t.rows.push_back({l, static_cast<long long>(s.t), s.mu, s.tau});
    } else {
        t.columns = {"lambda", "t", "q_v", "q_u", "mu_u", "tau_u", "mu_v", "tau_v"};
        for (double l : cfg.lambdas)
            for (const auto& s : se_trajectory_wishart(l, cfg.epsilon(), cfg.alpha, cfg.t_max, cfg.stop_tol))
                t.rows.push_back({l, static_cast<long long>(s.t), s.q_v, s.q_u, s.mu_u, s.tau_u, s.mu_v, s.tau_v});
    }
    emit(cfg, t, os);
    return static_cast<int>(ExitCode::ok);
}

inline constexpr double kIntegralGapLimit = 0.01;
inline constexpr double kDefaultIntegralLambdaMax = 1e3;

inline int cmd_integral_check(const ExperimentConfig& cfg, std::ostream& os)
{
    double lambda_max = kDefaultIntegralLambdaMax;
    if (cfg.lambda_given) {
        detail::require(cfg.lambdas.size() == 1, "integral-check takes a single --lambda (upper limit)");
        lambda_max = cfg.lambdas.front();
    }
    Table t;
    t.columns = {"epsilon", "lambda_max", "integral", "tail", "target", "gap", "terminal_mmse", "status"};
    bool all_ok = true;
    bool numerical = false;
    for (double eps : cfg.epsilons) {
        try {
            const auto r = integral_identity_check(eps, lambda_max);
            const bool ok = r.gap <= kIntegralGapLimit;
            all_ok = all_ok && ok;
            t.rows.push_back({eps, lambda_max, r.integral, r.tail, r.target, r.gap, r.terminal_mmse,
                              std::string(ok ? "ok" : "gap")});
        } catch (const NumericalError& e) {
            numerical = true;
            t.rows.push_back({eps, lambda_max, Cell{}, Cell{}, 4.0 * binary_entropy(eps), Cell{}, Cell{},
                              std::string("numerical: ") + e.what()});
        }
    }
    Json extra = Json::object();
    extra["gap_limit"] = kIntegralGapLimit;
    emit(cfg, t, os, extra);
    if (numerical) return static_cast<int>(ExitCode::numerical);
    return static_cast<int>(all_ok ? ExitCode::ok : ExitCode::gap);
}

struct ThresholdReport {
    std::vector<double> grid;
    ThresholdOptions threshold_options;
    ConvexityOptions convexity_options;
    double convexity_tol = 1e-3;
    std::optional<ThresholdEstimate> epsilon_star;
    std::optional<ConvexityThreshold> convexity;
    std::string epsilon_star_error;
    std::vector<ThresholdProbe> failed_trace;
};

inline ThresholdReport compute_thresholds()
{
    ThresholdReport rep;
    rep.grid = default_threshold_grid();
    try {
        rep.epsilon_star = estimate_epsilon_star(rep.grid, rep.threshold_options);
    } catch (const NonMonotonePredicate& e) {
        rep.epsilon_star_error = e.what();
        rep.failed_trace = e.trace();
    }
    rep.convexity = smmse_convexity_threshold(rep.convexity_tol, rep.convexity_options);
    return rep;
}

inline int cmd_thresholds(const ExperimentConfig& cfg, std::ostream& os)
{
    const auto rep = compute_thresholds();

    Table t;
    t.columns = {"kind", "step", "epsilon", "verdict", "detail"};
    const auto& trace = rep.epsilon_star ? rep.epsilon_star->trace : rep.failed_trace;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& p = trace[i];
        std::string detail;
        if (!p.unique)
            detail = "witness lambda=" + fmt(p.witness_lambda) + " count=" + std::to_string(p.witness_count);
        t.rows.push_back({std::string("uniqueness"), static_cast<long long>(i), p.epsilon,
                          std::string(p.unique ? "unique" : "multiple"), detail});
    }
    if (rep.epsilon_star)
        t.rows.push_back({std::string("uniqueness"), std::string("estimate"), rep.epsilon_star->estimate,
                          std::string("interval"),
                          fmt(rep.epsilon_star->interval.lo) + ";" + fmt(rep.epsilon_star->interval.hi)});
    else
        t.rows.push_back({std::string("uniqueness"), std::string("estimate"), Cell{}, std::string("failed"),
                          rep.epsilon_star_error});
    for (std::size_t i = 0; i < rep.convexity->trace.size(); ++i) {
        const auto& p = rep.convexity->trace[i];
        t.rows.push_back({std::string("convexity"), static_cast<long long>(i), p.epsilon,
                          std::string(p.convex ? "convex" : "nonconvex"),
                          "worst=" + fmt(p.worst) + " at z=" + fmt(p.worst_z)});
    }
    t.rows.push_back({std::string("convexity"), std::string("estimate"), rep.convexity->estimate,
                      std::string("interval"),
                      fmt(rep.convexity->interval.lo) + ";" + fmt(rep.convexity->interval.hi)});
    t.rows.push_back({std::string("convexity"), std::string("small-snr bound"),
                      smmse_small_snr_convexity_bound(), std::string("analytic"), std::string("(3-sqrt3)/6")});

    Json extra = Json::object();
    Json grids = Json::object();
    grids["uniqueness_lambda"] = rep.grid;
    grids["uniqueness_lambda_spec"] = "logspace:0.01:100000:401";
    grids["convexity_snr_spec"] = "logspace:" + fmt(rep.convexity_options.z_lo) + ":"
                                  + fmt(rep.convexity_options.z_hi) + ":"
                                  + std::to_string(rep.convexity_options.points);
    extra["grids"] = grids;
    Json est = Json::object();
    est["epsilon_star"] = rep.epsilon_star ? Json(rep.epsilon_star->estimate) : Json(nullptr);
    est["convexity_bound"] = rep.convexity->estimate;
    est["convexity_small_snr_bound"] = smmse_small_snr_convexity_bound();
    extra["estimates"] = est;
    emit(cfg, t, os, extra);
    return static_cast<int>(rep.epsilon_star ? ExitCode::ok : ExitCode::numerical);
}

} // namespace spca::harness
