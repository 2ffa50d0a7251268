#pragma once

// Bayes-optimal approximate message passing for the spiked models.
//
// Symmetric (A = Y / sqrt(n)):
//   x^{t+1}    = A xhat^t - b_t xhat^{t-1},   b_t = mean f_t'(x^t)
//   xhat^{t+1} = f_{t+1}(x^{t+1})
// started from xhat^0 = eps * 1, xhat^{-1} = 0, so that iteration t lines up
// with state-evolution step t (f_0 is the prior mean).
//
// Rectangular (A = Y / sqrt(m)), per iteration:
//   u^{t+1} = A vhat^t - b_t uhat^t,          b_t = (1/m) sum_j f_t'(v_j^t)
//   uhat^{t+1} = g(u^{t+1})                    (Gaussian posterior mean)
//   v^{t+1} = A^T uhat^{t+1} - d vhat^t,       d = g' = mu_u / (mu_u^2 + tau_u)
//   vhat^{t+1} = f(v^{t+1})
//
// Denoiser parameters come from offline state evolution. The hidden signal is
// only touched by the scoring helpers.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spca/error.hpp"
#include "spca/model_synth.hpp"
#include "spca/scalar_channel.hpp"
#include "spca/state_evolution.hpp"
#include "spca/theory.hpp"

namespace spca {

struct AmpOptions {
    int t_max = 200;
    double stop_tol = 1e-8;
    bool keep_iterates = false; ///< store pre-denoising iterates for se_agreement_report
};

struct IterationRecord {
    int t = 0;
    double b = 0.0;         ///< Onsager coefficient computed from this iterate
    double d = 0.0;         ///< rectangular u-side coefficient (0 for Wigner)
    double mse = 0.0;       ///< empirical matrix MSE of the rank-one estimate
    double mse_se = 0.0;    ///< state-evolution prediction of mse
    double overlap = 0.0;   ///< <xhat, x>/n  (v-side for Wishart)
    double norm = 0.0;      ///< ||xhat||^2/n (v-side for Wishart)
    double overlap_u = std::numeric_limits<double>::quiet_NaN(); ///< <uhat, u>/m
    double norm_u = std::numeric_limits<double>::quiet_NaN();    ///< ||uhat||^2/m
    double se_mu = 0.0;     ///< denoiser scale used for this iterate (v-side for Wishart)
    double se_tau = 0.0;
    double se_overlap = 0.0;   ///< predicted overlap (v-side)
    double se_overlap_u = std::numeric_limits<double>::quiet_NaN();
};

struct AmpRun {
    Model model = Model::wigner;
    double lambda = 0.0;
    double epsilon = 0.0;
    double alpha = 1.0;
    long n = 0;
    long m = 0;
    std::vector<IterationRecord> records;
    Eigen::VectorXd estimate;    ///< final xhat (Wigner) or vhat (Wishart)
    Eigen::VectorXd estimate_u;  ///< final uhat (Wishart)
    std::vector<Eigen::VectorXd> iterates; ///< x^t for t = 0.. (x^0 empty) when kept
    std::vector<SEStateWigner> se;  ///< Wigner trajectory used for the denoisers

    const IterationRecord& final_record() const { return records.back(); }
    int t_final() const { return records.back().t; }
};

/// (||xhat||^4 + ||x||^4 - 2 <xhat, x>^2) / n^2, the Frobenius MSE of xhat xhat^T vs x x^T.
inline double empirical_mse_rank_one(std::span<const double> xhat, std::span<const double> x)
{
    detail::require(xhat.size() == x.size(), "empirical_mse_rank_one: length mismatch");
    detail::require(!x.empty(), "empirical_mse_rank_one: empty vectors");
    double nh = 0.0, nx = 0.0, ip = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        nh += xhat[i] * xhat[i];
        nx += x[i] * x[i];
        ip += xhat[i] * x[i];
    }
    const double n = static_cast<double>(x.size());
    return (nh * nh + nx * nx - 2.0 * ip * ip) / (n * n);
}

/// Rectangular version normalized by 1/(mn).
inline double empirical_mse_rank_one(std::span<const double> uhat, std::span<const double> vhat,
                                     std::span<const double> u, std::span<const double> v)
{
    detail::require(uhat.size() == u.size() && vhat.size() == v.size(),
                    "empirical_mse_rank_one: length mismatch");
    detail::require(!u.empty() && !v.empty(), "empirical_mse_rank_one: empty vectors");
    double uu = 0.0, uhuh = 0.0, uuh = 0.0, vv = 0.0, vhvh = 0.0, vvh = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        uhuh += uhat[i] * uhat[i];
        uuh += u[i] * uhat[i];
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
        vv += v[j] * v[j];
        vhvh += vhat[j] * vhat[j];
        vvh += v[j] * vhat[j];
    }
    const double mn = static_cast<double>(u.size()) * static_cast<double>(v.size());
    return (uhuh * vhvh + uu * vv - 2.0 * uuh * vvh) / mn;
}

inline std::span<const double> as_span(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// (1/n) sum_i f'(x_i); zero for the constant denoiser mu = 0.
inline double onsager_coefficient(std::span<const double> x, const BernoulliChannel& ch)
{
    detail::require(!x.empty(), "onsager_coefficient: empty iterate");
    detail::validate(ch);
    if (ch.mu == 0.0) return 0.0;
    if (ch.tau == 0.0) throw DomainError("onsager_coefficient requires tau > 0");
    double acc = 0.0;
    for (double xi : x) acc += quad::logistic_variance(detail::log_odds(ch, xi));
    return ch.mu / ch.tau * acc / static_cast<double>(x.size());
}

namespace detail {

/// Entrywise Bernoulli posterior mean; returns the summed derivative.
inline double denoise_bernoulli(const Eigen::VectorXd& in, const BernoulliChannel& ch, Eigen::VectorXd& out)
{
    out.resize(in.size());
    if (ch.mu == 0.0) {
        out.setConstant(ch.epsilon);
        return 0.0;
    }
    if (ch.tau == 0.0) throw DomainError("AMP reached a noiseless channel (tau = 0, mu > 0)");
    double deriv = 0.0;
    for (long i = 0; i < in.size(); ++i) {
        const double a = log_odds(ch, in(i));
        out(i) = quad::logistic(a);
        deriv += quad::logistic_variance(a);
    }
    return ch.mu / ch.tau * deriv;
}

inline void check_finite(const Eigen::VectorXd& v, int t)
{
    if (!v.allFinite())
        throw NumericalError("AMP iterate became non-finite at t=" + std::to_string(t), 0.0, t);
}

} // namespace detail

inline AmpRun amp_wigner_run(const WignerInstance& inst, const AmpOptions& opt = {})
{
    detail::require(opt.t_max >= 1, "t_max must be >= 1");
    detail::require(inst.n >= 1 && inst.Y.rows() == inst.n && inst.Y.cols() == inst.n,
                    "Wigner instance: Y must be n x n");
    detail::require(inst.x.size() == inst.n, "Wigner instance: signal length must be n");
    detail::check_model_params(inst.n, inst.lambda, inst.epsilon);

    const long n = inst.n;
    const double eps = inst.epsilon;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

    AmpRun run;
    run.model = Model::wigner;
    run.lambda = inst.lambda;
    run.epsilon = eps;
    run.n = n;
    run.m = n;
    run.se = se_trajectory_wigner(inst.lambda, eps, opt.t_max + 1);

    auto score = [&](int t, const Eigen::VectorXd& xhat, double b, const SEStateWigner& s) {
        IterationRecord r;
        r.t = t;
        r.b = b;
        r.mse = empirical_mse_rank_one(as_span(xhat), as_span(inst.x));
        const double tau_next = run.se[static_cast<std::size_t>(t) + 1].tau;
        r.mse_se = eps * eps - tau_next * tau_next;
        r.overlap = xhat.dot(inst.x) / static_cast<double>(n);
        r.norm = xhat.squaredNorm() / static_cast<double>(n);
        r.se_mu = s.mu;
        r.se_tau = s.tau;
        r.se_overlap = tau_next;
        return r;
    };

    Eigen::VectorXd xhat = Eigen::VectorXd::Constant(n, eps);
    Eigen::VectorXd xhat_prev = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd x(n), next(n);
    double b = 0.0;
    run.records.push_back(score(0, xhat, b, run.se[0]));
    if (opt.keep_iterates) run.iterates.emplace_back();

    for (int t = 0; t < opt.t_max; ++t) {
        x.noalias() = inst.Y.selfadjointView<Eigen::Upper>() * xhat;
        x *= inv_sqrt_n;
        x -= b * xhat_prev;
        detail::check_finite(x, t + 1);

        const auto& s = run.se[static_cast<std::size_t>(t) + 1];
        const BernoulliChannel ch{eps, s.mu, s.tau};
        std::swap(xhat_prev, xhat);
        b = detail::denoise_bernoulli(x, ch, xhat) / static_cast<double>(n);
        if (opt.keep_iterates) run.iterates.push_back(x);

        run.records.push_back(score(t + 1, xhat, b, s));
        const double change = std::abs(run.records.back().mse - run.records[run.records.size() - 2].mse);
        if (change < opt.stop_tol) break;
    }
    run.estimate = xhat;
    return run;
}

inline AmpRun amp_wishart_run(const WishartInstance& inst, const AmpOptions& opt = {})
{
    detail::require(opt.t_max >= 1, "t_max must be >= 1");
    detail::require(inst.m >= 1 && inst.n >= 1 && inst.Y.rows() == inst.m && inst.Y.cols() == inst.n,
                    "Wishart instance: Y must be m x n");
    detail::require(inst.u.size() == inst.m && inst.v.size() == inst.n,
                    "Wishart instance: factor lengths must match Y");
    detail::check_model_params(inst.n, inst.lambda, inst.epsilon);

    const long m = inst.m, n = inst.n;
    const double eps = inst.epsilon, lambda = inst.lambda, alpha = inst.alpha();
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));

    AmpRun run;
    run.model = Model::wishart;
    run.lambda = lambda;
    run.epsilon = eps;
    run.alpha = alpha;
    run.n = n;
    run.m = m;
    const auto se = se_trajectory_wishart(lambda, eps, alpha, opt.t_max + 1);

    auto score = [&](int t, const Eigen::VectorXd& uhat, const Eigen::VectorXd& vhat, double b, double d,
                     double q_u, double q_v, const BernoulliChannel& ch) {
        IterationRecord r;
        r.t = t;
        r.b = b;
        r.d = d;
        r.mse = empirical_mse_rank_one(as_span(uhat), as_span(vhat), as_span(inst.u), as_span(inst.v));
        r.mse_se = eps - q_u * q_v;
        r.overlap = vhat.dot(inst.v) / static_cast<double>(n);
        r.norm = vhat.squaredNorm() / static_cast<double>(n);
        r.overlap_u = uhat.dot(inst.u) / static_cast<double>(m);
        r.norm_u = uhat.squaredNorm() / static_cast<double>(m);
        r.se_mu = ch.mu;
        r.se_tau = ch.tau;
        r.se_overlap = q_v;
        r.se_overlap_u = q_u;
        return r;
    };

    Eigen::VectorXd vhat = Eigen::VectorXd::Constant(n, eps);
    Eigen::VectorXd uhat = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd u(m), v(n);
    double b = 0.0;
    run.records.push_back(score(0, uhat, vhat, 0.0, 0.0, 0.0, se[0].q_v, {eps, 0.0, 0.0}));
    if (opt.keep_iterates) run.iterates.emplace_back();

    for (int t = 0; t < opt.t_max; ++t) {
        const auto& s = se[static_cast<std::size_t>(t)];

        u.noalias() = inst.Y * vhat;
        u *= inv_sqrt_m;
        u -= b * uhat;
        detail::check_finite(u, t + 1);

        const GaussianChannel gu{s.mu_u, s.tau_u};
        const double d = gaussian_posterior_mean_deriv(gu);
        uhat = d * u;

        v.noalias() = inst.Y.transpose() * uhat;
        v *= inv_sqrt_m;
        v -= d * vhat;
        detail::check_finite(v, t + 1);

        const BernoulliChannel ch{eps, s.mu_v, s.tau_v};
        b = detail::denoise_bernoulli(v, ch, vhat) / static_cast<double>(m);
        if (opt.keep_iterates) run.iterates.push_back(v);

        const double q_v_next = se[static_cast<std::size_t>(t) + 1].q_v;
        run.records.push_back(score(t + 1, uhat, vhat, b, d, s.q_u, q_v_next, ch));
        const double change = std::abs(run.records.back().mse - run.records[run.records.size() - 2].mse);
        if (change < opt.stop_tol) break;
    }
    run.estimate = vhat;
    run.estimate_u = uhat;
    return run;
}

// ---------------------------------------------------------------------------
// Agreement between empirical averages and state evolution

struct AgreementEntry {
    std::string name;
    double empirical = 0.0;
    double predicted = 0.0;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool ok = true;
};

struct AgreementReport {
    int t = 0;
    double c = 5.0;
    std::vector<AgreementEntry> entries;

    bool all_ok() const
    {
        for (const auto& e : entries)
            if (!e.ok) return false;
        return true;
    }
};

/// Test functions psi(a, b) with a the hidden coordinate and b = x_i^t.
enum class TestFunction { overlap, norm, first_moment, second_moment };

inline const char* to_string(TestFunction f)
{
    switch (f) {
    case TestFunction::overlap: return "overlap";
    case TestFunction::norm: return "norm";
    case TestFunction::first_moment: return "first_moment";
    case TestFunction::second_moment: return "second_moment";
    }
    return "?";
}

/// Compares (1/n) sum psi(x_i, x_i^t) with E psi(X0, mu_t X0 + sqrt(tau_t) Z)
/// and flags deviations beyond c / sqrt(n). Needs a Wigner run made with
/// keep_iterates and 1 <= t <= t_final.
inline AgreementReport se_agreement_report(const AmpRun& run, const std::vector<SEStateWigner>& traj,
                                           std::span<const double> signal, int t,
                                           const std::vector<TestFunction>& fns =
                                               {TestFunction::overlap, TestFunction::norm,
                                                TestFunction::first_moment, TestFunction::second_moment},
                                           double c = 5.0)
{
    detail::require(run.model == Model::wigner, "se_agreement_report: Wigner runs only");
    detail::require(t >= 1 && static_cast<std::size_t>(t) < run.iterates.size(),
                    "se_agreement_report: iterate t not stored (run with keep_iterates)");
    detail::require(static_cast<std::size_t>(t) < traj.size(), "se_agreement_report: trajectory too short");
    detail::require(signal.size() == static_cast<std::size_t>(run.n), "se_agreement_report: signal length");

    const auto& x = run.iterates[static_cast<std::size_t>(t)];
    const auto& s = traj[static_cast<std::size_t>(t)];
    const BernoulliChannel ch{run.epsilon, s.mu, s.tau};
    const double n = static_cast<double>(run.n);

    AgreementReport rep;
    rep.t = t;
    rep.c = c;
    for (auto fn : fns) {
        double emp = 0.0, pred = 0.0;
        for (long i = 0; i < run.n; ++i) {
            const double a = signal[static_cast<std::size_t>(i)];
            const double bi = x(i);
            switch (fn) {
            case TestFunction::overlap: emp += a * posterior_mean(ch, bi); break;
            case TestFunction::norm: {
                const double f = posterior_mean(ch, bi);
                emp += f * f;
                break;
            }
            case TestFunction::first_moment: emp += bi; break;
            case TestFunction::second_moment: emp += bi * bi; break;
            }
        }
        emp /= n;
        switch (fn) {
        case TestFunction::overlap: pred = expected_signal_overlap(ch); break;
        case TestFunction::norm: pred = expected_squared_estimate(ch); break;
        case TestFunction::first_moment: pred = s.mu * run.epsilon; break;
        case TestFunction::second_moment: pred = s.mu * s.mu * run.epsilon + s.tau; break;
        }
        AgreementEntry e{to_string(fn), emp, pred, std::abs(emp - pred), c / std::sqrt(n), true};
        e.ok = e.deviation <= e.tolerance;
        rep.entries.push_back(e);
    }
    return rep;
}

} // namespace spca
