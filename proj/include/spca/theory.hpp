#pragma once

// Asymptotic matrix MMSE curves, the replica potential and the entropy
// integral identity for the spiked models.
//
//   Wigner:   M-mmse(lambda) = eps^2 - (y*/lambda)^2
//   Wishart:  M-mmse(lambda) = eps - y*^2 / (lambda (1 + y*))
//
// Natural logarithms throughout.

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spca/error.hpp"
#include "spca/rng.hpp"
#include "spca/scalar_channel.hpp"
#include "spca/state_evolution.hpp"

namespace spca {

enum class Model { wigner, wishart };

inline const char* to_string(Model m)
{
    return m == Model::wigner ? "wigner" : "wishart";
}

/// M-mmse for the spiked Wigner model. At lambda = 0 the fixed point is
/// read as tau* = eps^2 (the state-evolution limit), giving eps^2 - eps^4.
inline double matrix_mmse_wigner(double lambda, double epsilon, const SolverOptions& opt = {})
{
    const auto fp = solve_fixed_point_wigner(lambda, epsilon, opt);
    return std::max(0.0, epsilon * epsilon - fp.tau_star * fp.tau_star);
}

/// M-mmse for the spiked Wishart model, normalized by 1/(mn). Returns the
/// lambda -> 0+ limit eps at lambda = 0.
inline double matrix_mmse_wishart(double lambda, double epsilon, double alpha,
                                  const SolverOptions& opt = {})
{
    if (lambda == 0.0) {
        detail::require_sparsity(epsilon);
        detail::require_alpha(alpha);
        return epsilon;
    }
    const auto fp = solve_fixed_point_wishart(lambda, epsilon, alpha, opt);
    const double y = fp.y_star;
    return std::max(0.0, epsilon - y * y / (lambda * (1.0 + y)));
}

struct CurvePoint {
    double lambda = 0.0;
    double y_star = 0.0;
    double mmse = 0.0;
    std::string status = "ok";
};

struct MmseCurve {
    Model model = Model::wigner;
    double epsilon = 0.0;
    double alpha = 1.0;
    std::vector<CurvePoint> points;

    bool all_ok() const
    {
        for (const auto& p : points)
            if (p.status != "ok") return false;
        return true;
    }
};

/// Theory curve over a lambda grid. Solver failures are recorded per point.
inline MmseCurve mmse_curve(Model model, double epsilon, double alpha, const std::vector<double>& lambdas,
                            const SolverOptions& opt = {})
{
    MmseCurve curve{model, epsilon, alpha, {}};
    curve.points.reserve(lambdas.size());
    for (double lambda : lambdas) {
        CurvePoint p;
        p.lambda = lambda;
        try {
            if (model == Model::wigner) {
                p.y_star = solve_fixed_point_wigner(lambda, epsilon, opt).y_star;
                p.mmse = matrix_mmse_wigner(lambda, epsilon, opt);
            } else {
                p.y_star = lambda == 0.0 ? 0.0 : solve_fixed_point_wishart(lambda, epsilon, alpha, opt).y_star;
                p.mmse = matrix_mmse_wishart(lambda, epsilon, alpha, opt);
            }
        } catch (const std::exception& e) {
            p.status = std::string("error: ") + e.what();
            p.y_star = std::nan("");
            p.mmse = std::nan("");
        }
        curve.points.push_back(p);
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Potential

/// Which lambda-term the potential uses. `printed` carries eps^2 lambda^2 / 4,
/// which breaks d(phi)/d(lambda) = (eps^2 - m^2/lambda)/4; `corrected` uses
/// eps^2 lambda / 4 and satisfies both stationarity identities.
enum class PhiForm { corrected, printed };

struct PhiOptions {
    PhiForm form = PhiForm::corrected;
    bool monte_carlo = false;
    long samples = 1'000'000;
    std::uint64_t seed = 1;
};

/// phi(lambda, m) = m^2/4 + eps^2 lambda/4 - E log(1 - eps + eps exp W),
/// W = m sqrt(lambda) X0 - m sqrt(lambda)/2 + lambda^{1/4} m^{1/2} Z.
///
/// With s = m sqrt(lambda), W is the log-likelihood ratio of a scalar channel
/// at snr s, so log(1 - eps + eps e^W) = log(1 - eps) + softplus(W + logit eps).
inline double potential_phi(double lambda, double m, double epsilon, const PhiOptions& opt = {})
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require(m >= 0.0 && std::isfinite(m), "m must be finite and >= 0");

    const double s = m * std::sqrt(lambda);
    const double ell = detail::logit(epsilon);
    const double base = std::log1p(-epsilon);

    double expected_log = 0.0;
    if (s > 0.0) {
        const double k = std::sqrt(s);
        if (opt.monte_carlo) {
            detail::require(opt.samples > 0, "Monte Carlo potential needs samples > 0");
            auto eng = make_stream(opt.seed, Stream::potential_mc);
            NormalSampler normal(make_stream(opt.seed, Stream::noise));
            double acc = 0.0;
            for (long i = 0; i < opt.samples; ++i) {
                const double x = eng.uniform01() < epsilon ? 1.0 : 0.0;
                acc += quad::softplus(ell + s * (x - 0.5) + k * normal());
            }
            expected_log = base + acc / static_cast<double>(opt.samples);
        } else {
            const auto sp = [](double a) { return quad::softplus(a); };
            const double off = quad::logistic_expectation(sp, ell - 0.5 * s, k, {0.0, 1.0});
            const double on = quad::logistic_expectation(sp, ell + 0.5 * s, k, {0.0, 1.0});
            expected_log = base + (1.0 - epsilon) * off + epsilon * on;
        }
    }
    const double lambda_term = opt.form == PhiForm::corrected ? epsilon * epsilon * lambda / 4.0
                                                              : epsilon * epsilon * lambda * lambda / 4.0;
    return m * m / 4.0 + lambda_term - expected_log;
}

/// m*(lambda) = tau*(lambda) sqrt(lambda).
inline double stationary_m(double lambda, double epsilon, const SolverOptions& opt = {})
{
    return solve_fixed_point_wigner(lambda, epsilon, opt).tau_star * std::sqrt(lambda);
}

// ---------------------------------------------------------------------------
// Entropy identity

/// Binary entropy in nats; 0 at the endpoints.
inline double binary_entropy(double epsilon)
{
    detail::require(epsilon >= 0.0 && epsilon <= 1.0, "binary_entropy needs epsilon in [0,1]");
    if (epsilon == 0.0 || epsilon == 1.0) return 0.0;
    return -epsilon * std::log(epsilon) - (1.0 - epsilon) * std::log1p(-epsilon);
}

struct IntegralOptions {
    int segments = 12;         ///< geometric partition of (0, lambda_max]
    double rel_tol = 1e-10;    ///< per-segment Gauss-Kronrod tolerance
    unsigned max_depth = 10;
    double max_terminal_mmse = 1e-6;
};

struct IntegralReport {
    double epsilon = 0.0;
    double lambda_max = 0.0;
    double integral = 0.0;  ///< over [0, lambda_max]
    double tail = 0.0;      ///< estimate beyond lambda_max
    double target = 0.0;    ///< 4 h(eps)
    double gap = 0.0;       ///< |integral + tail - target| / target
    double terminal_mmse = 0.0;
};

/// Adaptive Gauss-Kronrod integral of the Wigner M-mmse curve, compared to 4 h(eps).
inline double integrate_mmse_wigner(double epsilon, double a, double b, const IntegralOptions& opt = {})
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    return GK::integrate([&](double l) { return matrix_mmse_wigner(l, epsilon); }, a, b,
                         opt.max_depth, opt.rel_tol);
}

inline IntegralReport integral_identity_check(double epsilon, double lambda_max,
                                              const IntegralOptions& opt = {})
{
    detail::require_sparsity(epsilon);
    detail::require(lambda_max > 0.0, "lambda_max must be > 0");
    detail::require(opt.segments >= 1, "need at least one segment");

    IntegralReport rep;
    rep.epsilon = epsilon;
    rep.lambda_max = lambda_max;
    rep.target = 4.0 * binary_entropy(epsilon);
    rep.terminal_mmse = matrix_mmse_wigner(lambda_max, epsilon);
    if (rep.terminal_mmse > opt.max_terminal_mmse)
        throw NumericalError("lambda_max too small: M-mmse(" + std::to_string(lambda_max) + ") = "
                                 + std::to_string(rep.terminal_mmse),
                             rep.terminal_mmse);

    // breakpoints: 0, then geometric from lambda_max * 1e-4 up to lambda_max
    std::vector<double> cuts{0.0};
    for (double c : log_grid(lambda_max * 1e-4, lambda_max, std::max(opt.segments, 2)))
        cuts.push_back(c);

    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        rep.integral += integrate_mmse_wigner(epsilon, cuts[i], cuts[i + 1], opt);

    // exponential tail: mmse(l) ~ mmse(L) exp(-r (l - L))
    if (rep.terminal_mmse > 0.0) {
        const double before = matrix_mmse_wigner(0.9 * lambda_max, epsilon);
        const double rate = std::log(before / rep.terminal_mmse) / (0.1 * lambda_max);
        rep.tail = rate > 0.0 ? rep.terminal_mmse / rate : rep.terminal_mmse * lambda_max;
    }
    rep.gap = std::abs(rep.integral + rep.tail - rep.target) / rep.target;
    return rep;
}

// ---------------------------------------------------------------------------
// Convexity of z -> S-mmse(eps, z)

struct ConvexityOptions {
    double z_lo = 1e-2;
    double z_hi = 1e3;
    int points = 2000;
    double slack = 1e-9;  ///< allowed negative change of successive secant slopes
    double lo = 0.005;
    double hi = 0.5;
};

struct ConvexityProbe {
    double epsilon = 0.0;
    bool convex = true;
    double worst = 0.0;   ///< most negative slope change found
    double worst_z = 0.0;
};

/// Secant slopes of z -> S-mmse(eps, z) on a log grid must be nondecreasing (up to slack).
inline ConvexityProbe probe_smmse_convexity(double epsilon, const ConvexityOptions& opt = {})
{
    const auto z = log_grid(opt.z_lo, opt.z_hi, opt.points);
    std::vector<double> m(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) m[i] = scalar_mmse(epsilon, z[i]);
    ConvexityProbe p{epsilon, true, 0.0, 0.0};
    for (std::size_t i = 1; i + 1 < z.size(); ++i) {
        const double d = (m[i + 1] - m[i]) / (z[i + 1] - z[i]) - (m[i] - m[i - 1]) / (z[i] - z[i - 1]);
        if (d < p.worst) {
            p.worst = d;
            p.worst_z = z[i];
        }
    }
    p.convex = p.worst >= -opt.slack;
    return p;
}

struct ConvexityThreshold {
    double estimate = 0.0;
    Bracket interval;
    std::vector<ConvexityProbe> trace;
};

/// Bisection for inf{eps : S-mmse(eps, .) convex}.
inline ConvexityThreshold smmse_convexity_threshold(double tol, const ConvexityOptions& opt = {})
{
    detail::require(tol > 0.0, "tolerance must be > 0");
    ConvexityThreshold out;
    auto probe = [&](double eps) {
        out.trace.push_back(probe_smmse_convexity(eps, opt));
        return out.trace.back().convex;
    };
    double lo = opt.lo, hi = opt.hi;
    if (probe(lo) || !probe(hi))
        throw NumericalError("convexity predicate does not change over the search interval");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid)) hi = mid;
        else lo = mid;
    }
    out.interval = {lo, hi};
    out.estimate = 0.5 * (lo + hi);
    return out;
}

/// Small-snr convexity boundary: S-mmse''(0) >= 0 iff skewness^2 <= 2,
/// i.e. eps >= (3 - sqrt 3) / 6 for Ber(eps).
inline double smmse_small_snr_convexity_bound()
{
    return (3.0 - std::sqrt(3.0)) / 6.0;
}

} // namespace spca
