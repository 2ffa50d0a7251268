#pragma once

// Scalar denoising channels observed as mu * X0 + sqrt(tau) * Z.
//
// X0 ~ Ber(epsilon) for the sparse side, U ~ N(0,1) for the dense side of the
// rectangular model. All functions are pure.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spca/error.hpp"
#include "spca/quadrature.hpp"

namespace spca {

struct BernoulliChannel {
    double epsilon = 0.5;
    double mu = 0.0;
    double tau = 0.0;

    /// mu^2 / tau; zero for the "no observation" channel, +inf when tau = 0 < mu.
    double snr() const
    {
        if (mu == 0.0) return 0.0;
        if (tau == 0.0) return std::numeric_limits<double>::infinity();
        return mu * mu / tau;
    }
};

struct GaussianChannel {
    double mu = 0.0;
    double tau = 1.0;
};

namespace detail {

inline void validate(const BernoulliChannel& ch)
{
    require_sparsity(ch.epsilon);
    require(ch.mu >= 0.0 && std::isfinite(ch.mu), "channel scale mu must be finite and >= 0");
    require(ch.tau >= 0.0 && std::isfinite(ch.tau), "channel variance tau must be finite and >= 0");
}

inline void validate_snr(double snr)
{
    require(snr >= 0.0, "snr must be >= 0, got " + std::to_string(snr));
}

inline double logit(double epsilon)
{
    return std::log(epsilon) - std::log1p(-epsilon);
}

/// Log posterior odds of X0 = 1 given observation y (requires tau > 0).
inline double log_odds(const BernoulliChannel& ch, double y)
{
    return logit(ch.epsilon) + ch.mu * (y - 0.5 * ch.mu) / ch.tau;
}

} // namespace detail

/// E[X0 | mu X0 + sqrt(tau) Z = y].
inline double posterior_mean(const BernoulliChannel& ch, double y)
{
    detail::validate(ch);
    if (ch.mu == 0.0) return ch.epsilon;
    if (ch.tau == 0.0) throw DomainError("noiseless Bernoulli channel (tau = 0, mu > 0) is not supported");
    return quad::logistic(detail::log_odds(ch, y));
}

/// d/dy posterior_mean = (mu/tau) f (1 - f).
inline double posterior_mean_deriv(const BernoulliChannel& ch, double y)
{
    detail::validate(ch);
    if (ch.tau == 0.0) throw DomainError("posterior_mean_deriv requires tau > 0");
    if (ch.mu == 0.0) return 0.0;
    return ch.mu / ch.tau * quad::logistic_variance(detail::log_odds(ch, y));
}

/// E[U | mu U + sqrt(tau) Z = y] for U ~ N(0,1): linear shrinkage.
inline double gaussian_posterior_mean(const GaussianChannel& ch, double y)
{
    detail::require(std::isfinite(ch.mu) && ch.tau >= 0.0 && std::isfinite(ch.tau),
                    "Gaussian channel needs finite mu and tau >= 0");
    const double denom = ch.mu * ch.mu + ch.tau;
    if (!(denom > 0.0)) throw DomainError("Gaussian channel with mu = tau = 0 has no posterior");
    return ch.mu * y / denom;
}

/// Slope of gaussian_posterior_mean (constant in y).
inline double gaussian_posterior_mean_deriv(const GaussianChannel& ch)
{
    const double denom = ch.mu * ch.mu + ch.tau;
    if (!(denom > 0.0)) throw DomainError("Gaussian channel with mu = tau = 0 has no posterior");
    return ch.mu / denom;
}

/// S-mmse of X0 ~ Ber(epsilon) observed as sqrt(snr) X0 + N.
///
/// Evaluated as E[f(1-f)] (the posterior variance, equal to epsilon - E[f^2])
/// split over X0 in {0,1}; each component is a one-dimensional Gaussian
/// integral of a logistic-type function.
inline double scalar_mmse(double epsilon, double snr)
{
    detail::require_sparsity(epsilon);
    detail::validate_snr(snr);
    const double prior_var = epsilon * (1.0 - epsilon);
    if (snr == 0.0) return prior_var;
    if (std::isinf(snr)) return 0.0;

    const double ell = detail::logit(epsilon);
    const double k = std::sqrt(snr);
    const auto var = [](double a) { return quad::logistic_variance(a); };
    const double off = quad::logistic_expectation(var, ell - 0.5 * snr, k, {});
    const double on = quad::logistic_expectation(var, ell + 0.5 * snr, k, {});
    const double m = (1.0 - epsilon) * off + epsilon * on;
    return std::clamp(m, 0.0, prior_var);
}

/// E[X0 f(Y)] = E[f(Y)^2] = epsilon - S-mmse(epsilon, snr).
inline double overlap(double epsilon, double snr)
{
    return epsilon - scalar_mmse(epsilon, snr);
}

/// E[X0 f(mu X0 + sqrt(tau) Z)] by direct quadrature of the X0 = 1 component.
inline double expected_signal_overlap(const BernoulliChannel& ch)
{
    detail::validate(ch);
    const double snr = ch.snr();
    if (snr == 0.0) return ch.epsilon * ch.epsilon;
    if (std::isinf(snr)) return ch.epsilon;
    const auto sig = [](double a) { return quad::logistic(a); };
    const double ell = detail::logit(ch.epsilon);
    return ch.epsilon * quad::logistic_expectation(sig, ell + 0.5 * snr, std::sqrt(snr), {1.0, 0.0});
}

/// E[f(mu X0 + sqrt(tau) Z)^2] by direct quadrature of both components.
inline double expected_squared_estimate(const BernoulliChannel& ch)
{
    detail::validate(ch);
    const double snr = ch.snr();
    if (snr == 0.0) return ch.epsilon * ch.epsilon;
    if (std::isinf(snr)) return ch.epsilon;
    const auto sq = [](double a) {
        const double f = quad::logistic(a);
        return f * f;
    };
    const double ell = detail::logit(ch.epsilon);
    const double k = std::sqrt(snr);
    return (1.0 - ch.epsilon) * quad::logistic_expectation(sq, ell - 0.5 * snr, k, {1.0, 0.0})
         + ch.epsilon * quad::logistic_expectation(sq, ell + 0.5 * snr, k, {1.0, 0.0});
}

} // namespace spca
