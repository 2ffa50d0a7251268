#pragma once

// Reference computations written without the library's quadrature, solvers or
// denoisers. Slow and plain by design; used only to check the library.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double phi(double z)
{
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// eps phi((y-mu)/sd) / (eps phi((y-mu)/sd) + (1-eps) phi(y/sd)), sd = sqrt(tau).
inline double density_ratio_posterior(double eps, double mu, double tau, double y)
{
    const double sd = std::sqrt(tau);
    const double a = eps * phi((y - mu) / sd);
    const double b = (1.0 - eps) * phi(y / sd);
    return a / (a + b);
}

/// Same posterior written as a logistic in the log-likelihood ratio, stable for
/// large arguments: 1 / (1 + ((1-eps)/eps) exp(mu^2/(2 tau) - mu y / tau)).
inline double posterior_logistic(double eps, double mu, double tau, double y)
{
    const double e = std::log((1.0 - eps) / eps) + mu * mu / (2.0 * tau) - mu * y / tau;
    return e > 0 ? std::exp(-e) / (1.0 + std::exp(-e)) : 1.0 / (1.0 + std::exp(e));
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
           + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

/// Adaptive Simpson on [a, b], started from `pieces` equal panels.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int pieces = 64, int depth = 40)
{
    double total = 0.0;
    const double h = (b - a) / pieces;
    for (int k = 0; k < pieces; ++k) {
        const double lo = a + k * h, hi = lo + h;
        const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
        const double whole = h / 6.0 * (flo + 4.0 * fm + fhi);
        total += detail::simpson_step(f, lo, hi, flo, fm, fhi, whole, tol / pieces, depth);
    }
    return total;
}

/// E[(X0 - E[X0|Y])^2], Y = sqrt(snr) X0 + Z, X0 ~ Ber(eps), by adaptive Simpson
/// on each component over z in [-12, 12].
inline double smmse(double eps, double snr)
{
    if (snr == 0.0) return eps * (1.0 - eps);
    const double s = std::sqrt(snr);
    auto f = [&](double y) { return posterior_logistic(eps, s, 1.0, y); };
    const double zero = adaptive_simpson([&](double z) { const double v = f(z); return phi(z) * v * v; },
                                         -12.0, 12.0, 1e-15);
    const double one = adaptive_simpson([&](double z) { const double v = 1.0 - f(s + z); return phi(z) * v * v; },
                                        -12.0, 12.0, 1e-15);
    return (1.0 - eps) * zero + eps * one;
}

/// Smallest root of r on [lo, hi] from a uniform grid scan plus bisection.
inline std::vector<double> grid_roots(const std::function<double(double)>& r, double lo, double hi, int points)
{
    std::vector<double> roots;
    double x0 = lo, r0 = r(lo);
    for (int i = 1; i <= points; ++i) {
        const double x1 = lo + (hi - lo) * i / points;
        const double r1 = r(x1);
        if (r0 == 0.0) roots.push_back(x0);
        else if ((r0 < 0.0) != (r1 < 0.0) && r1 != 0.0) {
            double a = x0, b = x1, ra = r0;
            for (int k = 0; k < 200 && b - a > 1e-15 * std::max(1.0, b); ++k) {
                const double m = 0.5 * (a + b);
                const double rm = r(m);
                if ((rm < 0.0) == (ra < 0.0)) {
                    a = m;
                    ra = rm;
                } else {
                    b = m;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        x0 = x1;
        r0 = r1;
    }
    if (r0 == 0.0) roots.push_back(x0);
    return roots;
}

/// ||xhat xhat^T - x x^T||_F^2 / (rows * cols), materialized.
inline double dense_rank_one_mse(const std::vector<double>& ah, const std::vector<double>& bh,
                                 const std::vector<double>& a, const std::vector<double>& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = ah[i] * bh[j] - a[i] * b[j];
            acc += d * d;
        }
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

/// tau_{t+1} = eps - smmse(eps, lambda tau_t), tau_0 = 0.
inline std::vector<double> wigner_se(double lambda, double eps, int steps)
{
    std::vector<double> tau{0.0};
    for (int t = 0; t < steps; ++t) tau.push_back(eps - smmse(eps, lambda * tau.back()));
    return tau;
}

} // namespace oracle
