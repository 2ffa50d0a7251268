#pragma once

// State evolution for Bayes-optimal AMP and the scalar fixed-point equations
//
//   Wigner:   y = lambda * (eps - S-mmse(eps, y))
//   Wishart:  y = lambda * (eps - S-mmse(eps, lambda * alpha * y / (1 + y)))
//
// together with fixed-point counting and the uniqueness-threshold estimate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spca/error.hpp"
#include "spca/scalar_channel.hpp"

namespace spca {

struct SEStateWigner {
    int t = 0;
    double mu = 0.0;
    double tau = 0.0;
};

/// One step of the rectangular recursion. q_v is the v-side overlap
/// <v, vhat>/n entering the step, q_u the u-side overlap it produces.
struct SEStateWishart {
    int t = 0;
    double q_v = 0.0;
    double q_u = 0.0;
    double mu_u = 0.0;
    double tau_u = 0.0;
    double mu_v = 0.0;
    double tau_v = 0.0;
};

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

struct FixedPointResult {
    double y_star = 0.0;
    double tau_star = 0.0;
    double residual = 0.0;
    int iterations = 0;
    /// Set only when SolverOptions::uniqueness_grid > 0.
    std::optional<bool> unique;
    /// Interval around y_star; spans all sign changes when the scan ran.
    Bracket bracket;
};

struct FixedPointCount {
    int count = 0;
    std::vector<Bracket> brackets;
    std::vector<double> roots;
};

struct SolverOptions {
    double tol = 1e-12;
    int max_iterations = 100000;
    /// Grid size for the optional uniqueness scan (0 disables it).
    int uniqueness_grid = 0;
};

namespace detail {

inline void require_lambda(double lambda)
{
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and >= 0");
}

inline void require_alpha(double alpha)
{
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be finite and > 0");
}

/// Right-hand side map y -> lambda * overlap(eps, snr(y)).
struct FixedPointMap {
    double lambda;
    double epsilon;
    std::function<double(double)> snr_of_y;

    double operator()(double y) const { return lambda * overlap(epsilon, snr_of_y(y)); }
    double residual(double y) const { return y - (*this)(y); }
};

inline FixedPointMap wigner_map(double lambda, double epsilon)
{
    return {lambda, epsilon, [](double y) { return y; }};
}

inline FixedPointMap wishart_map(double lambda, double epsilon, double alpha)
{
    return {lambda, epsilon, [=](double y) { return lambda * alpha * y / (1.0 + y); }};
}

/// Bisection for a sign change of r on [lo, hi] with r(lo) < 0 <= r(hi).
inline double bisect(const FixedPointMap& map, double lo, double hi, double xtol)
{
    for (int i = 0; i < 200 && hi - lo > xtol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (map.residual(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return std::abs(map.residual(lo)) <= std::abs(map.residual(hi)) ? lo : hi;
}

/// Uniform scan of r(y) over [0, lambda*eps]; counts transitions between
/// r < 0 and r >= 0 and refines each by bisection.
inline FixedPointCount scan_fixed_points(const FixedPointMap& map, int grid_size)
{
    FixedPointCount out;
    const double top = map.lambda * map.epsilon;
    if (top == 0.0) {
        out.count = 1;
        out.brackets.push_back({0.0, 0.0});
        out.roots.push_back(0.0);
        return out;
    }
    const double h = top / grid_size;
    double prev_y = 0.0;
    bool prev_neg = map.residual(0.0) < 0.0;
    for (int i = 1; i <= grid_size; ++i) {
        const double y = (i == grid_size) ? top : h * i;
        const bool neg = map.residual(y) < 0.0;
        if (neg != prev_neg) {
            out.brackets.push_back({prev_y, y});
            // bisect() expects r(lo) < 0; flip orientation for downward crossings
            double lo = prev_y, hi = y;
            if (!prev_neg) std::swap(lo, hi);
            double a = lo, b = hi;
            for (int k = 0; k < 200 && std::abs(b - a) > 1e-15 * std::max(1.0, top); ++k) {
                const double mid = 0.5 * (a + b);
                if (mid == a || mid == b) break;
                if (map.residual(mid) < 0.0) a = mid;
                else b = mid;
            }
            out.roots.push_back(0.5 * (a + b));
        }
        prev_neg = neg;
        prev_y = y;
    }
    out.count = static_cast<int>(out.brackets.size());
    return out;
}

/// Smallest nonnegative root of r(y) = y - map(y).
///
/// Phase 1 runs the monotone iteration y <- map(y) from y0 = lambda*eps^2
/// (damped by 0.5 if successive steps change sign). Every iterate is a lower
/// bound of the smallest root. Phase 2 brackets the root just above the last
/// iterate and polishes it by bisection. If phase 1 stalls (contraction
/// factor above 0.999) the root is located by a grid scan instead.
inline FixedPointResult solve_smallest_root_impl(const FixedPointMap& map, const SolverOptions& opt);

inline FixedPointResult solve_smallest_root(const FixedPointMap& map, const SolverOptions& opt)
{
    auto res = solve_smallest_root_impl(map, opt);
    if (opt.uniqueness_grid > 0) {
        const auto scan = scan_fixed_points(map, opt.uniqueness_grid);
        res.unique = scan.count == 1;
        if (!scan.brackets.empty())
            res.bracket = {std::min(res.bracket.lo, scan.brackets.front().lo),
                           std::max(res.bracket.hi, scan.brackets.back().hi)};
    }
    return res;
}

inline FixedPointResult solve_smallest_root_impl(const FixedPointMap& map, const SolverOptions& opt)
{
    FixedPointResult res;
    const double top = map.lambda * map.epsilon;
    if (map.lambda == 0.0) {
        res.y_star = 0.0;
        res.residual = 0.0;
        res.bracket = {0.0, 0.0};
        return res;
    }

    double y = map.lambda * map.epsilon * map.epsilon;
    double prev_step = 0.0;
    double damping = 1.0;
    bool stalled = false;
    int it = 0;
    double r = map.residual(y);
    for (; it < opt.max_iterations; ++it) {
        if (std::abs(r) <= opt.tol) break;
        const double step = -r;
        if (prev_step != 0.0 && step * prev_step < 0.0) damping = 0.5;
        if (prev_step != 0.0 && std::abs(step) > 0.999 * std::abs(prev_step) && it > 50) {
            stalled = true;
            break;
        }
        prev_step = step;
        y = std::clamp(y + damping * step, 0.0, top);
        r = map.residual(y);
    }
    res.iterations = it;

    if (stalled || it == opt.max_iterations) {
        const auto scan = scan_fixed_points(map, 20000);
        if (scan.roots.empty())
            throw NumericalError("fixed-point solver: no sign change found", std::abs(r), it);
        const Bracket b = scan.brackets.front();
        y = bisect(map, b.lo, b.hi, 1e-15 * std::max(1.0, top));
        r = map.residual(y);
        if (std::abs(r) > opt.tol && std::abs(r) > 1e-13 * std::max(1.0, top))
            throw NumericalError("fixed-point solver did not converge", std::abs(r), it);
        res.y_star = y;
        res.residual = std::abs(r);
        res.bracket = b;
        return res;
    }

    // Polish: the iterate sits just below the root when r < 0.
    double lo = y, hi = y;
    if (r < 0.0) {
        double h = std::max(2.0 * std::abs(r), 1e-15 * std::max(1.0, top));
        hi = std::min(y + h, top);
        while (map.residual(hi) < 0.0 && hi < top) {
            lo = hi;
            h *= 2.0;
            hi = std::min(y + h, top);
        }
    } else {
        double h = std::max(2.0 * std::abs(r), 1e-15 * std::max(1.0, top));
        lo = std::max(y - h, 0.0);
        while (map.residual(lo) >= 0.0 && lo > 0.0) {
            hi = lo;
            h *= 2.0;
            lo = std::max(y - h, 0.0);
        }
    }
    if (map.residual(lo) < 0.0 && map.residual(hi) >= 0.0) {
        const double polished = bisect(map, lo, hi, 0.0);
        if (std::abs(map.residual(polished)) <= std::abs(r)) y = polished;
    }
    res.y_star = y;
    res.residual = std::abs(map.residual(y));
    res.bracket = {lo, hi};
    if (res.residual > opt.tol && res.residual > 1e-13 * std::max(1.0, top))
        throw NumericalError("fixed-point solver residual above tolerance", res.residual, it);
    return res;
}

} // namespace detail

/// (mu_t, tau_t) -> (mu_{t+1}, tau_{t+1}); the state (0,0) denotes the
/// information-free start whose denoiser is the prior mean eps.
inline SEStateWigner se_step_wigner(const SEStateWigner& s, double lambda, double epsilon)
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require(s.mu >= 0.0 && s.tau >= 0.0, "state evolution pair must be nonnegative");
    if (s.tau == 0.0 && s.mu > 0.0) throw DomainError("state evolution: tau = 0 with mu > 0");
    const double snr = (s.mu == 0.0) ? 0.0 : s.mu * s.mu / s.tau;
    SEStateWigner next;
    next.t = s.t + 1;
    next.tau = overlap(epsilon, snr);
    next.mu = std::sqrt(lambda) * next.tau;
    return next;
}

/// SE trajectory from (mu_0, tau_0) = (0, 0) until |tau_{t+1} - tau_t| < tol or t_max steps.
inline std::vector<SEStateWigner> se_trajectory_wigner(double lambda, double epsilon, int t_max,
                                                       double tol = 0.0)
{
    std::vector<SEStateWigner> traj{SEStateWigner{}};
    for (int t = 0; t < t_max; ++t) {
        traj.push_back(se_step_wigner(traj.back(), lambda, epsilon));
        if (t > 0 && std::abs(traj.back().tau - traj[traj.size() - 2].tau) < tol) break;
    }
    return traj;
}

/// Smallest nonnegative solution of y = lambda (eps - S-mmse(eps, y)).
inline FixedPointResult solve_fixed_point_wigner(double lambda, double epsilon,
                                                 const SolverOptions& opt = {})
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require(opt.tol > 0.0, "tolerance must be > 0");
    auto res = detail::solve_smallest_root(detail::wigner_map(lambda, epsilon), opt);
    res.tau_star = (lambda == 0.0) ? epsilon * epsilon : res.y_star / lambda;
    return res;
}

inline FixedPointCount count_fixed_points(double lambda, double epsilon, int grid_size = 1000)
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require(grid_size >= 1000, "grid_size must be >= 1000");
    return detail::scan_fixed_points(detail::wigner_map(lambda, epsilon), grid_size);
}

/// Smallest nonnegative solution of y = lambda (eps - S-mmse(eps, lambda alpha y / (1+y))).
/// tau_star holds q_v = y/lambda (eps^2 at lambda = 0).
inline FixedPointResult solve_fixed_point_wishart(double lambda, double epsilon, double alpha,
                                                  const SolverOptions& opt = {})
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require_alpha(alpha);
    detail::require(opt.tol > 0.0, "tolerance must be > 0");
    auto res = detail::solve_smallest_root(detail::wishart_map(lambda, epsilon, alpha), opt);
    res.tau_star = (lambda == 0.0) ? epsilon * epsilon : res.y_star / lambda;
    return res;
}

inline FixedPointCount count_fixed_points_wishart(double lambda, double epsilon, double alpha,
                                                  int grid_size = 1000)
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require_alpha(alpha);
    detail::require(grid_size >= 1000, "grid_size must be >= 1000");
    return detail::scan_fixed_points(detail::wishart_map(lambda, epsilon, alpha), grid_size);
}

/// Fills the derived channel parameters of a Wishart state from q_v.
inline SEStateWishart wishart_state(int t, double q_v, double lambda, double alpha)
{
    SEStateWishart s;
    s.t = t;
    s.q_v = q_v;
    s.q_u = lambda * q_v / (1.0 + lambda * q_v);
    s.mu_u = std::sqrt(lambda / alpha) * q_v;
    s.tau_u = q_v / alpha;
    s.mu_v = std::sqrt(lambda * alpha) * s.q_u;
    s.tau_v = s.q_u;
    return s;
}

inline SEStateWishart se_initial_wishart(double lambda, double epsilon, double alpha)
{
    return wishart_state(0, epsilon * epsilon, lambda, alpha);
}

/// q_v(t) -> q_u(t) -> q_v(t+1).
inline SEStateWishart se_step_wishart(const SEStateWishart& s, double lambda, double epsilon,
                                      double alpha)
{
    detail::require_lambda(lambda);
    detail::require_sparsity(epsilon);
    detail::require_alpha(alpha);
    const double q_u = lambda * s.q_v / (1.0 + lambda * s.q_v);
    const double q_v_next = overlap(epsilon, lambda * alpha * q_u);
    return wishart_state(s.t + 1, q_v_next, lambda, alpha);
}

inline std::vector<SEStateWishart> se_trajectory_wishart(double lambda, double epsilon, double alpha,
                                                         int t_max, double tol = 0.0)
{
    std::vector<SEStateWishart> traj{se_initial_wishart(lambda, epsilon, alpha)};
    for (int t = 0; t < t_max; ++t) {
        traj.push_back(se_step_wishart(traj.back(), lambda, epsilon, alpha));
        if (std::abs(traj.back().q_v - traj[traj.size() - 2].q_v) < tol) break;
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Uniqueness threshold
//
// y solves y = lambda * overlap(eps, y) iff lambda = g(y) := y / overlap(eps, y).
// g(0) = 0 and g -> inf, so every level lambda is crossed an odd number of
// times, and some lambda has several fixed points iff g decreases somewhere.
// A decreasing run of g from a local max M to a local min m makes every
// lambda in (m, M) a multiple-root level. These windows are extremely narrow
// near the threshold (relative width < 1e-6), so the predicate below asks
// whether any window meets the lambda range of the grid, not just its nodes.

struct MultiplicityWindow {
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double y_lo = 0.0;
    double y_hi = 0.0;
};

struct WindowScanOptions {
    double fine_step = 5e-4;   ///< uniform y spacing on [0, fine_limit]
    double fine_limit = 40.0;
    double coarse_ratio = 1.001; ///< geometric y spacing beyond fine_limit
};

/// All lambda windows with more than one Wigner fixed point and y <= y_max.
inline std::vector<MultiplicityWindow> multiplicity_windows_wigner(double epsilon, double y_max,
                                                                   const WindowScanOptions& opt = {})
{
    detail::require_sparsity(epsilon);
    std::vector<MultiplicityWindow> out;
    auto g = [&](double y) { return y / overlap(epsilon, y); };

    double prev_y = 0.0, prev_g = 0.0;
    bool descending = false;
    MultiplicityWindow cur;
    auto visit = [&](double y) {
        const double gy = g(y);
        if (gy < prev_g) {
            if (!descending) {
                descending = true;
                cur.lambda_hi = prev_g;
                cur.y_lo = prev_y;
            }
        } else if (descending) {
            descending = false;
            cur.lambda_lo = prev_g;
            cur.y_hi = prev_y;
            out.push_back(cur);
        }
        prev_y = y;
        prev_g = gy;
    };

    const double fine_end = std::min(opt.fine_limit, y_max);
    const auto fine_points = static_cast<long>(std::ceil(fine_end / opt.fine_step));
    for (long i = 1; i <= fine_points; ++i) visit(fine_end * static_cast<double>(i) / fine_points);
    for (double y = fine_end * opt.coarse_ratio; y < y_max * opt.coarse_ratio; y *= opt.coarse_ratio)
        visit(y);
    if (descending) {
        cur.lambda_lo = prev_g;
        cur.y_hi = prev_y;
        out.push_back(cur);
    }
    return out;
}

struct ThresholdProbe {
    double epsilon = 0.0;
    bool unique = false;
    double witness_lambda = 0.0; ///< a lambda with several fixed points, if any
    int witness_count = 1;       ///< count_fixed_points at witness_lambda
    std::vector<MultiplicityWindow> windows;
};

/// "count_fixed_points == 1 for every lambda in [min(grid), max(grid)]".
inline ThresholdProbe probe_uniqueness(double epsilon, const std::vector<double>& lambda_grid,
                                       const WindowScanOptions& opt = {})
{
    detail::require(!lambda_grid.empty(), "lambda grid must be nonempty");
    const auto [mn, mx] = std::minmax_element(lambda_grid.begin(), lambda_grid.end());
    ThresholdProbe p;
    p.epsilon = epsilon;
    p.unique = true;
    for (const auto& w : multiplicity_windows_wigner(epsilon, *mx * epsilon, opt)) {
        if (w.lambda_hi <= *mn || w.lambda_lo >= *mx) continue;
        p.windows.push_back(w);
        if (p.unique) {
            p.unique = false;
            p.witness_lambda = std::clamp(std::sqrt(w.lambda_lo * w.lambda_hi), *mn, *mx);
        }
    }
    if (!p.unique) {
        // confirm with the direct residual scan, refined enough to resolve the window
        const auto& w = p.windows.front();
        const double width = std::max(w.y_hi - w.y_lo, 1e-6);
        const int grid = static_cast<int>(std::clamp(4.0 * p.witness_lambda * epsilon / width, 1000.0, 2e6));
        p.witness_count = count_fixed_points(p.witness_lambda, epsilon, grid).count;
    }
    return p;
}

struct ThresholdEstimate {
    double estimate = 0.0;
    Bracket interval;
    std::vector<ThresholdProbe> trace;
};

struct ThresholdOptions {
    double lo = 0.005;
    double hi = 0.5;
    double tol = 1e-3;
    int monotonicity_checks = 6;
    WindowScanOptions scan;
};

class NonMonotonePredicate : public NumericalError {
public:
    NonMonotonePredicate(const std::string& what, std::vector<ThresholdProbe> trace)
        : NumericalError(what), trace_(std::move(trace)) {}
    const std::vector<ThresholdProbe>& trace() const noexcept { return trace_; }

private:
    std::vector<ThresholdProbe> trace_;
};

/// Log-spaced grid of `points` values over [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int points)
{
    std::vector<double> g(static_cast<std::size_t>(points));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

/// Default grid for the threshold estimate. Below eps ~ 0.01 the
/// multiple-root windows sit at lambda > 1e3, hence the upper end 1e5.
inline std::vector<double> default_threshold_grid()
{
    return log_grid(1e-2, 1e5, 401);
}

/// Bisection over epsilon of the uniqueness predicate.
inline ThresholdEstimate estimate_epsilon_star(const std::vector<double>& lambda_grid,
                                               const ThresholdOptions& opt = {})
{
    detail::require(lambda_grid.size() >= 200, "lambda grid needs at least 200 points");
    const auto [mn, mx] = std::minmax_element(lambda_grid.begin(), lambda_grid.end());
    detail::require(*mn <= 1e-2 && *mx >= 1e3, "lambda grid must cover [1e-2, 1e3]");
    detail::require(opt.tol > 0.0 && opt.lo < opt.hi, "invalid bisection interval");

    ThresholdEstimate est;
    auto probe = [&](double eps) {
        est.trace.push_back(probe_uniqueness(eps, lambda_grid, opt.scan));
        return est.trace.back().unique;
    };
    auto fail = [&](const std::string& why) {
        throw NonMonotonePredicate("uniqueness predicate is not monotone: " + why, est.trace);
    };

    double lo = opt.lo, hi = opt.hi;
    if (probe(lo)) fail("holds at lower end eps=" + std::to_string(lo));
    if (!probe(hi)) fail("fails at upper end eps=" + std::to_string(hi));
    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid)) hi = mid;
        else lo = mid;
    }
    for (int k = 1; k <= opt.monotonicity_checks; ++k) {
        const double eps = hi + (opt.hi - hi) * k / (opt.monotonicity_checks + 1);
        if (!probe(eps))
            fail("fails at eps=" + std::to_string(eps) + " above estimate " + std::to_string(hi));
    }
    est.interval = {lo, hi};
    est.estimate = 0.5 * (lo + hi);
    return est;
}

} // namespace spca
