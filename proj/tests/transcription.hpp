#pragma once

// Straight-line AMP recursions, one scalar at a time, for small instances.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"

namespace oracle {

inline std::vector<double> to_std(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

struct OracleTrace {
    std::vector<std::vector<double>> iterates; // pre-denoising, index t = 1..T
    std::vector<double> b, d, mse;
    std::vector<double> final_v, final_u;
};

// Symmetric recursion written out entry by entry.
template <class Instance>
OracleTrace wigner_transcription(const Instance& inst, int steps)
{
    const long n = inst.n;
    const double eps = inst.epsilon, lambda = inst.lambda;
    const auto tau = wigner_se(lambda, eps, steps + 1);
    std::vector<double> xh(n, eps), xprev(n, 0.0), x(n);
    double b = 0.0;
    OracleTrace tr;
    for (int t = 0; t < steps; ++t) {
        for (long i = 0; i < n; ++i) {
            double acc = 0.0;
            for (long j = 0; j < n; ++j) acc += inst.Y(i, j) / std::sqrt(double(n)) * xh[j];
            x[i] = acc - b * xprev[i];
        }
        const double mu = std::sqrt(lambda) * tau[t + 1], tv = tau[t + 1];
        std::vector<double> next(n);
        double db = 0.0;
        for (long i = 0; i < n; ++i) {
            next[i] = mu == 0.0 ? eps : posterior_logistic(eps, mu, tv, x[i]);
            db += mu == 0.0 ? 0.0 : mu / tv * next[i] * (1.0 - next[i]);
        }
        b = db / n;
        xprev = xh;
        xh = next;
        tr.iterates.push_back(x);
        tr.b.push_back(b);
        tr.mse.push_back(dense_rank_one_mse(xh, xh, to_std(inst.x), to_std(inst.x)));
    }
    tr.final_v = xh;
    return tr;
}

// Rectangular recursion: u-update, g-denoise, v-update, f-denoise.
template <class Instance>
OracleTrace wishart_transcription(const Instance& inst, int steps)
{
    const long m = inst.m, n = inst.n;
    const double eps = inst.epsilon, lambda = inst.lambda, alpha = double(m) / double(n);
    std::vector<double> qv{eps * eps}, qu;
    for (int t = 0; t <= steps; ++t) {
        qu.push_back(lambda * qv.back() / (1.0 + lambda * qv.back()));
        qv.push_back(eps - smmse(eps, lambda * alpha * qu.back()));
    }
    std::vector<double> vh(n, eps), uh(m, 0.0), u(m), v(n);
    double b = 0.0;
    OracleTrace tr;
    const double s = 1.0 / std::sqrt(double(m));
    for (int t = 0; t < steps; ++t) {
        const double mu_u = std::sqrt(lambda / alpha) * qv[t], tau_u = qv[t] / alpha;
        for (long i = 0; i < m; ++i) {
            double acc = 0.0;
            for (long j = 0; j < n; ++j) acc += inst.Y(i, j) * s * vh[j];
            u[i] = acc - b * uh[i];
        }
        const double d = mu_u / (mu_u * mu_u + tau_u);
        for (long i = 0; i < m; ++i) uh[i] = mu_u * u[i] / (mu_u * mu_u + tau_u);
        for (long j = 0; j < n; ++j) {
            double acc = 0.0;
            for (long i = 0; i < m; ++i) acc += inst.Y(i, j) * s * uh[i];
            v[j] = acc - d * vh[j];
        }
        const double mu_v = std::sqrt(lambda * alpha) * qu[t], tau_v = qu[t];
        double db = 0.0;
        for (long j = 0; j < n; ++j) {
            vh[j] = posterior_logistic(eps, mu_v, tau_v, v[j]);
            db += mu_v / tau_v * vh[j] * (1.0 - vh[j]);
        }
        b = db / m;
        tr.iterates.push_back(v);
        tr.b.push_back(b);
        tr.d.push_back(d);
        tr.mse.push_back(dense_rank_one_mse(uh, vh, to_std(inst.u), to_std(inst.v)));
    }
    tr.final_u = uh;
    tr.final_v = vh;
    return tr;
}

} // namespace oracle
