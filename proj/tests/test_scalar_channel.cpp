#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spca/scalar_channel.hpp"

using namespace spca;

TEST(PosteriorMean, SymmetryPoint)
{
    EXPECT_DOUBLE_EQ(posterior_mean({0.5, 2.0, 1.0}, 1.0), 0.5);
}

TEST(PosteriorMean, NoInformationGivesPriorMean)
{
    for (double y : {-3.0, 0.0, 0.7, 50.0}) {
        EXPECT_EQ(posterior_mean({0.3, 0.0, 0.0}, y), 0.3);
        EXPECT_EQ(posterior_mean({0.3, 0.0, 2.5}, y), 0.3);
    }
}

TEST(PosteriorMean, MatchesDensityRatio)
{
    const double ref = oracle::density_ratio_posterior(0.3, 1.5, 0.6, 0.9);
    EXPECT_NEAR(posterior_mean({0.3, 1.5, 0.6}, 0.9), ref, 1e-12);

    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ue(0.01, 0.99), um(0.0, 3.0), ut(0.2, 3.0), uy(-3.0, 5.0);
    for (int k = 0; k < 1000; ++k) {
        const double e = ue(gen), mu = um(gen), tau = ut(gen), y = uy(gen);
        EXPECT_NEAR(posterior_mean({e, mu, tau}, y), oracle::density_ratio_posterior(e, mu, tau, y), 1e-12);
    }
}

TEST(PosteriorMean, StableAtHugeExponents)
{
    // exponent magnitudes around 1e4 and beyond
    const BernoulliChannel ch{0.3, 100.0, 1.0};
    EXPECT_TRUE(std::isfinite(posterior_mean(ch, -100.0)));
    EXPECT_TRUE(std::isfinite(posterior_mean(ch, 200.0)));
    EXPECT_GE(posterior_mean(ch, -100.0), 0.0);
    EXPECT_LE(posterior_mean(ch, 200.0), 1.0);
    EXPECT_NEAR(posterior_mean(ch, 200.0), 1.0, 1e-15);
    EXPECT_NEAR(posterior_mean({0.3, 1e4, 1.0}, 0.0), 0.0, 1e-300);
}

TEST(PosteriorMean, Errors)
{
    EXPECT_THROW(posterior_mean({0.0, 1.0, 1.0}, 0.0), ParameterError);
    EXPECT_THROW(posterior_mean({1.0, 1.0, 1.0}, 0.0), ParameterError);
    EXPECT_THROW(posterior_mean({std::nan(""), 1.0, 1.0}, 0.0), ParameterError);
    EXPECT_THROW(posterior_mean({0.3, -1.0, 1.0}, 0.0), ParameterError);
    EXPECT_THROW(posterior_mean({0.3, 1.0, -1.0}, 0.0), ParameterError);
    EXPECT_THROW(posterior_mean({0.3, 1.0, 0.0}, 0.5), DomainError);
}

TEST(PosteriorMeanDeriv, Examples)
{
    EXPECT_DOUBLE_EQ(posterior_mean_deriv({0.5, 2.0, 1.0}, 1.0), 0.5);
    EXPECT_EQ(posterior_mean_deriv({0.3, 0.0, 1.0}, 4.0), 0.0);
    EXPECT_THROW(posterior_mean_deriv({0.3, 1.0, 0.0}, 1.0), DomainError);

    const BernoulliChannel ch{0.3, 1.5, 0.6};
    const double h = 1e-6;
    const double fd = (posterior_mean(ch, 0.9 + h) - posterior_mean(ch, 0.9 - h)) / (2 * h);
    EXPECT_NEAR(posterior_mean_deriv(ch, 0.9) / fd, 1.0, 1e-6);
}

TEST(PosteriorMeanDeriv, FiniteDifferenceGrid)
{
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> ue(0.02, 0.98), um(0.1, 3.0), ut(0.2, 3.0), uy(-2.0, 4.0);
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const BernoulliChannel ch{ue(gen), um(gen), ut(gen)};
        const double y = uy(gen);
        const double h = 1e-5;
        const double fd = (posterior_mean(ch, y + h) - posterior_mean(ch, y - h)) / (2 * h);
        const double d = posterior_mean_deriv(ch, y);
        // central differences lose ~1e-16 / h absolute to rounding near f = 0 or 1
        if (d < 1e-4) continue;
        EXPECT_NEAR(d / fd, 1.0, 1e-6) << ch.epsilon << ' ' << ch.mu << ' ' << ch.tau << ' ' << y;
        ++checked;
    }
    EXPECT_GT(checked, 700);
}

TEST(PosteriorMean, BoundsMonotoneLipschitz)
{
    std::mt19937_64 gen(13);
    // ranges keep |log-odds| < 36 so that f stays strictly inside (0,1) in double
    std::uniform_real_distribution<double> ue(0.01, 0.99), um(0.0, 1.5), ut(0.5, 4.0);
    for (int k = 0; k < 200; ++k) {
        const BernoulliChannel ch{ue(gen), um(gen), ut(gen)};
        const double lip = ch.mu / (4.0 * ch.tau);
        double prev = -1.0, prev_y = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double y = -2.0 + 0.0125 * i;
            const double f = posterior_mean(ch, y);
            EXPECT_GT(f, 0.0);
            EXPECT_LT(f, 1.0);
            const double d = posterior_mean_deriv(ch, y);
            EXPECT_GE(d, 0.0);
            EXPECT_LE(d, lip * (1 + 1e-14));
            if (prev >= 0.0) {
                EXPECT_GE(f, prev);
                EXPECT_LE(f - prev, lip * (y - prev_y) * (1 + 1e-12) + 1e-16);
            }
            prev = f;
            prev_y = y;
        }
    }
}

TEST(GaussianPosteriorMean, Examples)
{
    EXPECT_DOUBLE_EQ(gaussian_posterior_mean({1.0, 1.0}, 2.0), 1.0);
    EXPECT_EQ(gaussian_posterior_mean({0.0, 1.0}, 7.0), 0.0);
    EXPECT_NEAR(gaussian_posterior_mean({3.0, 0.5}, 1.0), 3.0 / 9.5, 1e-15);
    EXPECT_NEAR(gaussian_posterior_mean_deriv({3.0, 0.5}), 3.0 / 9.5, 1e-15);
    EXPECT_THROW(gaussian_posterior_mean({0.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(gaussian_posterior_mean({1.0, -0.5}, 1.0), ParameterError);
}

TEST(ScalarMmse, Limits)
{
    EXPECT_NEAR(scalar_mmse(0.3, 0.0), 0.21, 1e-15);
    EXPECT_LE(scalar_mmse(0.3, 1e6), 1e-6);
    EXPECT_NEAR(overlap(0.3, 0.0), 0.09, 1e-15);
    EXPECT_NEAR(overlap(0.3, 1e6), 0.3, 1e-6);
    EXPECT_THROW(scalar_mmse(0.3, -1.0), ParameterError);
    EXPECT_THROW(scalar_mmse(0.0, 1.0), ParameterError);
    EXPECT_THROW(overlap(1.0, 1.0), ParameterError);
}

TEST(ScalarMmse, MatchesAdaptiveSimpson)
{
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> ue(0.005, 0.995), ulog(-3.0, 2.5);
    double worst = 0.0;
    for (int k = 0; k < 60; ++k) {
        const double e = ue(gen), s = std::pow(10.0, ulog(gen));
        worst = std::max(worst, std::abs(scalar_mmse(e, s) - oracle::smmse(e, s)));
    }
    for (double s : {0.5, 2.0, 10.0, 30.0, 100.0})
        worst = std::max(worst, std::abs(scalar_mmse(0.3, s) - oracle::smmse(0.3, s)));
    EXPECT_LE(worst, 1e-10);
}

TEST(ScalarMmse, MonteCarloAtSnrTwo)
{
    // E[(X0 - f(Y))^2] and E[X0 f(Y)] from 1e6 draws
    std::mt19937_64 gen(15);
    std::bernoulli_distribution bx(0.3);
    std::normal_distribution<double> nz;
    const double s = std::sqrt(2.0);
    const BernoulliChannel ch{0.3, s, 1.0};
    const int N = 1000000;
    double m1 = 0, m2 = 0, o1 = 0, o2 = 0;
    for (int i = 0; i < N; ++i) {
        const double x = bx(gen) ? 1.0 : 0.0;
        const double f = posterior_mean(ch, s * x + nz(gen));
        const double e = (x - f) * (x - f), o = x * f;
        m1 += e;
        m2 += e * e;
        o1 += o;
        o2 += o * o;
    }
    const double mm = m1 / N, om = o1 / N;
    const double mse = std::sqrt((m2 / N - mm * mm) / N), ose = std::sqrt((o2 / N - om * om) / N);
    EXPECT_NEAR(scalar_mmse(0.3, 2.0), mm, 3 * mse);
    EXPECT_NEAR(overlap(0.3, 2.0), om, 3 * ose);
}

TEST(ScalarMmse, NonincreasingInSnr)
{
    for (double e : {0.01, 0.05, 0.1, 0.3, 0.5, 0.8, 0.99}) {
        double prev = scalar_mmse(e, 0.0);
        EXPECT_LE(prev, e * (1 - e) + 1e-16);
        for (int i = 0; i <= 300; ++i) {
            const double s = std::pow(10.0, -3.0 + 0.025 * i);
            const double v = scalar_mmse(e, s);
            EXPECT_LE(v, prev + 1e-15) << e << ' ' << s;
            EXPECT_GE(v, 0.0);
            const double q = overlap(e, s);
            EXPECT_GE(q, e * e - 1e-15);
            EXPECT_LE(q, e + 1e-15);
            prev = v;
        }
    }
}

TEST(ScalarMmse, DirectQuadratureRoutesAgree)
{
    // E[X0 f] and E[f^2] coincide for the Bayes denoiser
    for (double e : {0.05, 0.3, 0.7}) {
        for (double s : {0.1, 1.0, 5.0, 40.0}) {
            const BernoulliChannel ch{e, std::sqrt(s), 1.0};
            EXPECT_NEAR(expected_signal_overlap(ch), overlap(e, s), 1e-12);
            EXPECT_NEAR(expected_squared_estimate(ch), overlap(e, s), 1e-12);
        }
    }
}
