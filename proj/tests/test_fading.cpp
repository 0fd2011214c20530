// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "relaytrain/fading.hpp"

using namespace relaytrain;

namespace {

constexpr double pi = std::numbers::pi;

// Plain midpoint sum over one period; the integrands here are smooth or have two jumps.
template <typename F>
double midpoint_period(F f, int n)
{
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += f(-pi + (i + 0.5) * 2.0 * pi / n);
    return sum * 2.0 * pi / n;
}

// DTFT of the geometric sequence var * alpha^{|M l + m|} over l, summed in closed form.
std::complex<double> gauss_markov_undersampled(double alpha, double var, int period, int offset, double w)
{
    const double beta = std::pow(alpha, period);
    const std::complex<double> z = std::polar(1.0, w);
    return var * (std::pow(alpha, offset) / (1.0 - beta / z) + std::pow(alpha, period - offset) * z / (1.0 - beta * z));
}

} // namespace

TEST(Fading, LowpassPsdValues)
{
    const auto p = FadingProcess::lowpass(0.1, 1.0);
    EXPECT_DOUBLE_EQ(p.psd(0.0), 5.0);
    EXPECT_DOUBLE_EQ(p.psd(pi), 0.0);
    EXPECT_DOUBLE_EQ(p.psd(2.0 * pi * 0.1), 5.0); // band edge is in band
    EXPECT_DOUBLE_EQ(p.psd(2.0 * pi * 0.1 + 1e-9), 0.0);
    EXPECT_DOUBLE_EQ(p.psd(2.0 * pi), 5.0); // wrapped
}

TEST(Fading, GaussMarkovPsdValues)
{
    const auto p = FadingProcess::gauss_markov(0.5, 2.0);
    EXPECT_NEAR(p.psd(0.0), (1 - 0.25) * 2.0 / 0.25, 1e-12);
    EXPECT_NEAR(p.psd(pi), (1 - 0.25) * 2.0 / 2.25, 1e-12);
    EXPECT_DOUBLE_EQ(FadingProcess::gauss_markov(0.0, 3.0).psd(1.234), 3.0);
}

TEST(Fading, PsdIntegratesToVariance)
{
    for (const auto& p : {FadingProcess::gauss_markov(0.9, 4.0), FadingProcess::gauss_markov(0.0, 1.5),
                          FadingProcess::lowpass(0.05, 2.0), FadingProcess::lowpass(0.5, 1.0)}) {
        const double power = midpoint_period([&](double w) { return p.psd(w); }, 1 << 18) / (2.0 * pi);
        EXPECT_NEAR(power, p.variance(), 1e-4 * p.variance()) << p.describe();
    }
}

TEST(Fading, AutocorrelationMatchesInverseTransform)
{
    for (const auto& p : {FadingProcess::gauss_markov(0.8, 2.0), FadingProcess::lowpass(0.07, 3.0)}) {
        for (long k : {0L, 1L, 3L, 10L}) {
            const double r = midpoint_period([&](double w) { return p.psd(w) * std::cos(w * k); }, 1 << 18) / (2.0 * pi);
            EXPECT_NEAR(p.autocorrelation(k), r, 2e-4) << p.describe() << " k=" << k;
            EXPECT_DOUBLE_EQ(p.autocorrelation(k), p.autocorrelation(-k));
        }
    }
}

TEST(Fading, UndersampledGaussMarkovMatchesGeometricSum)
{
    const double alpha = 0.99, var = 16.0;
    const auto p = FadingProcess::gauss_markov(alpha, var);
    for (int period : {4, 12, 30}) {
        for (int offset : {0, 1, period / 2, period - 1}) {
            for (double w : {-3.0, -1.0, 0.0, 0.3, 2.9}) {
                const auto got = p.undersampled_psd(period, offset, w);
                const auto want = gauss_markov_undersampled(alpha, var, period, offset, w);
                EXPECT_NEAR(got.real(), want.real(), 1e-9 * std::abs(want));
                EXPECT_NEAR(got.imag(), want.imag(), 1e-9 * std::abs(want));
            }
        }
    }
}

TEST(Fading, UndersampledLowpassAliasFree)
{
    const double fd = 0.01, var = 16.0;
    const int period = 12;
    const auto p = FadingProcess::lowpass(fd, var);
    ASSERT_TRUE(p.alias_free(period));
    const double edge = 2.0 * pi * fd * period;
    for (double w : {0.0, 0.5 * edge, -0.9 * edge})
        EXPECT_NEAR(p.undersampled_psd(period, 0, w).real(), var / (2.0 * fd * period), 1e-12);
    EXPECT_DOUBLE_EQ(std::abs(p.undersampled_psd(period, 0, 1.1 * edge)), 0.0);
    // |S_m| is flat in band for every offset.
    for (int m = 1; m < period; ++m)
        EXPECT_NEAR(std::abs(p.undersampled_psd(period, m, 0.3 * edge)), var / (2.0 * fd * period), 1e-12);
    EXPECT_EQ(p.undersampled_breakpoints(period).size(), 2u);
    EXPECT_TRUE(FadingProcess::gauss_markov(0.9).undersampled_breakpoints(period).empty());
}

TEST(Fading, UndersampledSpectrumPreservesPower)
{
    // (1/2pi) int S_0 = r(0) for the pilot-rate sequence.
    for (const auto& p : {FadingProcess::gauss_markov(0.95, 2.0), FadingProcess::lowpass(0.08, 2.0)}) {
        for (int period : {4, 10}) {
            const double power =
                midpoint_period([&](double w) { return p.undersampled_psd(period, 0, w).real(); }, 1 << 16) / (2 * pi);
            EXPECT_NEAR(power, p.variance(), 1e-3 * p.variance()) << p.describe() << " M=" << period;
        }
    }
}

TEST(Fading, RejectsInvalidParameters)
{
    EXPECT_THROW(FadingProcess::gauss_markov(1.0), std::invalid_argument);
    EXPECT_THROW(FadingProcess::gauss_markov(-0.1), std::invalid_argument);
    EXPECT_THROW(FadingProcess::gauss_markov(0.5, 0.0), std::invalid_argument);
    EXPECT_THROW(FadingProcess::lowpass(0.0), std::invalid_argument);
    EXPECT_THROW(FadingProcess::lowpass(0.51), std::invalid_argument);
    EXPECT_NO_THROW(FadingProcess::lowpass(0.5));
    const auto p = FadingProcess::gauss_markov(0.5);
    EXPECT_THROW(p.undersampled_psd(4, 4, 0.0), std::invalid_argument);
}

TEST(Fading, GaussMarkovPathStatistics)
{
    const auto p = FadingProcess::gauss_markov(0.9, 4.0);
    const auto path = sample_path(p, 400000, 11);
    double power = 0.0, lag1 = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        power += std::norm(path[k]);
        lag1 += (path[k + 1] * std::conj(path[k])).real();
    }
    power /= static_cast<double>(path.size() - 1);
    lag1 /= static_cast<double>(path.size() - 1);
    EXPECT_NEAR(power, 4.0, 0.1);
    EXPECT_NEAR(lag1, 3.6, 0.1);
}

TEST(Fading, LowpassEnsembleAutocorrelation)
{
    const auto p = FadingProcess::lowpass(0.05, 1.0);
    double r0 = 0.0, r5 = 0.0;
    constexpr int paths = 200;
    for (int s = 0; s < paths; ++s) {
        const auto path = sample_path(p, 64, 1000 + s);
        r0 += std::norm(path[10]);
        r5 += (path[15] * std::conj(path[10])).real();
    }
    EXPECT_NEAR(r0 / paths, 1.0, 0.15);
    EXPECT_NEAR(r5 / paths, p.autocorrelation(5), 0.15);
}

TEST(Fading, SamplePathIsDeterministic)
{
    for (const auto& p : {FadingProcess::gauss_markov(0.99, 2.0), FadingProcess::lowpass(0.1, 2.0)}) {
        EXPECT_EQ(sample_path(p, 5000, 42), sample_path(p, 5000, 42));
        EXPECT_NE(sample_path(p, 50, 42), sample_path(p, 50, 43));
    }
}
