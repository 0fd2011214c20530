// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "relaytrain/quadrature.hpp"
#include "relaytrain/special_functions.hpp"

using namespace relaytrain;

TEST(Quadrature, GaussLegendreIsExactForPolynomials)
{
    const auto rule = gauss_legendre(8);
    for (int k = 0; k <= 15; ++k) {
        const double got = rule.apply([k](double x) { return std::pow(x, k); });
        const double want = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
        EXPECT_NEAR(got, want, 1e-13) << "k=" << k;
    }
}

TEST(Quadrature, GaussLaguerreIntegratesMoments)
{
    const auto rule = gauss_laguerre(16);
    double factorial = 1.0;
    for (int k = 0; k <= 31; ++k) {
        if (k > 0)
            factorial *= k;
        const double got = rule.apply([k](double x) { return std::pow(x, k); });
        EXPECT_NEAR(got / factorial, 1.0, 1e-9) << "k=" << k;
    }
}

TEST(Quadrature, ExponentialRuleHandlesLogSingularity)
{
    // E log(u) = -Euler-gamma for u ~ Exp(1).
    const auto rule = exponential_de_rule(24);
    EXPECT_NEAR(rule.apply([](double u) { return std::log(u); }), -std::numbers::egamma, 1e-7);
    EXPECT_NEAR(rule.apply([](double) { return 1.0; }), 1.0, 1e-8);
    EXPECT_NEAR(rule.apply([](double u) { return u * u; }), 2.0, 1e-7);
}

TEST(Quadrature, PeriodicIntegralWithJumps)
{
    // Indicator of [-1, 0.5] integrates to 1.5 exactly once the cuts are known.
    const double breaks[] = {-1.0, 0.5};
    auto f = [](double w) { return (w >= -1.0 && w <= 0.5) ? 1.0 + w * w : 0.0; };
    const auto r = integrate_periodic(f, breaks, 1.0);
    EXPECT_NEAR(r.value, 1.5 + (0.125 + 1.0) / 3.0, 1e-12);
}

TEST(Quadrature, PeriodicTrapezoidIsSpectral)
{
    auto f = [](double w) { return 1.0 / (1.25 - std::cos(w)); };
    const auto r = integrate_periodic(f, {}, 1.0);
    EXPECT_NEAR(r.value, 2.0 * std::numbers::pi / std::sqrt(1.25 * 1.25 - 1.0), 1e-12);
}

TEST(Quadrature, NodeCapRaisesNumericalError)
{
    PeriodicQuadratureOptions tight;
    tight.max_nodes = 1024;
    tight.relative_tolerance = 1e-15;
    auto rough = [](double w) { return std::sqrt(std::abs(w)); };
    EXPECT_THROW(integrate_periodic(rough, {}, 1.0, tight), NumericalError);
}

TEST(SpecialFunctions, ScaledExponentialIntegral)
{
    // Reference values of e^x E_1(x), 20 significant digits.
    const std::pair<double, double> table[] = {
        {1e-3, 6.3378740703254879563}, {0.1, 2.0146425447084516348},   {0.5, 0.92291063248373046883},
        {1.0, 0.59634736232319407434}, {1.5, 0.44825666929158295392},  {3.0, 0.26208374025531849619},
        {10.0, 0.091563333939788081876}, {50.0, 0.019615109930114870365}, {200.0, 0.0049752463231793566242},
    };
    for (const auto& [x, want] : table)
        EXPECT_NEAR(scaled_exp_integral_e1(x), want, 1e-13 * want) << "x=" << x;
}

TEST(SpecialFunctions, ExpectedLogOfExponential)
{
    EXPECT_NEAR(expected_log1p_exponential(0.01), 0.0099019422867330186105, 1e-14);
    EXPECT_NEAR(expected_log1p_exponential(1.0), 0.59634736232319407434, 1e-14);
    EXPECT_NEAR(expected_log1p_exponential(100.0), 4.0785114434564258466, 1e-12);
    EXPECT_DOUBLE_EQ(expected_log1p_exponential(0.0), 0.0);
}

TEST(SpecialFunctions, ExpectedCappedLog)
{
    EXPECT_NEAR(expected_capped_log1p_exponential(1.0, 0.5), 0.3778067022620457833, 1e-13);
    EXPECT_NEAR(expected_capped_log1p_exponential(10.0, 2.0), 1.6306842917664905279, 1e-13);
    EXPECT_NEAR(expected_capped_log1p_exponential(0.1, 0.05), 0.039201817471465510939, 1e-13);
    EXPECT_DOUBLE_EQ(expected_capped_log1p_exponential(3.0, 0.0), 0.0);
    // A huge cap leaves the uncapped expectation.
    EXPECT_NEAR(expected_capped_log1p_exponential(2.0, 60.0), expected_log1p_exponential(2.0), 1e-13);
}
