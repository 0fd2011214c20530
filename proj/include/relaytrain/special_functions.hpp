// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "relaytrain/error.hpp"

namespace relaytrain {

/// e^x E_1(x) for x > 0, where E_1 is the exponential integral int_1^inf e^{-xt}/t dt.
/// Series below 1, Lentz continued fraction above.
inline double scaled_exp_integral_e1(double x)
{
    detail::require(x > 0.0, "scaled_exp_integral_e1: x must be positive");
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (x <= 1.0) {
        double sum = 0.0;
        double term = 1.0;
        for (int k = 1; k < 100; ++k) {
            term *= -x / k;
            const double add = term / k;
            sum += add;
            if (std::abs(add) < eps * std::abs(sum))
                break;
        }
        return std::exp(x) * (-std::numbers::egamma - std::log(x) - sum);
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < eps)
            break;
    }
    return h;
}

/// E[log(1 + beta u)] for u ~ Exp(1).
inline double expected_log1p_exponential(double beta)
{
    if (beta <= 0.0)
        return 0.0;
    return scaled_exp_integral_e1(1.0 / beta);
}

/// E[min(log(1 + beta u), cap)] for u ~ Exp(1) and a constant cap >= 0:
///   e^{1/beta} (E_1(1/beta) - E_1(e^cap / beta)).
inline double expected_capped_log1p_exponential(double beta, double cap)
{
    if (beta <= 0.0 || cap <= 0.0)
        return 0.0;
    const double x = 1.0 / beta;
    const double y = x * std::exp(cap);
    if (!std::isfinite(y))
        return expected_log1p_exponential(beta);
    return scaled_exp_integral_e1(x) - std::exp(x - y) * scaled_exp_integral_e1(y);
}

} // namespace relaytrain
