// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "relaytrain/error.hpp"

namespace relaytrain {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }

    template <typename F>
    double apply(F&& f) const
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

/// Gauss-Legendre rule on [-1, 1] (Newton iteration on the Legendre recurrence).
inline QuadratureRule gauss_legendre(int order)
{
    detail::require(order >= 1, "gauss_legendre: order must be >= 1");
    const auto n = static_cast<std::size_t>(order);
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= order; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = order * (z * p1 - p2) / (z * z - 1.0);
            const double step = p1 / dp;
            z -= step;
            if (std::abs(step) < 1e-15)
                break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

/// Gauss-Laguerre rule for integrals of the form int_0^inf f(u) e^{-u} du.
/// Weights sum to one, so the rule is directly an expectation over a unit-mean exponential.
inline QuadratureRule gauss_laguerre(int order)
{
    detail::require(order >= 1 && order <= 128, "gauss_laguerre: order must be in [1, 128]");
    const auto n = static_cast<std::size_t>(order);
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // Initial guesses from Numerical Recipes' gaulag.
        if (i == 0)
            z = 3.0 / (1.0 + 2.4 * order);
        else if (i == 1)
            z += 15.0 / (1.0 + 2.5 * order);
        else {
            const double ai = static_cast<double>(i - 1);
            z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - rule.nodes[i - 2]);
        }
        double p1 = 0.0, p2 = 0.0, pp = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            p1 = 1.0;
            p2 = 0.0;
            for (int j = 1; j <= order; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
            }
            pp = (order * p1 - order * p2) / z;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, z))
                break;
        }
        rule.nodes[i] = z;
        rule.weights[i] = -1.0 / (pp * order * p2);
    }
    return rule;
}

/// Rule for E[f(u)], u ~ Exp(1), from the trapezoid rule after the double-exponential
/// substitution u = exp(v - exp(-v)). Handles the log(1 + c u) near-singularities at
/// u = -1/c that make Gauss-Laguerre converge slowly for large c. Weights sum to one up to
/// the discretization error.
inline QuadratureRule exponential_de_rule(int order)
{
    detail::require(order >= 2, "exponential_de_rule: order must be >= 2");
    constexpr double lo = -3.6;
    constexpr double hi = 3.75;
    const double h = (hi - lo) / (order - 1);
    QuadratureRule rule;
    rule.nodes.reserve(static_cast<std::size_t>(order));
    rule.weights.reserve(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        const double v = lo + h * i;
        const double e = std::exp(-v);
        const double u = std::exp(v - e);
        rule.nodes.push_back(u);
        rule.weights.push_back(h * std::exp(-u) * u * (1.0 + e));
    }
    return rule;
}

struct PeriodicQuadratureOptions {
    double relative_tolerance = 1e-8;
    std::size_t initial_nodes = 512;
    std::size_t max_nodes = std::size_t{1} << 16;
};

/// Rule for integrating a 2*pi-periodic function over [-pi, pi).
///
/// Without breakpoints this is the periodic trapezoid rule, which converges geometrically
/// for analytic integrands. With breakpoints (jump discontinuities of the integrand) the
/// circle is cut into panels at the breakpoints and each panel gets composite
/// Gauss-Legendre. Nodes are reported wrapped into [-pi, pi).
inline QuadratureRule periodic_rule(std::span<const double> breakpoints, std::size_t target_nodes)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    QuadratureRule rule;
    if (breakpoints.empty()) {
        rule.nodes.resize(target_nodes);
        rule.weights.assign(target_nodes, two_pi / static_cast<double>(target_nodes));
        for (std::size_t i = 0; i < target_nodes; ++i)
            rule.nodes[i] = -std::numbers::pi + two_pi * static_cast<double>(i) / static_cast<double>(target_nodes);
        return rule;
    }

    std::vector<double> cuts;
    for (double b : breakpoints)
        cuts.push_back(b - two_pi * std::floor((b + std::numbers::pi) / two_pi));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-14; }),
               cuts.end());
    cuts.push_back(cuts.front() + two_pi);

    constexpr int panel_order = 8;
    static const QuadratureRule base = gauss_legendre(panel_order);
    const std::size_t panels = cuts.size() - 1;
    const std::size_t per_panel =
        std::max<std::size_t>(1, target_nodes / (panels * static_cast<std::size_t>(panel_order)));
    rule.nodes.reserve(panels * per_panel * panel_order);
    rule.weights.reserve(panels * per_panel * panel_order);
    for (std::size_t p = 0; p < panels; ++p) {
        const double width = (cuts[p + 1] - cuts[p]) / static_cast<double>(per_panel);
        for (std::size_t s = 0; s < per_panel; ++s) {
            const double lo = cuts[p] + width * static_cast<double>(s);
            for (int k = 0; k < panel_order; ++k) {
                double x = lo + 0.5 * width * (base.nodes[k] + 1.0);
                if (x >= std::numbers::pi)
                    x -= two_pi;
                rule.nodes.push_back(x);
                rule.weights.push_back(0.5 * width * base.weights[k]);
            }
        }
    }
    return rule;
}

struct PeriodicIntegral {
    double value = 0.0;
    QuadratureRule rule;
};

/// Integrates `f` over one period with node doubling until two successive levels agree to
/// `relative_tolerance` (relative to max(|value|, scale)). Throws NumericalError when the
/// node cap is reached first.
template <typename F>
PeriodicIntegral integrate_periodic(F&& f, std::span<const double> breakpoints, double scale = 0.0,
                                    const PeriodicQuadratureOptions& options = {})
{
    std::size_t n = options.initial_nodes;
    QuadratureRule rule = periodic_rule(breakpoints, n);
    double previous = rule.apply(f);
    while (true) {
        n *= 2;
        if (n > options.max_nodes)
            throw NumericalError("periodic quadrature did not converge within " +
                                 std::to_string(options.max_nodes) + " nodes");
        QuadratureRule refined = periodic_rule(breakpoints, n);
        const double value = refined.apply(f);
        const double reference = std::max(std::abs(value), scale);
        if (std::abs(value - previous) <= options.relative_tolerance * reference)
            return {value, std::move(refined)};
        previous = value;
        rule = std::move(refined);
    }
}

} // namespace relaytrain
