// SPDX-License-Identifier: Apache-2.0
//
// Worst-case-noise achievable rates for AF and DF relaying with estimated channels.
//
// Estimation errors are folded into Gaussian noise, so each data-slot pair (m, j) sees
// instantaneous SNR terms proportional to |w|^2 for the three unit-variance estimate
// directions w_sd, w_sr, w_rd ~ CN(0, 1). The rate is the block average of the expected
// per-slot log terms.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "relaytrain/error.hpp"
#include "relaytrain/estimation.hpp"
#include "relaytrain/quadrature.hpp"
#include "relaytrain/rng.hpp"
#include "relaytrain/special_functions.hpp"

namespace relaytrain {

enum class Scheme { af, df_repetition, df_parallel };
enum class Protocol { non_overlapped, overlapped };

struct SchemeSelector {
    Scheme scheme = Scheme::af;
    Protocol protocol = Protocol::non_overlapped;

    void validate() const
    {
        if (scheme == Scheme::df_parallel && protocol == Protocol::overlapped)
            throw std::invalid_argument("DF parallel coding has no overlapped-protocol rate");
    }

    bool overlapped() const noexcept { return protocol == Protocol::overlapped; }

    friend bool operator==(const SchemeSelector&, const SchemeSelector&) = default;
};

inline std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::af: return "af";
    case Scheme::df_repetition: return "df-repetition";
    case Scheme::df_parallel: return "df-parallel";
    }
    return "?";
}

inline std::string to_string(Protocol p) { return p == Protocol::overlapped ? "overlapped" : "non-overlapped"; }

/// The five implemented scheme/protocol pairs.
inline constexpr std::array<SchemeSelector, 5> all_schemes = {{
    {Scheme::af, Protocol::non_overlapped},
    {Scheme::af, Protocol::overlapped},
    {Scheme::df_repetition, Protocol::non_overlapped},
    {Scheme::df_repetition, Protocol::overlapped},
    {Scheme::df_parallel, Protocol::non_overlapped},
}};

/// Which SNR term bounds relay decoding in overlapped DF repetition.
enum class RepetitionBound {
    source_relay, // log(1 + d): the source-relay term, as in the non-overlapped case
    printed,      // log(1 + c): the relay-destination term, as literally printed
};

struct RateOptions {
    RepetitionBound repetition_bound = RepetitionBound::source_relay;
    bool nats = false; // report nats instead of bits
};

/// Per-slot data powers. Entry i belongs to m = i + 2 and j = m + M/2.
struct PowerAllocation {
    std::vector<double> source_data;    // P_s,d(m)
    std::vector<double> source_overlap; // P_s,d(j); overlapped protocol only, empty otherwise
    std::vector<double> relay_data;     // P_r,d(j)

    void validate(int period, Protocol protocol) const
    {
        const auto n = static_cast<std::size_t>(period / 2 - 1);
        if (source_data.size() != n || relay_data.size() != n)
            throw std::invalid_argument("power allocation size does not match period " + std::to_string(period));
        if (protocol == Protocol::overlapped && source_overlap.size() != n)
            throw std::invalid_argument("overlapped protocol needs one overlap power per relay slot");
        if (protocol == Protocol::non_overlapped &&
            std::any_of(source_overlap.begin(), source_overlap.end(), [](double p) { return p != 0.0; }))
            throw std::invalid_argument("non-overlapped protocol cannot carry source overlap power");
        auto negative = [](const std::vector<double>& v) {
            return std::any_of(v.begin(), v.end(), [](double p) { return !(p >= 0.0); });
        };
        if (negative(source_data) || negative(source_overlap) || negative(relay_data))
            throw std::invalid_argument("data powers must be nonnegative");
    }

    double source_total() const noexcept
    {
        double s = 0.0;
        for (double p : source_data)
            s += p;
        for (double p : source_overlap)
            s += p;
        return s;
    }

    double relay_total() const noexcept
    {
        double s = 0.0;
        for (double p : relay_data)
            s += p;
        return s;
    }

    double overlap(std::size_t i) const noexcept { return i < source_overlap.size() ? source_overlap[i] : 0.0; }
};

/// Instantaneous SNR terms for one slot pair and one channel-direction realization.
struct SnrTerms {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
};

inline double kernel_f(double x, double y) noexcept { return x * y / (1.0 + x + y); }

inline double kernel_q(double a, double b, double c, double d) noexcept
{
    return (1.0 + a) * b * (1.0 + c) / (1.0 + c + d);
}

/// Per-slot rate in nats.
///
/// Non-overlapped terms: a = s-d (slot m), b = s-r (slot m), c = r-d (slot j).
/// Overlapped terms:     a = s-d (slot m), b = s-d (slot j), c = r-d (slot j), d = s-r (slot m).
inline double per_slot_rate(const SchemeSelector& sel, const SnrTerms& t,
                            RepetitionBound bound = RepetitionBound::source_relay)
{
    switch (sel.scheme) {
    case Scheme::af:
        if (sel.protocol == Protocol::non_overlapped)
            return std::log1p(t.a + kernel_f(t.b, t.c));
        return std::log1p(t.a + kernel_f(t.d, t.c) + kernel_q(t.a, t.b, t.c, t.d));
    case Scheme::df_repetition:
        if (sel.protocol == Protocol::non_overlapped)
            return std::min(std::log1p(t.b), std::log1p(t.a + t.c));
        return std::min(std::log1p(bound == RepetitionBound::source_relay ? t.d : t.c),
                        std::log1p(t.a + t.b + t.d + t.a * t.b));
    case Scheme::df_parallel:
        if (sel.protocol == Protocol::overlapped)
            throw std::invalid_argument("DF parallel coding has no overlapped-protocol rate");
        return std::min(std::log1p(t.b), std::log1p(t.a) + std::log1p(t.c));
    }
    return 0.0;
}

struct NoiseVariances {
    double relay_m = 0.0; // var z_r,d(m)
    double dest_m = 0.0;  // var z_d,d(m)
    double dest_j = 0.0;  // var z_d,d(j)
};

/// Thermal noise plus estimation-error leakage of the data symbols, slot index i.
inline NoiseVariances effective_noise_variances(const EstimationProfile& profile, const PowerAllocation& alloc,
                                                Protocol protocol, std::size_t i)
{
    detail::require(i < profile.size(), "slot index out of range");
    const double ps = alloc.source_data[i];
    const double pr = alloc.relay_data[i];
    NoiseVariances v;
    v.relay_m = profile.err_sr[i] * ps + profile.noise_var;
    v.dest_m = profile.err_sd[i] * ps + profile.noise_var;
    v.dest_j = profile.err_rd[i] * pr + profile.noise_var;
    if (protocol == Protocol::overlapped)
        v.dest_j += profile.err_sd_j[i] * alloc.overlap(i);
    return v;
}

/// SNR per unit |w|^2 for each term of slot index i.
inline SnrTerms slot_gains(const EstimationProfile& profile, const PowerAllocation& alloc, Protocol protocol,
                           std::size_t i)
{
    const NoiseVariances z = effective_noise_variances(profile, alloc, protocol, i);
    const double ps = alloc.source_data[i];
    const double pr = alloc.relay_data[i];
    SnrTerms g;
    g.a = ps * profile.est_sd(i) / z.dest_m;
    g.c = pr * profile.est_rd(i) / z.dest_j;
    const double sr = ps * profile.est_sr(i) / z.relay_m;
    if (protocol == Protocol::non_overlapped) {
        g.b = sr;
    } else {
        g.b = alloc.overlap(i) * profile.est_sd_j(i) / z.dest_j;
        g.d = sr;
    }
    return g;
}

/// Scales the per-unit gains by one realization (u_sd, u_sr, u_rd) of |w|^2.
inline SnrTerms realize(const SnrTerms& g, Protocol protocol, double u_sd, double u_sr, double u_rd) noexcept
{
    if (protocol == Protocol::non_overlapped)
        return {g.a * u_sd, g.b * u_sr, g.c * u_rd, 0.0};
    return {g.a * u_sd, g.b * u_sd, g.c * u_rd, g.d * u_sr};
}

/// Per-axis rule used by the deterministic integrator.
enum class AxisRule { double_exponential, gauss_laguerre };

struct Quadrature {
    int order = 24; // nodes per axis
    AxisRule rule = AxisRule::double_exponential;
};

struct MonteCarlo {
    long samples = 1'000'000;
    std::uint64_t seed = 0;
};

using Integrator = std::variant<Quadrature, MonteCarlo>;

/// Expectation over (u_sd, u_sr, u_rd), three i.i.d. unit exponentials (|w|^2 for w ~ CN(0, 1)).
///
/// Monte Carlo draws are equally weighted, with common random numbers: the same draws serve
/// every slot and every evaluation.
///
/// The deterministic path integrates one variable in closed form and the other two with a
/// tensor rule. Every rate expression is either log-linear in one variable or a minimum of
/// two logs where one side depends on a variable the other does not involve:
///   E[log(alpha + beta u)]          = log(alpha) + e^{alpha/beta} E_1(alpha/beta)
///   E[min(log(1 + beta u), cap)]    = e^{1/beta} (E_1(1/beta) - E_1(e^cap / beta))
/// which removes the kinks and the steepest direction from the quadrature.
class ExpectationGrid {
public:
    explicit ExpectationGrid(const Integrator& integrator)
    {
        if (const auto* q = std::get_if<Quadrature>(&integrator)) {
            rule_ = q->rule == AxisRule::double_exponential ? exponential_de_rule(q->order)
                                                            : gauss_laguerre(q->order);
            return;
        }
        const auto& mc = std::get<MonteCarlo>(integrator);
        detail::require(mc.samples >= 2, "Monte Carlo needs at least two samples");
        monte_carlo_ = true;
        Rng rng(stream_seed(mc.seed, 0x5EEDu));
        const auto n = static_cast<std::size_t>(mc.samples);
        points_.reserve(n);
        for (std::size_t s = 0; s < n; ++s) {
            const double u_sd = rng.exponential();
            const double u_sr = rng.exponential();
            const double u_rd = rng.exponential();
            points_.push_back({u_sd, u_sr, u_rd});
        }
    }

    bool monte_carlo() const noexcept { return monte_carlo_; }
    std::size_t samples() const noexcept { return points_.size(); }
    const std::array<double, 3>& point(std::size_t k) const { return points_[k]; }

    /// E[per_slot_rate] in nats for fixed per-unit gains.
    double expected_slot_rate(const SchemeSelector& sel, const SnrTerms& g, RepetitionBound bound) const
    {
        if (monte_carlo_) {
            double sum = 0.0;
            for (const auto& u : points_)
                sum += per_slot_rate(sel, realize(g, sel.protocol, u[0], u[1], u[2]), bound);
            return sum / static_cast<double>(points_.size());
        }
        sel.validate();
        if (sel.scheme == Scheme::df_repetition && sel.protocol == Protocol::overlapped &&
            bound == RepetitionBound::source_relay) {
            // log(1 + a + b + d + ab) >= log(1 + d) pointwise, so the minimum is log(1 + d u_sr).
            return expected_log1p_exponential(g.d);
        }
        return outer([&](double x, double y) { return inner(sel, g, x, y); });
    }

private:
    template <typename F>
    double outer(F&& f) const
    {
        const auto& n = rule_.nodes;
        const auto& w = rule_.weights;
        double sum = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) {
            double row = 0.0;
            for (std::size_t k = 0; k < n.size(); ++k)
                row += w[k] * f(n[i], n[k]);
            sum += w[i] * row;
        }
        return sum;
    }

    // E[log(alpha + beta u)], alpha > 0, beta >= 0.
    static double expected_log_affine(double alpha, double beta)
    {
        return std::log(alpha) + expected_log1p_exponential(beta / alpha);
    }

    // Conditional expectation over the closed-form variable, given the two outer variables.
    static double inner(const SchemeSelector& sel, const SnrTerms& g, double x, double y)
    {
        if (sel.scheme == Scheme::af) {
            if (sel.protocol == Protocol::non_overlapped) {
                // outer (u_sr, u_rd), closed form over u_sd
                const double relayed = kernel_f(g.b * x, g.c * y);
                return expected_log_affine(1.0 + relayed, g.a);
            }
            // outer (u_sd, u_rd), closed form over u_sr. The argument is N(u)/D(u) with
            //   N = (1 + ax)(1 + cy)(1 + bx) + d(1 + ax + cy) u,   D = 1 + cy + d u.
            const double ax = g.a * x;
            const double cy = g.c * y;
            const double n0 = (1.0 + ax) * (1.0 + cy) * (1.0 + g.b * x);
            return expected_log_affine(n0, g.d * (1.0 + ax + cy)) - expected_log_affine(1.0 + cy, g.d);
        }
        if (sel.protocol == Protocol::non_overlapped) {
            // outer (u_sd, u_rd), closed form over u_sr
            const double cap = sel.scheme == Scheme::df_repetition ? std::log1p(g.a * x + g.c * y)
                                                                   : std::log1p(g.a * x) + std::log1p(g.c * y);
            return expected_capped_log1p_exponential(g.b, cap);
        }
        // DF repetition, overlapped, printed bound: outer (u_sd, u_sr), closed form over u_rd
        const double cap = std::log1p((g.a + g.b) * x + g.d * y + g.a * g.b * x * x);
        return expected_capped_log1p_exponential(g.c, cap);
    }

    QuadratureRule rule_;
    std::vector<std::array<double, 3>> points_;
    bool monte_carlo_ = false;
};

struct RateResult {
    double rate = 0.0;              // per symbol, bits unless nats requested
    std::vector<double> per_slot;   // expected per-slot contributions; sum = period * rate
    double standard_error = 0.0;    // Monte Carlo only
    bool nats = false;
};

/// Rate of a fixed configuration under a prebuilt expectation grid.
inline RateResult evaluate_rate(const SchemeSelector& sel, const EstimationProfile& profile,
                                const PowerAllocation& alloc, const ExpectationGrid& grid,
                                const RateOptions& options = {})
{
    sel.validate();
    alloc.validate(profile.period, sel.protocol);
    const std::size_t n = profile.size();
    const double unit = options.nats ? 1.0 : 1.0 / std::numbers::ln2;

    std::vector<SnrTerms> gains(n);
    for (std::size_t i = 0; i < n; ++i)
        gains[i] = slot_gains(profile, alloc, sel.protocol, i);

    RateResult result;
    result.nats = options.nats;
    result.per_slot.assign(n, 0.0);
    if (!grid.monte_carlo()) {
        for (std::size_t i = 0; i < n; ++i)
            result.per_slot[i] = unit * grid.expected_slot_rate(sel, gains[i], options.repetition_bound);
    } else {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t k = 0; k < grid.samples(); ++k) {
            const auto& u = grid.point(k);
            double block = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = per_slot_rate(sel, realize(gains[i], sel.protocol, u[0], u[1], u[2]),
                                               options.repetition_bound);
                result.per_slot[i] += r;
                block += r;
            }
            sum += block;
            sum_sq += block * block;
        }
        const auto count = static_cast<double>(grid.samples());
        for (double& v : result.per_slot)
            v *= unit / count;
        const double mean = sum / count;
        const double var = std::max(0.0, sum_sq / count - mean * mean) * count / (count - 1.0);
        result.standard_error = std::sqrt(var / count) * unit / profile.period;
    }
    double total = 0.0;
    for (double v : result.per_slot)
        total += v;
    result.rate = total / profile.period;
    return result;
}

inline RateResult evaluate_rate(const SchemeSelector& sel, const RelayNetwork& network,
                                const TrainingConfig& training, const PowerAllocation& alloc,
                                const Integrator& integrator = Quadrature{}, const RateOptions& options = {})
{
    sel.validate();
    training.validate();
    alloc.validate(training.period, sel.protocol);
    const EstimationProfile profile = build_profile(network, training);
    return evaluate_rate(sel, profile, alloc, ExpectationGrid(integrator), options);
}

} // namespace relaytrain
