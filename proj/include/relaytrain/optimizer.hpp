// SPDX-License-Identifier: Apache-2.0
//
// Joint optimization of training period, pilot energies and data powers.
//
// For a fixed period M the source spends at most M P_s per block on its pilot plus its data
// symbols, and the relay at most M P_r. The rate is increasing in every power, so both
// budgets are spent in full and the search space is a product of two scaled simplices.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "relaytrain/error.hpp"
#include "relaytrain/estimation.hpp"
#include "relaytrain/parallel.hpp"
#include "relaytrain/rates.hpp"
#include "relaytrain/rng.hpp"

namespace relaytrain {

/// How a scalar SNR maps to per-node powers.
enum class SnrDefinition {
    source_only, // SNR = P_s / noise, P_r = kappa P_s
    total,       // SNR = (P_s + P_r) / noise, P_r = kappa P_s
};

inline std::string to_string(SnrDefinition d) { return d == SnrDefinition::total ? "total" : "source"; }

struct OptimizationConfig {
    std::vector<int> m_grid = {4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40};
    int restarts = 8;
    double step_tolerance = 1e-9; // relative improvement below which a local search stops
    int max_evaluations = 5000;   // objective evaluations per (M, SNR) cell
    Integrator integrator = Quadrature{16};
    SnrDefinition snr_definition = SnrDefinition::source_only;
    // Power counted in E_b/N_0; defaults to the SNR definition when unset.
    std::optional<SnrDefinition> bit_energy_power;
    double relay_power_ratio = 1.0; // kappa = P_r / P_s
    std::uint64_t seed = 1;
    // Search every data slot separately even where equal powers are known to be optimal.
    bool per_slot_search = false;
    RateOptions rate_options;

    void validate() const
    {
        detail::require(!m_grid.empty(), "m_grid must not be empty");
        for (int m : m_grid)
            detail::require(m >= 4 && m % 2 == 0, "m_grid entries must be even integers >= 4");
        detail::require(restarts >= 1, "restarts must be >= 1");
        detail::require(step_tolerance > 0.0, "step_tolerance must be positive");
        detail::require(max_evaluations >= 10, "max_evaluations must be >= 10");
        detail::require(relay_power_ratio >= 0.0, "relay_power_ratio must be nonnegative");
    }
};

/// Per-symbol average powers of the two transmitters.
struct PowerBudget {
    double source = 0.0;
    double relay = 0.0;
};

inline PowerBudget power_budget(double snr, double noise_var, const OptimizationConfig& config)
{
    detail::require(std::isfinite(snr) && snr >= 0.0, "SNR must be finite and nonnegative");
    const double kappa = config.relay_power_ratio;
    const double ps = config.snr_definition == SnrDefinition::source_only ? snr * noise_var
                                                                           : snr * noise_var / (1.0 + kappa);
    return {ps, kappa * ps};
}

struct AllocationResult {
    SchemeSelector scheme;
    TrainingConfig training;
    PowerAllocation alloc;
    double rate = 0.0;          // bits/symbol (nats if requested)
    double baseline_rate = 0.0; // uniform split of each budget over its pilot and data slots
    double source_slack = 0.0;  // M P_s minus energy used
    double relay_slack = 0.0;   // M P_r minus energy used
    int evaluations = 0;
};

namespace detail {

/// Euclidean projection onto {x >= 0, sum x = 1}.
inline void project_to_simplex(std::vector<double>& x)
{
    if (x.empty())
        return;
    std::vector<double> sorted(x);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumulative += sorted[k];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - t > 0.0)
            theta = t;
    }
    double sum = 0.0;
    for (double& v : x) {
        v = std::max(v - theta, 0.0);
        sum += v;
    }
    for (double& v : x)
        v /= sum;
}

// Decision variables: fractions of each budget. Source layout: [pilot, data..., overlap...],
// relay layout: [pilot, data...]. In collapsed mode each data group is one coordinate whose
// share is split equally across its slots.
struct Point {
    std::vector<double> source;
    std::vector<double> relay;
};

class AllocationProblem {
public:
    AllocationProblem(const SchemeSelector& scheme, const ProfileBuilder& builder, const ExpectationGrid& grid,
                      const PowerBudget& budget, bool collapsed, RepetitionBound bound)
        : scheme_(scheme), builder_(builder), grid_(grid), bound_(bound), collapsed_(collapsed),
          slots_(static_cast<std::size_t>(builder.period() / 2 - 1)),
          source_budget_(budget.source * builder.period()), relay_budget_(budget.relay * builder.period())
    {
    }

    std::size_t slots() const noexcept { return slots_; }
    bool overlapped() const noexcept { return scheme_.overlapped(); }
    std::size_t source_dims() const noexcept
    {
        const std::size_t groups = overlapped() ? 2 : 1;
        return 1 + (collapsed_ ? groups : groups * slots_);
    }
    std::size_t relay_dims() const noexcept { return 1 + (collapsed_ ? 1 : slots_); }
    double source_budget() const noexcept { return source_budget_; }
    double relay_budget() const noexcept { return relay_budget_; }

    /// Equal split of each budget over the pilot and the data slots it feeds.
    Point uniform() const
    {
        Point p;
        const std::size_t groups = overlapped() ? 2 : 1;
        const double source_share = 1.0 / static_cast<double>(1 + groups * slots_);
        const double relay_share = 1.0 / static_cast<double>(1 + slots_);
        if (collapsed_) {
            p.source.assign(source_dims(), source_share * static_cast<double>(slots_));
            p.source[0] = source_share;
            p.relay = {relay_share, relay_share * static_cast<double>(slots_)};
        } else {
            p.source.assign(source_dims(), source_share);
            p.relay.assign(relay_dims(), relay_share);
        }
        return p;
    }

    double pilot_source(const Point& p) const { return source_budget_ * p.source[0]; }
    double pilot_relay(const Point& p) const { return relay_budget_ * p.relay[0]; }

    PowerAllocation allocation(const Point& p) const
    {
        PowerAllocation a;
        a.source_data.resize(slots_);
        a.relay_data.resize(slots_);
        if (overlapped())
            a.source_overlap.resize(slots_);
        const auto n = static_cast<double>(slots_);
        for (std::size_t i = 0; i < slots_; ++i) {
            a.source_data[i] = source_budget_ * (collapsed_ ? p.source[1] / n : p.source[1 + i]);
            a.relay_data[i] = relay_budget_ * (collapsed_ ? p.relay[1] / n : p.relay[1 + i]);
            if (overlapped())
                a.source_overlap[i] = source_budget_ * (collapsed_ ? p.source[2] / n : p.source[1 + slots_ + i]);
        }
        return a;
    }

    // Slot touched by a coordinate, or nullopt when it affects every slot.
    std::optional<std::size_t> source_slot(std::size_t k) const
    {
        if (k == 0 || collapsed_)
            return std::nullopt;
        return (k - 1) % slots_;
    }
    std::optional<std::size_t> relay_slot(std::size_t k) const
    {
        if (k == 0 || collapsed_)
            return std::nullopt;
        return k - 1;
    }

    // Full evaluation: per-slot expected rates (nats).
    struct State {
        Point point;
        EstimationProfile profile;
        PowerAllocation alloc;
        std::vector<double> slot_rates;
        double value = 0.0; // sum of slot rates (nats per block)
    };

    State evaluate(Point p)
    {
        State s;
        s.point = std::move(p);
        s.profile = builder_.build(pilot_source(s.point), pilot_relay(s.point));
        s.alloc = allocation(s.point);
        s.slot_rates.resize(slots_);
        s.value = 0.0;
        for (std::size_t i = 0; i < slots_; ++i) {
            s.slot_rates[i] = slot_rate(s.profile, s.alloc, i);
            s.value += s.slot_rates[i];
        }
        work_ += 1.0;
        return s;
    }

    double slot_rate(const EstimationProfile& profile, const PowerAllocation& alloc, std::size_t i)
    {
        return grid_.expected_slot_rate(scheme_, slot_gains(profile, alloc, scheme_.protocol, i), bound_);
    }

    // Objective after replacing one coordinate, reusing cached slot values where possible.
    double probe(const State& s, bool relay_side, std::size_t k, double value)
    {
        Point p = s.point;
        (relay_side ? p.relay : p.source)[k] = value;
        const auto slot = relay_side ? relay_slot(k) : source_slot(k);
        if (!slot)
            return evaluate(std::move(p)).value;
        PowerAllocation a = s.alloc;
        const std::size_t i = *slot;
        if (relay_side)
            a.relay_data[i] = relay_budget_ * value;
        else if (k <= slots_)
            a.source_data[i] = source_budget_ * value;
        else
            a.source_overlap[i] = source_budget_ * value;
        work_ += 1.0 / static_cast<double>(slots_);
        return s.value - s.slot_rates[i] + slot_rate(s.profile, a, i);
    }

    double work() const noexcept { return work_; }

private:
    SchemeSelector scheme_;
    const ProfileBuilder& builder_;
    const ExpectationGrid& grid_;
    RepetitionBound bound_;
    bool collapsed_;
    std::size_t slots_;
    double source_budget_;
    double relay_budget_;
    double work_ = 0.0;
};

/// Projected-gradient ascent over the two simplices with a parabolic line search along the
/// projected step. Forward-difference gradients; improvement-only, so the result is never
/// worse than the start.
class LocalSearch {
public:
    LocalSearch(AllocationProblem& problem, double tolerance) : problem_(problem), tolerance_(tolerance) {}

    using State = AllocationProblem::State;

    State run(State state, double work_limit)
    {
        double step = 0.05;
        int stalls = 0;
        while (problem_.work() < work_limit && stalls < 2) {
            const Point gradient = gradient_at(state);
            double gmax = 0.0;
            for (double g : gradient.source)
                gmax = std::max(gmax, std::abs(g));
            for (double g : gradient.relay)
                gmax = std::max(gmax, std::abs(g));
            if (gmax == 0.0)
                break;

            bool improved = false;
            for (int attempt = 0; attempt < 30 && problem_.work() < work_limit; ++attempt) {
                Point target = state.point;
                for (std::size_t k = 0; k < target.source.size(); ++k)
                    target.source[k] += step / gmax * gradient.source[k];
                for (std::size_t k = 0; k < target.relay.size(); ++k)
                    target.relay[k] += step / gmax * gradient.relay[k];
                project_to_simplex(target.source);
                project_to_simplex(target.relay);

                State full = problem_.evaluate(target);
                State half = problem_.evaluate(blend(state.point, target, 0.5));
                State* best = full.value >= half.value ? &full : &half;
                // Parabola through (0, f0), (1/2, f_half), (1, f1).
                const double f0 = state.value;
                const double curvature = 2.0 * (full.value - 2.0 * half.value + f0);
                std::optional<State> vertex;
                if (curvature < 0.0) {
                    const double slope = 4.0 * half.value - full.value - 3.0 * f0;
                    const double t = std::clamp(-slope / (2.0 * curvature), 0.0, 1.0);
                    if (t > 0.02 && std::abs(t - 0.5) > 0.02 && std::abs(t - 1.0) > 0.02) {
                        vertex = problem_.evaluate(blend(state.point, target, t));
                        if (vertex->value > best->value)
                            best = &*vertex;
                    }
                }
                if (best->value > f0) {
                    const double gain = best->value - f0;
                    if (best == &full)
                        step = std::min(step * 2.0, 1.0);
                    else if (best == &half)
                        step *= 0.5;
                    state = std::move(*best);
                    improved = true;
                    stalls = gain <= tolerance_ * std::abs(state.value) ? stalls + 1 : 0;
                    break;
                }
                step *= 0.25;
                if (step < 1e-12)
                    break;
            }
            if (!improved)
                break;
        }
        return state;
    }

private:
    static Point blend(const Point& a, const Point& b, double t)
    {
        Point p = a;
        for (std::size_t k = 0; k < p.source.size(); ++k)
            p.source[k] += t * (b.source[k] - a.source[k]);
        for (std::size_t k = 0; k < p.relay.size(); ++k)
            p.relay[k] += t * (b.relay[k] - a.relay[k]);
        return p;
    }

    Point gradient_at(const State& s)
    {
        constexpr double h = 1e-7;
        Point g;
        g.source.resize(s.point.source.size());
        g.relay.resize(s.point.relay.size());
        const bool source_live = problem_.source_budget() > 0.0;
        const bool relay_live = problem_.relay_budget() > 0.0;
        for (std::size_t k = 0; k < g.source.size() && source_live; ++k)
            g.source[k] = (problem_.probe(s, false, k, s.point.source[k] + h) - s.value) / h;
        for (std::size_t k = 0; k < g.relay.size() && relay_live; ++k)
            g.relay[k] = (problem_.probe(s, true, k, s.point.relay[k] + h) - s.value) / h;
        return g;
    }

    AllocationProblem& problem_;
    double tolerance_;
};

inline Point random_start(const AllocationProblem& problem, Rng& rng)
{
    Point p = problem.uniform();
    auto perturb = [&rng](std::vector<double>& v) {
        v[0] = rng.uniform(0.02, 0.6);
        double rest = 0.0;
        for (std::size_t k = 1; k < v.size(); ++k) {
            v[k] = rng.uniform(0.3, 1.7);
            rest += v[k];
        }
        for (std::size_t k = 1; k < v.size(); ++k)
            v[k] *= (1.0 - v[0]) / rest;
    };
    perturb(p.source);
    perturb(p.relay);
    return p;
}

} // namespace detail

/// Equal data powers per phase are optimal when the Wiener smoother sees an alias-free
/// lowpass spectrum: the error variance is then the same at every offset.
inline bool equal_power_structure(const RelayNetwork& network, int period, Estimator estimator)
{
    return estimator == Estimator::wiener && network.family.alias_free(period);
}

/// Best allocation for one period. Multi-start local search: every start gets a short run,
/// then the best one continues with the remaining evaluation budget.
inline AllocationResult optimize_allocation(const SchemeSelector& scheme, const RelayNetwork& network, int period,
                                            Estimator estimator, double snr, const OptimizationConfig& config)
{
    scheme.validate();
    network.validate();
    config.validate();
    TrainingConfig{period, estimator, 0.0, 0.0}.validate();
    const PowerBudget budget = power_budget(snr, network.noise_var, config);

    const ProfileBuilder builder(network, period, estimator);
    const ExpectationGrid grid(config.integrator);
    const bool collapsed = !config.per_slot_search && equal_power_structure(network, period, estimator);
    detail::AllocationProblem problem(scheme, builder, grid, budget, collapsed, config.rate_options.repetition_bound);

    const double to_unit = (config.rate_options.nats ? 1.0 : 1.0 / std::numbers::ln2) / period;
    auto finish = [&](const detail::AllocationProblem::State& s, double baseline) {
        AllocationResult r;
        r.scheme = scheme;
        r.training = {period, estimator, problem.pilot_source(s.point), problem.pilot_relay(s.point)};
        r.alloc = s.alloc;
        r.rate = s.value * to_unit;
        r.baseline_rate = baseline * to_unit;
        r.source_slack = problem.source_budget() - r.training.pilot_source - r.alloc.source_total();
        r.relay_slack = problem.relay_budget() - r.training.pilot_relay - r.alloc.relay_total();
        r.evaluations = static_cast<int>(std::ceil(problem.work()));
        return r;
    };

    auto baseline = problem.evaluate(problem.uniform());
    if (budget.source == 0.0 && budget.relay == 0.0)
        return finish(baseline, baseline.value);

    detail::LocalSearch search(problem, config.step_tolerance);
    Rng rng(stream_seed(config.seed, static_cast<std::uint64_t>(period) * 7919u +
                                         static_cast<std::uint64_t>(scheme.scheme) * 31u +
                                         static_cast<std::uint64_t>(scheme.protocol)));
    const double budget_total = config.max_evaluations;
    const double per_start = 0.5 * budget_total / config.restarts;

    std::vector<detail::AllocationProblem::State> candidates;
    candidates.push_back(search.run(baseline, problem.work() + per_start));
    for (int r = 1; r < config.restarts && problem.work() < budget_total; ++r) {
        auto start = problem.evaluate(detail::random_start(problem, rng));
        candidates.push_back(search.run(std::move(start), problem.work() + per_start));
    }
    auto best = std::max_element(candidates.begin(), candidates.end(),
                                 [](const auto& a, const auto& b) { return a.value < b.value; });
    auto polished = search.run(std::move(*best), budget_total);
    return finish(polished, baseline.value);
}

struct TrainingSearch {
    int best_period = 0;
    AllocationResult best;
    std::vector<AllocationResult> table; // one entry per m_grid value, in grid order
};

/// Optimizes every period in the grid and returns the best; ties go to the smaller period.
inline TrainingSearch optimize_training(const SchemeSelector& scheme, const RelayNetwork& network,
                                        Estimator estimator, double snr, const OptimizationConfig& config,
                                        int jobs = 1)
{
    config.validate();
    std::vector<int> grid = config.m_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    TrainingSearch out;
    out.table = parallel_map<AllocationResult>(grid.size(), jobs, [&](std::size_t i) {
        return optimize_allocation(scheme, network, grid[i], estimator, snr, config);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.table.size(); ++i)
        if (out.table[i].rate > out.table[best].rate)
            best = i;
    out.best = out.table[best];
    out.best_period = grid[best];
    return out;
}

struct BitEnergy {
    double ratio = 0.0; // E_b / N_0
    double db = 0.0;
};

/// E_b/N_0 = SNR_eff / rate, with SNR_eff counting the source power or both powers.
inline BitEnergy bit_energy(double rate_bits, double snr, const OptimizationConfig& config)
{
    if (!(rate_bits > 0.0))
        throw std::domain_error("bit energy is undefined at zero rate");
    const PowerBudget p = power_budget(snr, 1.0, config);
    const SnrDefinition counted = config.bit_energy_power.value_or(config.snr_definition);
    const double snr_eff = counted == SnrDefinition::total ? p.source + p.relay : p.source;
    const double ratio = snr_eff / rate_bits;
    return {ratio, 10.0 * std::log10(ratio)};
}

} // namespace relaytrain
