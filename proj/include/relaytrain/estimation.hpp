// SPDX-License-Identifier: Apache-2.0
//
// Channel estimation for the three links of a source-relay-destination network.
//
// Block layout for period M (slots numbered 1..M):
//   slot 1          source pilot (estimates h_sr at the relay, h_sd at the destination)
//   slots 2..M/2    source data, index m
//   slot M/2+1      relay pilot (estimates h_rd at the destination)
//   slots M/2+2..M  relay-phase data, index j = m + M/2
// Each link's pilots recur every M symbols, so a data slot sits at a fixed offset from
// that link's pilot train.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "relaytrain/error.hpp"
#include "relaytrain/fading.hpp"
#include "relaytrain/quadrature.hpp"

namespace relaytrain {

enum class Estimator { single_pilot, wiener };

enum class Link { source_destination, source_relay, relay_destination };

inline std::string to_string(Estimator e) { return e == Estimator::single_pilot ? "single" : "wiener"; }

struct RelayNetwork {
    double var_sd = 1.0;
    double var_sr = 1.0;
    double var_rd = 1.0;
    double noise_var = 1.0;
    // Correlation structure shared by all links; its variance field is ignored.
    FadingProcess family;

    void validate() const
    {
        detail::require(var_sd > 0.0 && var_sr > 0.0 && var_rd > 0.0, "link variances must be positive");
        detail::require(noise_var > 0.0, "noise variance must be positive");
    }

    double link_variance(Link link) const noexcept
    {
        switch (link) {
        case Link::source_destination: return var_sd;
        case Link::source_relay: return var_sr;
        case Link::relay_destination: return var_rd;
        }
        return 0.0;
    }

    FadingProcess link_process(Link link) const { return family.with_variance(link_variance(link)); }
};

struct TrainingConfig {
    int period = 4;
    Estimator estimator = Estimator::single_pilot;
    double pilot_source = 0.0;
    double pilot_relay = 0.0;

    void validate() const
    {
        detail::require(period >= 4 && period % 2 == 0, "training period must be an even integer >= 4");
        detail::require(pilot_source >= 0.0 && pilot_relay >= 0.0, "pilot energies must be nonnegative");
    }

    int data_slots() const noexcept { return period / 2 - 1; }
};

// Offsets (mod M) of data slot index i = m - 2 from each link's pilot train.
inline int source_phase_offset(int i) noexcept { return i + 1; }               // m - 1
inline int relay_phase_offset_from_source(int period, int i) noexcept { return i + period / 2 + 1; } // j - 1
inline int relay_phase_offset_from_relay(int i) noexcept { return i + 1; }     // j - (M/2 + 1)

/// Per-slot estimate/error variances for all three links.
///
/// Entry i corresponds to source data slot m = i + 2 and relay-phase slot j = m + M/2.
struct EstimationProfile {
    int period = 0;
    double var_sd = 0.0;
    double var_sr = 0.0;
    double var_rd = 0.0;
    double noise_var = 0.0;
    std::vector<double> err_sr;   // h_sr at slot m (relay)
    std::vector<double> err_sd;   // h_sd at slot m (destination)
    std::vector<double> err_sd_j; // h_sd at slot j (destination, overlapped protocol)
    std::vector<double> err_rd;   // h_rd at slot j (destination)

    std::size_t size() const noexcept { return err_sr.size(); }

    double est_sr(std::size_t i) const { return var_sr - err_sr[i]; }
    double est_sd(std::size_t i) const { return var_sd - err_sd[i]; }
    double est_sd_j(std::size_t i) const { return var_sd - err_sd_j[i]; }
    double est_rd(std::size_t i) const { return var_rd - err_rd[i]; }
};

namespace detail {

// Roundoff allowance before an out-of-range variance is treated as a bug.
inline constexpr double clamp_guard = 1e-10;

inline double clamp_error_variance(double err, double variance, const char* what)
{
    if (err < -clamp_guard * variance || err > variance * (1.0 + clamp_guard))
        throw NumericalError(std::string(what) + ": error variance " + std::to_string(err) +
                             " outside [0, " + std::to_string(variance) + "]");
    return std::clamp(err, 0.0, variance);
}

} // namespace detail

/// MMSE error variance from one pilot observation y = h sqrt(P) + n at the pilot itself.
inline double single_pilot_error_variance(double variance, double noise_var, double pilot)
{
    detail::require(variance > 0.0 && noise_var > 0.0, "variances must be positive");
    detail::require(pilot >= 0.0, "pilot energy must be nonnegative");
    return variance * noise_var / (variance * pilot + noise_var);
}

/// Linear MMSE gain applied to the pilot observation: h_hat = gain * y.
inline double single_pilot_gain(double variance, double noise_var, double pilot)
{
    detail::require(variance > 0.0 && noise_var > 0.0, "variances must be positive");
    detail::require(pilot >= 0.0, "pilot energy must be nonnegative");
    return variance * std::sqrt(pilot) / (variance * pilot + noise_var);
}

/// Error variance of the single-pilot MMSE estimate of h(n + lag) from the pilot at n.
/// lag = 0 gives single_pilot_error_variance(); the loss of correlation with distance
/// is what makes data-slot powers taper away from the pilot.
inline double single_pilot_error_variance(const FadingProcess& process, long lag, double noise_var, double pilot)
{
    const double variance = process.variance();
    const double pilot_err = single_pilot_error_variance(variance, noise_var, pilot);
    const double rho = process.autocorrelation(lag) / variance;
    return detail::clamp_error_variance(variance - rho * rho * (variance - pilot_err), variance,
                                        "single_pilot_error_variance");
}

/// Steady-state noncausal Wiener smoother error variance at `offset` symbols after a pilot,
/// with pilots of energy `pilot` every `period` symbols:
///   var - (1/2pi) int P |S_offset|^2 / (P S_0 + noise) dw.
inline double wiener_error_variance(const FadingProcess& process, int period, int offset, double noise_var,
                                    double pilot, const PeriodicQuadratureOptions& options = {})
{
    detail::require(period >= 1, "wiener_error_variance: period must be >= 1");
    detail::require(offset >= 0 && offset < period, "wiener_error_variance: offset must be in [0, period)");
    detail::require(noise_var > 0.0, "noise variance must be positive");
    detail::require(pilot >= 0.0, "pilot energy must be nonnegative");
    const double variance = process.variance();
    if (pilot == 0.0)
        return variance;

    const auto breaks = process.undersampled_breakpoints(period);
    auto integrand = [&](double w) {
        const double s0 = process.undersampled_psd(period, 0, w).real();
        const double sm = std::norm(process.undersampled_psd(period, offset, w));
        return pilot * sm / (pilot * s0 + noise_var);
    };
    const auto integral = integrate_periodic(integrand, breaks, 1e-6 * variance, options);
    const double err = variance - integral.value / (2.0 * std::numbers::pi);
    return detail::clamp_error_variance(err, variance, "wiener_error_variance");
}

/// Alias-free lowpass Wiener error variance in closed form:
///   var noise / (P var / (2 f_d M) + noise),  valid for f_d M < 1/2.
inline double lowpass_closed_form(double variance, double noise_var, double pilot, double doppler, int period)
{
    detail::require(variance > 0.0 && noise_var > 0.0, "variances must be positive");
    detail::require(pilot >= 0.0, "pilot energy must be nonnegative");
    detail::require(doppler > 0.0 && period >= 1, "doppler and period must be positive");
    detail::require(doppler * period < 0.5, "lowpass_closed_form: f_d * M >= 1/2 aliases; use wiener_error_variance");
    return variance * noise_var / (pilot * variance / (2.0 * doppler * period) + noise_var);
}

/// Precomputed unit-variance undersampled spectra for one process family and period.
///
/// Evaluating the Wiener error for a new (variance, pilot, noise) triple is then a single
/// weighted sum. The grid is refined until every offset agrees across a doubling at a
/// spread of pilot SNRs.
class WienerTable {
public:
    WienerTable(const FadingProcess& family, int period, const PeriodicQuadratureOptions& options = {})
        : period_(period)
    {
        detail::require(period >= 1, "WienerTable: period must be >= 1");
        const FadingProcess unit = family.with_variance(1.0);
        const auto breaks = unit.undersampled_breakpoints(period);
        static constexpr double probes[] = {1e-2, 1.0, 1e2, 1e4};

        std::size_t nodes = options.initial_nodes;
        build(unit, breaks, nodes);
        std::vector<double> previous = probe_values(probes);
        while (true) {
            nodes *= 2;
            if (nodes > options.max_nodes)
                throw NumericalError("WienerTable: quadrature did not converge within " +
                                     std::to_string(options.max_nodes) + " nodes");
            build(unit, breaks, nodes);
            std::vector<double> current = probe_values(probes);
            bool converged = true;
            for (std::size_t k = 0; k < current.size(); ++k)
                if (std::abs(current[k] - previous[k]) > options.relative_tolerance * std::max(current[k], 1e-6))
                    converged = false;
            if (converged)
                break;
            previous = std::move(current);
        }
    }

    int period() const noexcept { return period_; }
    std::size_t nodes() const noexcept { return weights_.size(); }

    double error_variance(int offset, double variance, double noise_var, double pilot) const
    {
        detail::require(offset >= 0 && offset < period_, "WienerTable: offset out of range");
        if (pilot == 0.0)
            return variance;
        const double rho = pilot * variance / noise_var;
        const double err = variance * (1.0 - captured_fraction(offset, rho));
        return detail::clamp_error_variance(err, variance, "WienerTable::error_variance");
    }

private:
    void build(const FadingProcess& unit, const std::vector<double>& breaks, std::size_t nodes)
    {
        const QuadratureRule rule = periodic_rule(breaks, nodes);
        weights_.resize(rule.size());
        for (std::size_t i = 0; i < rule.size(); ++i)
            weights_[i] = rule.weights[i] / (2.0 * std::numbers::pi);
        s0_.assign(rule.size(), 0.0);
        cross_.assign(static_cast<std::size_t>(period_), std::vector<double>(rule.size()));
        for (std::size_t i = 0; i < rule.size(); ++i) {
            s0_[i] = unit.undersampled_psd(period_, 0, rule.nodes[i]).real();
            for (int m = 0; m < period_; ++m)
                cross_[static_cast<std::size_t>(m)][i] = std::norm(unit.undersampled_psd(period_, m, rule.nodes[i]));
        }
    }

    // 1 - err/var for a unit-variance link at pilot SNR rho.
    double captured_fraction(int offset, double rho) const
    {
        const auto& cross = cross_[static_cast<std::size_t>(offset)];
        double sum = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i)
            sum += weights_[i] * rho * cross[i] / (rho * s0_[i] + 1.0);
        return sum;
    }

    std::vector<double> probe_values(std::span<const double> probes) const
    {
        std::vector<double> out;
        for (double rho : probes)
            for (int m = 0; m < period_; ++m)
                out.push_back(captured_fraction(m, rho));
        return out;
    }

    int period_;
    std::vector<double> weights_;
    std::vector<double> s0_;
    std::vector<std::vector<double>> cross_;
};

/// Builds estimation profiles for one network, period and estimator, reusing the Wiener
/// table across pilot energies. Immutable after construction.
class ProfileBuilder {
public:
    ProfileBuilder(const RelayNetwork& network, int period, Estimator estimator)
        : network_(network), period_(period), estimator_(estimator)
    {
        network.validate();
        TrainingConfig{period, estimator, 0.0, 0.0}.validate();
        if (estimator == Estimator::wiener)
            table_ = std::make_shared<const WienerTable>(network.family, period);
    }

    int period() const noexcept { return period_; }
    Estimator estimator() const noexcept { return estimator_; }
    const RelayNetwork& network() const noexcept { return network_; }

    EstimationProfile build(double pilot_source, double pilot_relay) const
    {
        detail::require(pilot_source >= 0.0 && pilot_relay >= 0.0, "pilot energies must be nonnegative");
        const auto n = static_cast<std::size_t>(period_ / 2 - 1);
        EstimationProfile p;
        p.period = period_;
        p.var_sd = network_.var_sd;
        p.var_sr = network_.var_sr;
        p.var_rd = network_.var_rd;
        p.noise_var = network_.noise_var;
        p.err_sr.resize(n);
        p.err_sd.resize(n);
        p.err_sd_j.resize(n);
        p.err_rd.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int ii = static_cast<int>(i);
            p.err_sr[i] = error(network_.var_sr, source_phase_offset(ii), pilot_source);
            p.err_sd[i] = error(network_.var_sd, source_phase_offset(ii), pilot_source);
            p.err_sd_j[i] = error(network_.var_sd, relay_phase_offset_from_source(period_, ii), pilot_source);
            p.err_rd[i] = error(network_.var_rd, relay_phase_offset_from_relay(ii), pilot_relay);
        }
        return p;
    }

private:
    double error(double variance, int offset, double pilot) const
    {
        if (estimator_ == Estimator::wiener)
            return table_->error_variance(offset, variance, network_.noise_var, pilot);
        // The single-pilot estimator uses the nearest pilot of the link's own pilot train.
        const int lag = std::min(offset, period_ - offset);
        return single_pilot_error_variance(network_.family.with_variance(variance), lag, network_.noise_var, pilot);
    }

    RelayNetwork network_;
    int period_;
    Estimator estimator_;
    std::shared_ptr<const WienerTable> table_;
};

inline EstimationProfile build_profile(const RelayNetwork& network, const TrainingConfig& training)
{
    training.validate();
    return ProfileBuilder(network, training.period, training.estimator)
        .build(training.pilot_source, training.pilot_relay);
}

} // namespace relaytrain
