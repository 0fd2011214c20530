// SPDX-License-Identifier: Apache-2.0
//
// Fading process families: first-order Gauss-Markov and band-limited (flat) lowpass.
// Frequencies are normalized to the symbol rate, so w is in radians per symbol.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "relaytrain/error.hpp"
#include "relaytrain/rng.hpp"

namespace relaytrain {

struct GaussMarkov {
    double alpha = 0.0;    // one-step correlation, [0, 1)
    double variance = 1.0; // sigma_h^2
};

struct Lowpass {
    double doppler = 0.5;  // normalized maximum Doppler f_d, (0, 0.5]
    double variance = 1.0; // sigma_h^2
};

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double w) noexcept
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return w - two_pi * std::floor((w + std::numbers::pi) / two_pi);
}

class FadingProcess {
public:
    using Model = std::variant<GaussMarkov, Lowpass>;

    FadingProcess() : FadingProcess(GaussMarkov{}) {}

    FadingProcess(GaussMarkov model) : model_(model)
    {
        detail::require(model.alpha >= 0.0 && model.alpha < 1.0, "Gauss-Markov alpha must be in [0, 1)");
        detail::require(model.variance > 0.0, "fading variance must be positive");
    }

    FadingProcess(Lowpass model) : model_(model)
    {
        detail::require(model.doppler > 0.0 && model.doppler <= 0.5, "lowpass doppler must be in (0, 0.5]");
        detail::require(model.variance > 0.0, "fading variance must be positive");
    }

    static FadingProcess gauss_markov(double alpha, double variance = 1.0) { return GaussMarkov{alpha, variance}; }
    static FadingProcess lowpass(double doppler, double variance = 1.0) { return Lowpass{doppler, variance}; }

    const Model& model() const noexcept { return model_; }
    bool is_gauss_markov() const noexcept { return std::holds_alternative<GaussMarkov>(model_); }
    bool is_lowpass() const noexcept { return std::holds_alternative<Lowpass>(model_); }

    double variance() const noexcept
    {
        return std::visit([](const auto& m) { return m.variance; }, model_);
    }

    /// Same family and correlation parameter, different variance.
    FadingProcess with_variance(double variance) const
    {
        return std::visit(
            [variance](auto m) -> FadingProcess {
                m.variance = variance;
                return m;
            },
            model_);
    }

    /// Power spectral density S_h(e^{jw}); w outside [-pi, pi) is wrapped.
    double psd(double w) const noexcept
    {
        if (const auto* gm = std::get_if<GaussMarkov>(&model_)) {
            const double a = gm->alpha;
            return (1.0 - a * a) * gm->variance / (1.0 + a * a - 2.0 * a * std::cos(w));
        }
        const auto& lp = std::get<Lowpass>(model_);
        // Closed passband: the edge |w| = 2 pi f_d is in band.
        const double edge = 2.0 * std::numbers::pi * lp.doppler;
        return std::abs(wrap_angle(w)) <= edge ? lp.variance / (2.0 * lp.doppler) : 0.0;
    }

    /// Autocorrelation r(k) = E[h_{n+k} h_n^*] (real and even for both families).
    double autocorrelation(long k) const noexcept
    {
        if (const auto* gm = std::get_if<GaussMarkov>(&model_))
            return gm->variance * std::pow(gm->alpha, static_cast<double>(std::labs(k)));
        const auto& lp = std::get<Lowpass>(model_);
        if (k == 0)
            return lp.variance;
        const double x = 2.0 * std::numbers::pi * lp.doppler * static_cast<double>(k);
        return lp.variance * std::sin(x) / x;
    }

    /// Spectrum of the pilot-rate sequence h(Ml + offset) cross h(Ml), i.e. the M-fold
    /// undersampled spectrum with phase offset:
    ///   (1/M) sum_k e^{j offset (w - 2 pi k)/M} S_h(e^{j (w - 2 pi k)/M}).
    std::complex<double> undersampled_psd(int period, int offset, double w) const
    {
        detail::require(period >= 1, "undersampled_psd: period must be >= 1");
        detail::require(offset >= 0 && offset < period, "undersampled_psd: offset must be in [0, period)");
        constexpr double two_pi = 2.0 * std::numbers::pi;
        std::complex<double> sum = 0.0;
        for (int k = 0; k < period; ++k) {
            const double theta = (w - two_pi * k) / period;
            const double s = psd(theta);
            if (s != 0.0)
                sum += std::polar(s, offset * theta);
        }
        return sum / static_cast<double>(period);
    }

    /// Points in [-pi, pi) where the undersampled spectra jump. Empty for smooth spectra.
    std::vector<double> undersampled_breakpoints(int period) const
    {
        const auto* lp = std::get_if<Lowpass>(&model_);
        if (lp == nullptr)
            return {};
        const double edge = 2.0 * std::numbers::pi * lp->doppler * period;
        const double a = wrap_angle(edge);
        const double b = wrap_angle(-edge);
        if (std::abs(a - b) < 1e-14)
            return {a};
        return {a, b};
    }

    /// True when pilots every `period` symbols sample the process without aliasing.
    bool alias_free(int period) const noexcept
    {
        const auto* lp = std::get_if<Lowpass>(&model_);
        return lp != nullptr && lp->doppler * period < 0.5;
    }

    std::string describe() const
    {
        if (const auto* gm = std::get_if<GaussMarkov>(&model_))
            return "gauss-markov(alpha=" + std::to_string(gm->alpha) + ", var=" + std::to_string(gm->variance) + ")";
        const auto& lp = std::get<Lowpass>(model_);
        return "lowpass(f_d=" + std::to_string(lp.doppler) + ", var=" + std::to_string(lp.variance) + ")";
    }

private:
    Model model_;
};

// Number of sinusoids used for lowpass spectral synthesis.
inline constexpr int lowpass_synthesis_components = 512;

/// Draws a stationary zero-mean complex Gaussian sample path.
///
/// Gauss-Markov uses the AR(1) recursion with a stationary start. Lowpass uses
/// sum-of-sinusoids synthesis: frequencies uniform in the closed passband, uniform phases,
/// equal amplitudes, so the ensemble autocorrelation is exactly that of the flat spectrum.
/// A single lowpass path is only approximately Gaussian and its time-average
/// autocorrelation carries an O(1/sqrt(components)) error; average over seeds when that matters.
inline std::vector<std::complex<double>> sample_path(const FadingProcess& process, long length, std::uint64_t seed)
{
    detail::require(length >= 1, "sample_path: length must be >= 1");
    Rng rng(seed);
    std::vector<std::complex<double>> path(static_cast<std::size_t>(length));

    if (const auto* gm = std::get_if<GaussMarkov>(&process.model())) {
        const double innovation = (1.0 - gm->alpha * gm->alpha) * gm->variance;
        std::complex<double> h = rng.complex_normal(gm->variance);
        path[0] = h;
        for (std::size_t k = 1; k < path.size(); ++k) {
            h = gm->alpha * h + rng.complex_normal(innovation);
            path[k] = h;
        }
        return path;
    }

    const auto& lp = std::get<Lowpass>(process.model());
    const double edge = 2.0 * std::numbers::pi * lp.doppler;
    const double amplitude = std::sqrt(lp.variance / lowpass_synthesis_components);
    std::vector<double> freqs(lowpass_synthesis_components);
    std::vector<std::complex<double>> start(lowpass_synthesis_components);
    std::vector<std::complex<double>> step(lowpass_synthesis_components);
    for (int i = 0; i < lowpass_synthesis_components; ++i) {
        freqs[i] = rng.uniform(-edge, edge);
        start[i] = std::polar(amplitude, rng.uniform(0.0, 2.0 * std::numbers::pi));
        step[i] = std::polar(1.0, freqs[i]);
    }
    std::vector<std::complex<double>> phasor(start);
    // Recompute the phasors exactly every so often to keep rotation drift negligible.
    constexpr long resync = 4096;
    for (long n = 0; n < length; ++n) {
        if (n % resync == 0 && n > 0) {
            for (int i = 0; i < lowpass_synthesis_components; ++i)
                phasor[i] = start[i] * std::polar(1.0, freqs[i] * static_cast<double>(n));
        }
        std::complex<double> sum = 0.0;
        for (int i = 0; i < lowpass_synthesis_components; ++i) {
            sum += phasor[i];
            phasor[i] *= step[i];
        }
        path[static_cast<std::size_t>(n)] = sum;
    }
    return path;
}

} // namespace relaytrain
