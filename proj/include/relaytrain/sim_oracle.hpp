// SPDX-License-Identifier: Apache-2.0
//
// Link-level Monte Carlo check of the analytic estimation error variances: draw fading
// paths, observe noisy pilots, run the estimators and measure |h - h_hat|^2.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "relaytrain/estimation.hpp"
#include "relaytrain/fading.hpp"
#include "relaytrain/parallel.hpp"
#include "relaytrain/rng.hpp"

namespace relaytrain {

struct OffsetStat {
    int offset = 0;
    long samples = 0;
    double empirical = 0.0;       // mean |h - h_hat|^2
    double half_width = 0.0;      // 99% confidence half-width of `empirical`
    double analytic = 0.0;        // infinite-window (or exact single-pilot) value
    double window_analytic = 0.0; // exact value for the finite window actually used
    double relative_deviation = 0.0;
    std::complex<double> mean_error; // sample mean of h - h_hat
    double mean_error_half_width = 0.0;
};

struct SimReport {
    std::string suite;
    std::vector<OffsetStat> rows;
    bool regularized = false; // diagonal loading was needed for the normal equations

    double max_relative_deviation() const
    {
        double worst = 0.0;
        for (const auto& r : rows)
            worst = std::max(worst, std::abs(r.relative_deviation));
        return worst;
    }

    bool within(double tolerance) const { return max_relative_deviation() <= tolerance; }

    static constexpr const char* csv_header =
        "suite,offset,samples,empirical,half_width,analytic,window_analytic,relative_deviation,"
        "mean_error_re,mean_error_im,mean_error_half_width";

    void write_csv(std::ostream& out, bool header = true) const
    {
        if (header)
            out << csv_header << '\n';
        char line[512];
        for (const auto& r : rows) {
            std::snprintf(line, sizeof line, "%s,%d,%ld,%.10g,%.6g,%.10g,%.10g,%.6g,%.6g,%.6g,%.6g\n", suite.c_str(),
                          r.offset, r.samples, r.empirical, r.half_width, r.analytic, r.window_analytic,
                          r.relative_deviation, r.mean_error.real(), r.mean_error.imag(), r.mean_error_half_width);
            out << line;
        }
    }
};

namespace detail {

inline constexpr double normal_quantile_995 = 2.5758293035489004;

// Two-sided 99% Student-t quantile for small batch counts; normal beyond 60 dof.
inline double t_quantile_995(int dof)
{
    static constexpr double table[] = {63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499, 3.355, 3.250, 3.169,
                                       3.106,  3.055, 3.012, 2.977, 2.947, 2.921, 2.898, 2.878, 2.861, 2.845,
                                       2.831,  2.819, 2.807, 2.797, 2.787, 2.779, 2.771, 2.763, 2.756, 2.750};
    if (dof <= 30)
        return table[std::max(dof, 1) - 1];
    if (dof <= 40)
        return 2.750 + (2.704 - 2.750) * (dof - 30) / 10.0;
    if (dof <= 60)
        return 2.704 + (2.660 - 2.704) * (dof - 40) / 20.0;
    return normal_quantile_995;
}

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::complex<double> err_sum;
    long count = 0;
};

} // namespace detail

/// Single-pilot MMSE estimate at the pilot position over independent trials.
inline SimReport empirical_single_pilot(const FadingProcess& process, double pilot, double noise_var, long trials,
                                        std::uint64_t seed, int jobs = 1)
{
    detail::require(trials >= 10000, "empirical_single_pilot: trials must be >= 1e4");
    const double variance = process.variance();
    const double gain = single_pilot_gain(variance, noise_var, pilot);
    const double root = std::sqrt(pilot);

    constexpr int chunks = 32;
    auto parts = parallel_map<detail::Moments>(chunks, jobs, [&](std::size_t c) {
        Rng rng(stream_seed(seed, c));
        const long n = trials / chunks + (static_cast<long>(c) < trials % chunks ? 1 : 0);
        detail::Moments m;
        for (long t = 0; t < n; ++t) {
            const auto h = rng.complex_normal(variance);
            const auto y = h * root + rng.complex_normal(noise_var);
            const auto e = h - gain * y;
            const double sq = std::norm(e);
            m.sum += sq;
            m.sum_sq += sq * sq;
            m.err_sum += e;
        }
        m.count = n;
        return m;
    });

    detail::Moments total;
    for (const auto& p : parts) {
        total.sum += p.sum;
        total.sum_sq += p.sum_sq;
        total.err_sum += p.err_sum;
        total.count += p.count;
    }
    const double n = static_cast<double>(total.count);
    const double mean = total.sum / n;
    const double sd = std::sqrt(std::max(total.sum_sq / n - mean * mean, 0.0));

    OffsetStat row;
    row.offset = 0;
    row.samples = total.count;
    row.empirical = mean;
    row.half_width = detail::normal_quantile_995 * sd / std::sqrt(n);
    row.analytic = single_pilot_error_variance(variance, noise_var, pilot);
    row.window_analytic = row.analytic;
    row.relative_deviation = (mean - row.analytic) / row.analytic;
    row.mean_error = total.err_sum / n;
    // Each component of h - h_hat has variance err/2.
    row.mean_error_half_width = detail::normal_quantile_995 * std::sqrt(0.5 * row.analytic / n);
    return {"single_pilot", {row}, false};
}

/// Finite-window linear MMSE smoother over 2K+1 pilots, checked offset by offset against
/// the infinite-window Wiener error variance. The finite window can only do worse, so
/// `window_analytic` >= `analytic`; the gap shrinks quickly with K.
///
/// Statistics come from 32 independent path segments, each with K edge blocks discarded
/// on both sides, so batch means are independent and the confidence interval is exact.
inline SimReport empirical_wiener(const FadingProcess& process, int period, double pilot, double noise_var,
                                  int window, long blocks, std::uint64_t seed, int jobs = 1)
{
    detail::require(period >= 2, "empirical_wiener: period must be >= 2");
    detail::require(window >= 8, "empirical_wiener: window K must be >= 8");
    detail::require(blocks >= 10000, "empirical_wiener: blocks must be >= 1e4");
    detail::require(noise_var > 0.0 && pilot >= 0.0, "empirical_wiener: need noise_var > 0 and pilot >= 0");

    const int taps = 2 * window + 1;
    const double root = std::sqrt(pilot);
    const double variance = process.variance();

    // Pilot covariance R and cross-covariances c_m; real because r(k) is real and even.
    Eigen::MatrixXd cov(taps, taps);
    for (int a = 0; a < taps; ++a)
        for (int b = 0; b < taps; ++b)
            cov(a, b) = pilot * process.autocorrelation(static_cast<long>(a - b) * period) + (a == b ? noise_var : 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    bool regularized = false;
    if (llt.info() != Eigen::Success) {
        cov.diagonal().array() += 1e-12 * cov.diagonal().maxCoeff();
        llt.compute(cov);
        regularized = true;
        if (llt.info() != Eigen::Success)
            throw NumericalError("empirical_wiener: pilot covariance is not positive definite");
    }
    std::vector<Eigen::VectorXd> weights(static_cast<std::size_t>(period));
    std::vector<double> window_error(static_cast<std::size_t>(period));
    for (int m = 0; m < period; ++m) {
        Eigen::VectorXd c(taps);
        for (int a = 0; a < taps; ++a)
            c(a) = root * process.autocorrelation(m - static_cast<long>(a - window) * period);
        weights[m] = llt.solve(c);
        window_error[m] = variance - c.dot(weights[m]);
    }

    constexpr int segments = 32;
    struct Batch {
        std::vector<double> err;
        std::vector<std::complex<double>> bias;
        long count = 0;
    };
    auto batches = parallel_map<Batch>(segments, jobs, [&](std::size_t s) {
        const long interior = blocks / segments + (static_cast<long>(s) < blocks % segments ? 1 : 0);
        const long pilots = interior + 2 * window + 1;
        const auto path = sample_path(process, pilots * period, stream_seed(seed, 2 * s));
        Rng noise(stream_seed(seed, 2 * s + 1));
        std::vector<std::complex<double>> y(static_cast<std::size_t>(pilots));
        for (long l = 0; l < pilots; ++l)
            y[l] = path[l * period] * root + noise.complex_normal(noise_var);

        Batch b;
        b.err.assign(period, 0.0);
        b.bias.assign(period, 0.0);
        b.count = interior;
        for (long l = window; l < window + interior; ++l) {
            for (int m = 0; m < period; ++m) {
                std::complex<double> est = 0.0;
                const auto& w = weights[m];
                for (int a = 0; a < taps; ++a)
                    est += w(a) * y[l - window + a];
                const auto e = path[l * period + m] - est;
                b.err[m] += std::norm(e);
                b.bias[m] += e;
            }
        }
        for (int m = 0; m < period; ++m) {
            b.err[m] /= static_cast<double>(interior);
            b.bias[m] /= static_cast<double>(interior);
        }
        return b;
    });

    SimReport report;
    report.suite = "wiener";
    report.regularized = regularized;
    const double t = detail::t_quantile_995(segments - 1);
    for (int m = 0; m < period; ++m) {
        double mean = 0.0, sq = 0.0, bias_sq = 0.0;
        std::complex<double> bias = 0.0;
        long count = 0;
        for (const auto& b : batches) {
            mean += b.err[m];
            bias += b.bias[m];
            count += b.count;
        }
        mean /= segments;
        bias /= static_cast<double>(segments);
        for (const auto& b : batches) {
            sq += (b.err[m] - mean) * (b.err[m] - mean);
            bias_sq += 0.5 * std::norm(b.bias[m] - bias);
        }
        OffsetStat row;
        row.offset = m;
        row.samples = count;
        row.empirical = mean;
        row.half_width = t * std::sqrt(sq / (segments - 1) / segments);
        row.analytic = wiener_error_variance(process, period, m, noise_var, pilot);
        row.window_analytic = window_error[m];
        row.relative_deviation = (mean - row.analytic) / row.analytic;
        row.mean_error = bias;
        row.mean_error_half_width = t * std::sqrt(bias_sq / (segments - 1) / segments);
        report.rows.push_back(row);
    }
    return report;
}

} // namespace relaytrain
