// SPDX-License-Identifier: Apache-2.0
//
// Experiment pipelines behind the command-line subcommands. Every table is computed in a
// fixed grid order and formatted with fixed precision, so a config and seed determine the
// output bytes regardless of the worker count.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "relaytrain/config.hpp"
#include "relaytrain/optimizer.hpp"
#include "relaytrain/parallel.hpp"
#include "relaytrain/sim_oracle.hpp"

namespace relaytrain {

struct RateCell {
    SchemeSelector scheme;
    Estimator estimator = Estimator::single_pilot;
    double snr_db = 0.0;
    TrainingSearch search;
};

namespace detail {

inline std::string fmt(double x)
{
    if (std::isinf(x))
        return x < 0 ? "-inf" : "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::ofstream open_output(const std::string& dir, const std::string& file)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    const auto path = (std::filesystem::path(dir) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path + "'");
    return out;
}

inline std::string cell_label(const SchemeSelector& s, Estimator e)
{
    return to_string(s.scheme) + "," + to_string(s.protocol) + "," + to_string(e);
}

} // namespace detail

/// Optimizes every (scheme, estimator, SNR) cell; cells run concurrently, rows come back in
/// grid order.
inline std::vector<RateCell> compute_rate_cells(const ExperimentConfig& config, int jobs)
{
    std::vector<RateCell> cells;
    for (const auto& s : config.schemes)
        for (auto e : config.estimators)
            for (double db : config.snr_db)
                cells.push_back({s, e, db, {}});
    return parallel_map<RateCell>(cells.size(), jobs, [&](std::size_t i) {
        RateCell cell = cells[i];
        cell.search = optimize_training(cell.scheme, config.network, cell.estimator, from_db(cell.snr_db),
                                        config.optimizer);
        return cell;
    });
}

inline constexpr const char* rates_header = "scheme,protocol,estimator,snr_db,best_m,rate_bits";
inline constexpr const char* rates_vs_m_header = "scheme,protocol,estimator,snr_db,m,rate_bits";

inline void write_rates_csv(std::ostream& out, const std::vector<RateCell>& cells)
{
    out << rates_header << '\n';
    for (const auto& c : cells)
        out << detail::cell_label(c.scheme, c.estimator) << ',' << detail::fmt(c.snr_db) << ','
            << c.search.best_period << ',' << detail::fmt(c.search.best.rate) << '\n';
}

inline void write_rates_vs_m_csv(std::ostream& out, const std::vector<RateCell>& cells)
{
    out << rates_vs_m_header << '\n';
    for (const auto& c : cells)
        for (const auto& row : c.search.table)
            out << detail::cell_label(c.scheme, c.estimator) << ',' << detail::fmt(c.snr_db) << ','
                << row.training.period << ',' << detail::fmt(row.rate) << '\n';
}

/// `rates`: rates.csv (best period per cell), rates_vs_m.csv (full period sweep) and the
/// best scheme per (estimator, SNR) on `log`.
inline int cmd_rates(const ExperimentConfig& config, int jobs, std::ostream& log)
{
    const auto cells = compute_rate_cells(config, jobs);
    auto out = detail::open_output(config.output_dir, "rates.csv");
    write_rates_csv(out, cells);
    auto sweep = detail::open_output(config.output_dir, "rates_vs_m.csv");
    write_rates_vs_m_csv(sweep, cells);

    for (auto e : config.estimators) {
        for (double db : config.snr_db) {
            const RateCell* best = nullptr;
            for (const auto& c : cells)
                if (c.estimator == e && c.snr_db == db && (!best || c.search.best.rate > best->search.best.rate))
                    best = &c;
            log << "argmax estimator=" << to_string(e) << " snr_db=" << detail::fmt(db) << ": "
                << to_string(best->scheme.scheme) << ' ' << to_string(best->scheme.protocol) << " M="
                << best->search.best_period << " rate=" << detail::fmt(best->search.best.rate) << '\n';
        }
    }
    return static_cast<int>(ExitCode::ok);
}

struct ProfileRow {
    std::string node; // source | relay
    std::string kind; // pilot | data | overlap
    int symbol = 0;   // 1-based position in the block
    double power = 0.0;
};

inline constexpr const char* profile_header = "node,kind,symbol,power";

/// Bar layout of the power-distribution figures: source pilot, source data, relay pilot,
/// relay data; overlapped schemes add the source symbols sent during the relay phase.
inline std::vector<ProfileRow> profile_rows(const AllocationResult& r)
{
    const int period = r.training.period;
    const int half = period / 2;
    std::vector<ProfileRow> rows;
    rows.push_back({"source", "pilot", 1, r.training.pilot_source});
    for (std::size_t i = 0; i < r.alloc.source_data.size(); ++i)
        rows.push_back({"source", "data", static_cast<int>(i) + 2, r.alloc.source_data[i]});
    for (std::size_t i = 0; i < r.alloc.source_overlap.size(); ++i)
        rows.push_back({"source", "overlap", static_cast<int>(i) + 2 + half, r.alloc.source_overlap[i]});
    rows.push_back({"relay", "pilot", half + 1, r.training.pilot_relay});
    for (std::size_t i = 0; i < r.alloc.relay_data.size(); ++i)
        rows.push_back({"relay", "data", static_cast<int>(i) + 2 + half, r.alloc.relay_data[i]});
    return rows;
}

inline AllocationResult compute_profile(const ExperimentConfig& config, int jobs)
{
    const double snr = from_db(config.profile_snr_db);
    if (config.profile_period) {
        return optimize_allocation(config.profile_scheme, config.network, *config.profile_period,
                                   config.profile_estimator, snr, config.optimizer);
    }
    return optimize_training(config.profile_scheme, config.network, config.profile_estimator, snr, config.optimizer,
                             jobs)
        .best;
}

/// `profile`: per-symbol powers of the optimized block as profile.csv.
inline int cmd_profile(const ExperimentConfig& config, int jobs, std::ostream& log)
{
    const auto result = compute_profile(config, jobs);
    auto out = detail::open_output(config.output_dir, "profile.csv");
    out << profile_header << '\n';
    for (const auto& row : profile_rows(result))
        out << row.node << ',' << row.kind << ',' << row.symbol << ',' << detail::fmt(row.power) << '\n';
    log << "profile " << to_string(config.profile_scheme.scheme) << ' ' << to_string(config.profile_scheme.protocol)
        << " estimator=" << to_string(config.profile_estimator) << " snr_db=" << detail::fmt(config.profile_snr_db)
        << " M=" << result.training.period << " rate=" << detail::fmt(result.rate) << '\n';
    return static_cast<int>(ExitCode::ok);
}

struct BitEnergyRow {
    SchemeSelector scheme;
    Estimator estimator = Estimator::single_pilot;
    double snr_db = 0.0;
    int best_m = 0;
    double rate = 0.0;
    std::optional<double> ebn0_db; // empty at zero rate
};

struct BitEnergyMinimum {
    SchemeSelector scheme;
    Estimator estimator = Estimator::single_pilot;
    double snr_db = 0.0;
    double ebn0_db = 0.0;
    bool interior = false; // strictly inside the SNR grid
};

inline std::vector<BitEnergyRow> bit_energy_rows(const ExperimentConfig& config, const std::vector<RateCell>& cells)
{
    std::vector<BitEnergyRow> rows;
    for (const auto& c : cells) {
        BitEnergyRow row{c.scheme, c.estimator, c.snr_db, c.search.best_period, c.search.best.rate, std::nullopt};
        if (c.search.best.rate > 0.0)
            row.ebn0_db = bit_energy(c.search.best.rate, from_db(c.snr_db), config.optimizer).db;
        rows.push_back(row);
    }
    return rows;
}

/// Minimum E_b/N_0 per (scheme, estimator) series; ties keep the lowest SNR.
inline std::vector<BitEnergyMinimum> bit_energy_minima(const std::vector<BitEnergyRow>& rows)
{
    std::vector<BitEnergyMinimum> out;
    for (std::size_t start = 0; start < rows.size();) {
        std::size_t end = start;
        while (end < rows.size() && rows[end].scheme == rows[start].scheme &&
               rows[end].estimator == rows[start].estimator)
            ++end;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        const BitEnergyRow* best = nullptr;
        for (std::size_t k = start; k < end; ++k) {
            lo = std::min(lo, rows[k].snr_db);
            hi = std::max(hi, rows[k].snr_db);
            if (rows[k].ebn0_db && (!best || *rows[k].ebn0_db < *best->ebn0_db))
                best = &rows[k];
        }
        if (best)
            out.push_back({best->scheme, best->estimator, best->snr_db, *best->ebn0_db,
                           best->snr_db > lo && best->snr_db < hi});
        start = end;
    }
    return out;
}

inline constexpr const char* ebn0_header = "scheme,protocol,estimator,snr_db,best_m,rate_bits,ebn0_db,note";

/// `ebn0`: optimized rates mapped to normalized bit energy, ebn0.csv, plus the minimum per
/// series on `log`.
inline int cmd_ebn0(const ExperimentConfig& config, int jobs, std::ostream& log)
{
    const auto cells = compute_rate_cells(config, jobs);
    const auto rows = bit_energy_rows(config, cells);
    auto out = detail::open_output(config.output_dir, "ebn0.csv");
    out << ebn0_header << '\n';
    for (const auto& r : rows) {
        out << detail::cell_label(r.scheme, r.estimator) << ',' << detail::fmt(r.snr_db) << ',' << r.best_m << ','
            << detail::fmt(r.rate) << ',';
        if (r.ebn0_db)
            out << detail::fmt(*r.ebn0_db) << ",";
        else
            out << ",zero_rate";
        out << '\n';
        if (!r.ebn0_db)
            log << "warning: zero rate at " << detail::cell_label(r.scheme, r.estimator)
                << " snr_db=" << detail::fmt(r.snr_db) << ", bit energy skipped\n";
    }
    for (const auto& m : bit_energy_minima(rows))
        log << "minimum " << detail::cell_label(m.scheme, m.estimator) << ": ebn0_db=" << detail::fmt(m.ebn0_db)
            << " at snr_db=" << detail::fmt(m.snr_db) << (m.interior ? " (interior)" : " (grid edge)") << '\n';
    return static_cast<int>(ExitCode::ok);
}

inline SimReport run_validation_suite(const ValidationSettings& v, ValidationSuite suite, std::uint64_t seed, int jobs)
{
    const auto stream = stream_seed(seed, static_cast<std::uint64_t>(suite));
    switch (suite) {
    case ValidationSuite::single_pilot: {
        auto r = empirical_single_pilot(FadingProcess::gauss_markov(v.alpha, v.variance), v.pilot, 1.0, v.trials,
                                        stream, jobs);
        r.suite = to_string(suite);
        return r;
    }
    case ValidationSuite::wiener_gauss_markov: {
        auto r = empirical_wiener(FadingProcess::gauss_markov(v.alpha, v.variance), v.period, v.pilot, 1.0, v.window,
                                  v.blocks, stream, jobs);
        r.suite = to_string(suite);
        return r;
    }
    case ValidationSuite::wiener_lowpass: {
        auto r = empirical_wiener(FadingProcess::lowpass(v.lowpass_doppler, v.variance), v.period, v.pilot, 1.0,
                                  v.window, v.blocks, stream, jobs);
        r.suite = to_string(suite);
        return r;
    }
    }
    throw ConfigError("unknown validation suite");
}

inline constexpr const char* validate_summary_header = "suite,max_relative_deviation,tolerance,regularized,pass";

/// `validate`: one CSV per suite plus validate_summary.csv. Returns 3 if any suite exceeds
/// the tolerance.
inline int cmd_validate(const ExperimentConfig& config, int jobs, std::ostream& log)
{
    const auto& v = config.validation;
    auto summary = detail::open_output(config.output_dir, "validate_summary.csv");
    summary << validate_summary_header << '\n';
    bool all_pass = true;
    for (auto suite : v.suites) {
        const auto report = run_validation_suite(v, suite, config.optimizer.seed, jobs);
        auto out = detail::open_output(config.output_dir, "validate_" + to_string(suite) + ".csv");
        report.write_csv(out);
        const bool pass = report.within(v.tolerance);
        all_pass = all_pass && pass;
        summary << report.suite << ',' << detail::fmt(report.max_relative_deviation()) << ','
                << detail::fmt(v.tolerance) << ',' << (report.regularized ? "true" : "false") << ','
                << (pass ? "true" : "false") << '\n';
        log << (pass ? "PASS " : "FAIL ") << report.suite
            << " max_relative_deviation=" << detail::fmt(report.max_relative_deviation())
            << " tolerance=" << detail::fmt(v.tolerance) << (report.regularized ? " (diagonal loading used)" : "")
            << '\n';
    }
    return static_cast<int>(all_pass ? ExitCode::ok : ExitCode::validation_failure);
}

} // namespace relaytrain
