// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: a flat `key = value` text file. Lines starting with '#' are
// comments. Lists are comma separated; numeric lists also accept `start:stop:step`.

#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "relaytrain/error.hpp"
#include "relaytrain/estimation.hpp"
#include "relaytrain/optimizer.hpp"
#include "relaytrain/rates.hpp"

namespace relaytrain {

enum class ValidationSuite { single_pilot, wiener_gauss_markov, wiener_lowpass };

inline std::string to_string(ValidationSuite s)
{
    switch (s) {
    case ValidationSuite::single_pilot:
        return "single_pilot";
    case ValidationSuite::wiener_gauss_markov:
        return "wiener_gauss_markov";
    case ValidationSuite::wiener_lowpass:
        return "wiener_lowpass";
    }
    return "?";
}

struct ValidationSettings {
    std::vector<ValidationSuite> suites = {ValidationSuite::single_pilot, ValidationSuite::wiener_gauss_markov,
                                           ValidationSuite::wiener_lowpass};
    double tolerance = 0.05; // max relative deviation per offset
    long trials = 1000000;   // single-pilot draws
    long blocks = 20000;     // Wiener blocks after edge discard
    int window = 32;         // K: the smoother uses 2K+1 pilots
    int period = 12;
    double pilot = 1.0;
    double variance = 16.0;
    double alpha = 0.99;          // Gauss-Markov suite
    double lowpass_doppler = 0.02; // lowpass suite; alias-free at `period`
};

struct ExperimentConfig {
    std::string name;
    RelayNetwork network;
    std::vector<SchemeSelector> schemes;
    std::vector<Estimator> estimators;
    std::vector<double> snr_db;
    OptimizationConfig optimizer;
    std::string output_dir = "out";

    // profile subcommand
    SchemeSelector profile_scheme{Scheme::af, Protocol::non_overlapped};
    Estimator profile_estimator = Estimator::single_pilot;
    double profile_snr_db = 0.0;
    std::optional<int> profile_period; // fixed M instead of searching m_grid

    ValidationSettings validation;
};

/// Linear SNR from dB; -inf maps to 0.
inline double from_db(double db) { return std::isinf(db) && db < 0 ? 0.0 : std::pow(10.0, db / 10.0); }

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep))
        out.push_back(trim(item));
    if (!s.empty() && s.back() == sep)
        out.push_back("");
    return out;
}

class Reader {
public:
    explicit Reader(std::map<std::string, std::string> values) : values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> text(const std::string& key)
    {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }

    std::string text(const std::string& key, const std::string& fallback) { return text(key).value_or(fallback); }

    static double to_double(const std::string& key, const std::string& v)
    {
        if (v == "-inf")
            return -std::numeric_limits<double>::infinity();
        char* end = nullptr;
        errno = 0;
        const double x = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
            throw ConfigError(key + ": expected a number, got '" + v + "'");
        return x;
    }

    static long long to_integer(const std::string& key, const std::string& v)
    {
        const double x = to_double(key, v);
        if (x != std::floor(x) || std::abs(x) > 9.0e15)
            throw ConfigError(key + ": expected an integer, got '" + v + "'");
        return static_cast<long long>(x);
    }

    double number(const std::string& key, double fallback)
    {
        auto v = text(key);
        return v ? to_double(key, *v) : fallback;
    }

    long long integer(const std::string& key, long long fallback)
    {
        auto v = text(key);
        return v ? to_integer(key, *v) : fallback;
    }

    bool boolean(const std::string& key, bool fallback)
    {
        auto v = text(key);
        if (!v)
            return fallback;
        if (*v == "true" || *v == "1" || *v == "yes")
            return true;
        if (*v == "false" || *v == "0" || *v == "no")
            return false;
        throw ConfigError(key + ": expected true/false, got '" + *v + "'");
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback)
    {
        auto v = text(key);
        if (!v)
            return fallback;
        std::vector<double> out;
        if (trim(*v).empty())
            return out;
        for (const auto& item : split(*v, ',')) {
            const auto parts = split(item, ':');
            if (parts.size() == 1) {
                out.push_back(to_double(key, parts[0]));
                continue;
            }
            if (parts.size() != 3)
                throw ConfigError(key + ": ranges are start:stop:step, got '" + item + "'");
            const double start = to_double(key, parts[0]);
            const double stop = to_double(key, parts[1]);
            const double step = to_double(key, parts[2]);
            if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || stop < start)
                throw ConfigError(key + ": range needs step > 0 and stop >= start");
            const long count = std::lround(std::floor((stop - start) / step + 1e-9)) + 1;
            if (count > 100000)
                throw ConfigError(key + ": range is too long");
            for (long k = 0; k < count; ++k)
                out.push_back(start + static_cast<double>(k) * step);
        }
        return out;
    }

    std::vector<std::string> words(const std::string& key, const std::vector<std::string>& fallback)
    {
        auto v = text(key);
        if (!v)
            return fallback;
        std::vector<std::string> out;
        if (trim(*v).empty())
            return out;
        for (const auto& item : split(*v, ','))
            out.push_back(item);
        return out;
    }

    void reject_unknown() const
    {
        for (const auto& [key, value] : values_)
            if (!used_.count(key))
                throw ConfigError("unknown key '" + key + "'");
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

inline SchemeSelector parse_scheme(const std::string& key, const std::string& v)
{
    auto normalized = v;
    std::replace(normalized.begin(), normalized.end(), '-', '_');
    const auto parts = split(normalized, ':');
    if (parts.size() != 2)
        throw ConfigError(key + ": scheme must be <af|df_repetition|df_parallel>:<non_overlapped|overlapped>, got '" +
                          v + "'");
    SchemeSelector s;
    if (parts[0] == "af")
        s.scheme = Scheme::af;
    else if (parts[0] == "df_repetition")
        s.scheme = Scheme::df_repetition;
    else if (parts[0] == "df_parallel")
        s.scheme = Scheme::df_parallel;
    else
        throw ConfigError(key + ": unknown scheme '" + parts[0] + "'");
    if (parts[1] == "non_overlapped")
        s.protocol = Protocol::non_overlapped;
    else if (parts[1] == "overlapped")
        s.protocol = Protocol::overlapped;
    else
        throw ConfigError(key + ": unknown protocol '" + parts[1] + "'");
    if (s.scheme == Scheme::df_parallel && s.protocol == Protocol::overlapped)
        throw ConfigError(key + ": DF parallel coding is only defined for the non-overlapped protocol");
    return s;
}

inline Estimator parse_estimator(const std::string& key, const std::string& v)
{
    if (v == "single")
        return Estimator::single_pilot;
    if (v == "wiener")
        return Estimator::wiener;
    throw ConfigError(key + ": estimator must be single or wiener, got '" + v + "'");
}

inline SnrDefinition parse_snr_definition(const std::string& key, const std::string& v)
{
    if (v == "source")
        return SnrDefinition::source_only;
    if (v == "total")
        return SnrDefinition::total;
    throw ConfigError(key + ": expected source or total, got '" + v + "'");
}

} // namespace detail

/// Parses and fully validates a configuration. Throws ConfigError on any problem.
inline ExperimentConfig parse_config(std::istream& in)
{
    std::map<std::string, std::string> values;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(number) + ": empty key");
        if (!values.emplace(key, detail::trim(line.substr(eq + 1))).second)
            throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }

    detail::Reader r(std::move(values));
    ExperimentConfig c;
    c.name = r.text("name", "");

    try {
        const auto family = r.text("family", "gauss_markov");
        FadingProcess process;
        if (family == "gauss_markov") {
            process = FadingProcess::gauss_markov(r.number("alpha", 0.99));
            if (r.has("doppler"))
                throw ConfigError("doppler applies to the lowpass family only");
        } else if (family == "lowpass") {
            process = FadingProcess::lowpass(r.number("doppler", 0.01));
            if (r.has("alpha"))
                throw ConfigError("alpha applies to the gauss_markov family only");
        } else {
            throw ConfigError("family must be gauss_markov or lowpass, got '" + family + "'");
        }
        c.network = RelayNetwork{r.number("var_sd", 1.0), r.number("var_sr", 16.0), r.number("var_rd", 16.0),
                                 r.number("noise_var", 1.0), process};
        c.network.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    for (const auto& s : r.words("schemes", {"all"})) {
        if (s == "all")
            c.schemes.insert(c.schemes.end(), all_schemes.begin(), all_schemes.end());
        else
            c.schemes.push_back(detail::parse_scheme("schemes", s));
    }
    if (c.schemes.empty())
        throw ConfigError("schemes: list is empty");
    for (const auto& e : r.words("estimators", {"single"}))
        c.estimators.push_back(detail::parse_estimator("estimators", e));
    if (c.estimators.empty())
        throw ConfigError("estimators: list is empty");

    c.snr_db = r.numbers("snr_db", {0.0});
    if (c.snr_db.empty())
        throw ConfigError("snr_db: grid is empty");

    auto& o = c.optimizer;
    o.m_grid.clear();
    for (double m : r.numbers("m_grid", {4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40}))
        o.m_grid.push_back(static_cast<int>(detail::Reader::to_integer("m_grid", std::to_string(m))));
    o.restarts = static_cast<int>(r.integer("restarts", o.restarts));
    o.step_tolerance = r.number("step_tolerance", o.step_tolerance);
    o.max_evaluations = static_cast<int>(r.integer("max_evaluations", o.max_evaluations));
    o.relay_power_ratio = r.number("relay_power_ratio", o.relay_power_ratio);
    o.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
    o.per_slot_search = r.boolean("per_slot_search", false);
    o.snr_definition = detail::parse_snr_definition("snr_definition", r.text("snr_definition", "source"));
    if (auto v = r.text("bit_energy_power"))
        o.bit_energy_power = detail::parse_snr_definition("bit_energy_power", *v);
    const auto bound = r.text("repetition_bound", "source_relay");
    if (bound == "source_relay")
        o.rate_options.repetition_bound = RepetitionBound::source_relay;
    else if (bound == "printed")
        o.rate_options.repetition_bound = RepetitionBound::printed;
    else
        throw ConfigError("repetition_bound must be source_relay or printed, got '" + bound + "'");

    const auto integrator = r.text("integrator", "quadrature");
    if (integrator == "quadrature") {
        Quadrature q;
        q.order = static_cast<int>(r.integer("quadrature_order", 16));
        const auto rule = r.text("quadrature_rule", "double_exponential");
        if (rule == "double_exponential")
            q.rule = AxisRule::double_exponential;
        else if (rule == "gauss_laguerre")
            q.rule = AxisRule::gauss_laguerre;
        else
            throw ConfigError("quadrature_rule must be double_exponential or gauss_laguerre");
        if (q.order < 2 || q.order > 128)
            throw ConfigError("quadrature_order must be in [2, 128]");
        o.integrator = q;
        if (r.has("mc_samples"))
            throw ConfigError("mc_samples requires integrator = monte_carlo");
    } else if (integrator == "monte_carlo") {
        MonteCarlo mc;
        mc.samples = r.integer("mc_samples", 100000);
        mc.seed = o.seed;
        if (mc.samples < 100)
            throw ConfigError("mc_samples must be >= 100");
        o.integrator = mc;
    } else {
        throw ConfigError("integrator must be quadrature or monte_carlo, got '" + integrator + "'");
    }
    try {
        o.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    c.output_dir = r.text("output_dir", c.output_dir);
    c.profile_scheme = detail::parse_scheme("profile_scheme", r.text("profile_scheme", "af:non_overlapped"));
    c.profile_estimator = detail::parse_estimator("profile_estimator", r.text("profile_estimator", "single"));
    c.profile_snr_db = r.number("profile_snr_db", 0.0);
    if (r.has("profile_period")) {
        const auto m = r.integer("profile_period", 0);
        if (m < 4 || m % 2 != 0)
            throw ConfigError("profile_period must be an even integer >= 4");
        c.profile_period = static_cast<int>(m);
    }

    auto& v = c.validation;
    v.suites.clear();
    for (const auto& s : r.words("validate_suites", {"single_pilot", "wiener_gauss_markov", "wiener_lowpass"})) {
        if (s == "single_pilot")
            v.suites.push_back(ValidationSuite::single_pilot);
        else if (s == "wiener_gauss_markov")
            v.suites.push_back(ValidationSuite::wiener_gauss_markov);
        else if (s == "wiener_lowpass")
            v.suites.push_back(ValidationSuite::wiener_lowpass);
        else
            throw ConfigError("validate_suites: unknown suite '" + s + "'");
    }
    if (v.suites.empty())
        throw ConfigError("validate_suites: list is empty");
    v.tolerance = r.number("validate_tolerance", v.tolerance);
    v.trials = r.integer("validate_trials", v.trials);
    v.blocks = r.integer("validate_blocks", v.blocks);
    v.window = static_cast<int>(r.integer("validate_window", v.window));
    v.period = static_cast<int>(r.integer("validate_period", v.period));
    v.pilot = r.number("validate_pilot", v.pilot);
    v.variance = r.number("validate_variance", v.variance);
    v.alpha = r.number("validate_alpha", v.alpha);
    v.lowpass_doppler = r.number("validate_lowpass_doppler", v.lowpass_doppler);
    if (!(v.tolerance > 0.0))
        throw ConfigError("validate_tolerance must be positive");
    if (v.trials < 10000)
        throw ConfigError("validate_trials must be >= 10000");
    if (v.blocks < 10000)
        throw ConfigError("validate_blocks must be >= 10000");
    if (v.window < 8)
        throw ConfigError("validate_window must be >= 8");
    if (v.period < 2)
        throw ConfigError("validate_period must be >= 2");
    if (!(v.pilot >= 0.0) || !(v.variance > 0.0))
        throw ConfigError("validate_pilot must be >= 0 and validate_variance > 0");
    if (!(v.alpha >= 0.0 && v.alpha < 1.0))
        throw ConfigError("validate_alpha must be in [0, 1)");
    if (!(v.lowpass_doppler > 0.0 && v.lowpass_doppler * v.period < 0.5))
        throw ConfigError("validate_lowpass_doppler must be positive and alias-free at validate_period");

    r.reject_unknown();
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

} // namespace relaytrain
