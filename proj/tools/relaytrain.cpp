// SPDX-License-Identifier: Apache-2.0
//
// relaytrain: reproduce the rate, power-profile, bit-energy and estimator-validation
// experiments from a config file.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "relaytrain/config.hpp"
#include "relaytrain/experiments.hpp"

namespace {

using relaytrain::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Training and power allocation for pilot-assisted relay channels"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool paper_literal = false;
    std::optional<std::string> snr_def;
    int jobs = 1;

    app.add_option("--config", config_path, "experiment config file")->required();
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--out", out_dir, "override the output directory");
    app.add_flag("--paper-literal", paper_literal,
                 "overlapped DF repetition: bound relay decoding by the relay-destination term as printed");
    app.add_option("--snr-def", snr_def, "SNR axis: source = P_s/noise, total = (P_s + P_r)/noise")
        ->check(CLI::IsMember({"source", "total"}));
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));

    auto* rates = app.add_subcommand("rates", "optimized rate vs SNR for every scheme (rates.csv, rates_vs_m.csv)");
    auto* profile = app.add_subcommand("profile", "optimized per-symbol power distribution (profile.csv)");
    auto* ebn0 = app.add_subcommand("ebn0", "normalized bit energy vs SNR (ebn0.csv)");
    auto* validate = app.add_subcommand("validate", "Monte Carlo check of the estimation error variances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : code(ExitCode::config_error);
    }

    try {
        auto config = relaytrain::load_config(config_path);
        if (seed) {
            config.optimizer.seed = *seed;
            if (auto* mc = std::get_if<relaytrain::MonteCarlo>(&config.optimizer.integrator))
                mc->seed = *seed;
        }
        if (out_dir)
            config.output_dir = *out_dir;
        if (paper_literal)
            config.optimizer.rate_options.repetition_bound = relaytrain::RepetitionBound::printed;
        if (snr_def)
            config.optimizer.snr_definition =
                *snr_def == "total" ? relaytrain::SnrDefinition::total : relaytrain::SnrDefinition::source_only;

        if (rates->parsed())
            return relaytrain::cmd_rates(config, jobs, std::cout);
        if (profile->parsed())
            return relaytrain::cmd_profile(config, jobs, std::cout);
        if (ebn0->parsed())
            return relaytrain::cmd_ebn0(config, jobs, std::cout);
        if (validate->parsed())
            return relaytrain::cmd_validate(config, jobs, std::cout);
    } catch (const relaytrain::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return code(ExitCode::config_error);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return code(ExitCode::config_error);
    } catch (const relaytrain::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return code(ExitCode::numerical_failure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return code(ExitCode::numerical_failure);
    }
    return code(ExitCode::config_error);
}
