#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

namespace cascade
{
    inline constexpr int kExitOk = 0;
    inline constexpr int kExitFailed = 1;
    inline constexpr int kExitUsage = 2;

    struct ExperimentOutcome
    {
        int exit_code = kExitOk;
        /// Empty when the config itself was rejected.
        nlohmann::json report;
        /// Table rows for commands that have one (speeds, simulate, groups, drift).
        std::string csv;
        std::string diagnostic;
        /// "output" and "csv" keys of the config; command-line paths take precedence.
        std::string output_path;
        std::string csv_path;
    };

    /// Commands: speeds, simulate, groups, drift, couple, kernel-check, check.
    /// An explicit command overrides the config's "command" key; when both are
    /// given they must agree. Unknown keys, bad types and invalid rates give
    /// kExitUsage; module errors and failed verifications give kExitFailed.
    ExperimentOutcome run_experiment(const nlohmann::json &config, std::string_view command = {});

    /// Parses text as JSON first; parse errors map to kExitUsage.
    ExperimentOutcome run_experiment_text(std::string_view text, std::string_view command = {});

    /// Report text as written to disk: two-space indented JSON and a newline.
    std::string render_report(const nlohmann::json &report);
} // namespace cascade
