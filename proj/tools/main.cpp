// cascade_lab: batch runner for the cascade rollback experiments.
//
//   cascade_lab <command> --config run.json [--output report.json] [--csv table.csv]
//
// Exit status: 0 pass, 1 failed verification or module error, 2 usage/config error.

#include "cascade/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace
{
    bool write_file(const std::string &path, const std::string &body)
    {
        std::ofstream out(path, std::ios::binary);
        out << body;
        return static_cast<bool>(out);
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Cascade rollback-synchronization lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_path;
    std::string csv_path;
    const char *commands[][2] = {
        {"speeds", "per-processor speed estimates against the predicted levels"},
        {"simulate", "event-driven trajectory summary"},
        {"groups", "group partition and predicted speeds"},
        {"drift", "exact drift of the gauge function on an annulus"},
        {"couple", "thinning coupling and dominance count"},
        {"kernel-check", "normalization, table and marginal residuals"},
        {"check", "Foster or transience criterion on a truncation"},
    };
    for (const auto &[name, help] : commands)
    {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--output", output_path, "report path (default: stdout)");
        sub->add_option("--csv", csv_path, "table path");
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : cascade::kExitUsage;
    }

    std::ifstream in(config_path, std::ios::binary);
    std::stringstream text;
    text << in.rdbuf();
    if (!in)
    {
        std::cerr << "cannot read " << config_path << '\n';
        return cascade::kExitUsage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    auto outcome = cascade::run_experiment_text(text.str(), command);
    if (!outcome.diagnostic.empty())
    {
        std::cerr << outcome.diagnostic << '\n';
    }
    if (outcome.report.is_null())
    {
        return outcome.exit_code;
    }

    if (output_path.empty())
    {
        output_path = outcome.output_path;
    }
    if (csv_path.empty())
    {
        csv_path = outcome.csv_path;
    }
    const std::string body = cascade::render_report(outcome.report);
    if (output_path.empty())
    {
        std::cout << body;
    }
    else if (!write_file(output_path, body))
    {
        std::cerr << "cannot write " << output_path << '\n';
        return cascade::kExitUsage;
    }

    if (!csv_path.empty())
    {
        if (outcome.csv.empty())
        {
            std::cerr << command << " has no table output\n";
            return cascade::kExitUsage;
        }
        if (!write_file(csv_path, outcome.csv))
        {
            std::cerr << "cannot write " << csv_path << '\n';
            return cascade::kExitUsage;
        }
    }
    return outcome.exit_code;
}
