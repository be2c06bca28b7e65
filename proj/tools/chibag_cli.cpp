#include "chibag/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using chibag::cli::json;
namespace cli = chibag::cli;

namespace {

int emit(const cli::RunConfig& c, const json& report, const std::string& csv, int code)
{
    const std::string text = report.dump(2) + "\n";
    const bool want_csv = c.format == "csv" && !csv.empty();
    std::cout << (want_csv ? csv : text);
    if (!c.output.empty()) {
        std::ofstream f(c.output);
        f << (want_csv ? csv : text);
        if (!f) {
            std::cerr << "cannot write " << c.output << "\n";
            return cli::exit_numerical;
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"chiral bag invariant toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_flag("--help", "print help");  // -h is taken by the grid step
    std::string config_path, output, format;
    app.add_option("--config", config_path, "JSON run config; flags override its parameters");
    app.add_option("-o,--output", output, "also write the report to this path");
    app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

    std::map<std::string, std::map<std::string, std::string>> flag_text;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, specs] : cli::command_schemas()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->set_help_flag("--help", "print help");
        subs[name] = sub;
        for (const auto& s : specs) sub->add_option("--" + s.key, flag_text[name][s.key], s.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_usage;
    }

    cli::RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw cli::UsageError("cannot read config " + config_path);
            cfg = cli::config_from_json(json::parse(in));
        }
        std::string chosen;
        for (const auto& [name, sub] : subs)
            if (sub->parsed()) chosen = name;
        if (!cfg.command.empty() && cfg.command != chosen)
            throw cli::UsageError("config is for '" + cfg.command + "' but '" + chosen + "' was requested");
        cfg.command = chosen;
        if (!output.empty()) cfg.output = output;
        if (!format.empty()) cfg.format = format;
        for (const auto& s : cli::command_schemas().at(chosen))
            if (subs[chosen]->count("--" + s.key) > 0) cfg.parameters[s.key] = cli::parse_flag(s, flag_text[chosen][s.key]);
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return cli::exit_usage;
    }

    try {
        const cli::RunResult r = cli::run(cfg);
        return emit(cfg, r.report, r.csv, r.pass ? cli::exit_pass : cli::exit_fail);
    } catch (const cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return emit(cfg, cli::error_report(cfg, "usage", e.what()), "", cli::exit_usage);
    } catch (const std::exception& e) {
        return emit(cfg, cli::error_report(cfg, "numerical", e.what()), "", cli::exit_numerical);
    }
}
