#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qballot/cli.hpp"
#include "qballot/error.hpp"

using namespace qballot;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot read scenario file '" + path + "'");
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qballot: quantum anonymous voting and group multiplication simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, backend, format = "text";
    std::optional<std::uint64_t> seed;

    for (const char* name : {"run", "verify", "sweep", "attack"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("scenario", scenario_path, "scenario file")->required();
        sub->add_option("--out", out_path, "write the report to this path instead of stdout");
        sub->add_option("--seed", seed, "override [run] seed");
        sub->add_option("--backend", backend, "override [run] backend: dense, branch or both");
        sub->add_option("--format", format, "text or jsonl");
    }
    app.get_subcommand("run")->description("execute the scenario's protocol (or its attack block)");
    app.get_subcommand("verify")->description("invariant suite: privacy, orthogonality, backend agreement");
    app.get_subcommand("sweep")->description("enumerate every vote vector and check the tally");
    app.get_subcommand("attack")->description("run the [attack] block");

    CLI11_PARSE(app, argc, argv);

    const Command command = parse_command(app.get_subcommands().front()->get_name());
    try {
        const ReportFormat fmt = parse_report_format(format);
        ScenarioConfig config = parse_scenario(read_file(scenario_path));
        if (seed) {
            config.seed = *seed;
        }
        if (!backend.empty()) {
            config.backend = parse_backend_choice(backend);
        }
        const RunReport report = execute(config, command);
        const std::string text = emit_report(report, fmt);
        if (out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "error: cannot write '" << out_path << "'\n";
                return 1;
            }
            out << text;
        }
        return exit_code_for(report);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const InvariantError& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return 2;
    } catch (const BudgetError& e) {
        std::cerr << "resource budget exceeded: " << e.what() << "\nhint: switch to the branch backend (--backend branch)\n";
        return 3;
    }
}
