#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groundcheck/errors.hpp"
#include "groundcheck/orchestrator.hpp"
#include "groundcheck/run_config.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

std::string one_line(std::string text) {
    for (auto& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

int fail(int code, const std::string& message) {
    std::cerr << "groundcheck: " << one_line(message) << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hypothesis generation, groundedness checking and evaluation over a literature corpus and a "
                 "knowledge graph."};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"build-index", "Index the literature corpus"},
        {"build-benchmark", "Split the knowledge graph and build benchmark instances"},
        {"generate", "Generate hypothesis candidates for every instance"},
        {"detect", "Score the groundedness of every candidate"},
        {"select", "Choose one candidate per instance"},
        {"evaluate", "Score the chosen predictions against gold labels"},
        {"pipeline", "Run every stage in order, reusing up-to-date artifacts"},
    };
    for (const auto& [name, description] : commands) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
        sub->add_option("--override", overrides, "Config override as dotted.key=value (repeatable)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail(kUsageError, e.what());
    }

    const auto command = groundcheck::parse_command(app.get_subcommands().front()->get_name());
    try {
        auto config = groundcheck::load_run_config(config_path, overrides);
        groundcheck::Orchestrator orchestrator(std::move(config), std::cerr);
        orchestrator.run(*command);
    } catch (const groundcheck::ConfigError& e) {
        return fail(kUsageError, e.what());
    } catch (const std::exception& e) {
        return fail(kRuntimeError, e.what());
    }
    return 0;
}
