// Command-line front end: run a scenario, export a run, validate a config.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "evsim/config.hpp"
#include "evsim/engine.hpp"
#include "evsim/errors.hpp"
#include "evsim/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& provider,
            const std::string& out) {
    evsim::ScenarioConfig config;
    try {
        config = config_path.empty() ? evsim::default_config() : evsim::load_config(config_path);
        if (seed) config.seed = *seed;
        if (!provider.empty()) config.provider = provider == "live" ? evsim::ProviderKind::live : evsim::ProviderKind::mock;
        if (config.provider == evsim::ProviderKind::live && config.llm.api_key.empty() && !std::getenv("LLM_API_KEY")) {
            std::cerr << "error: the live provider needs LLM_API_KEY\n";
            return kExitConfig;
        }
    } catch (const evsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        const evsim::RunArtifacts art = evsim::run_scenario(config, std::filesystem::path(out));
        evsim::write_summary(out);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        int strandings = 0, fallbacks = 0;
        for (const auto& a : art.agents) {
            strandings += a.strandings;
            fallbacks += a.fallback_decisions;
        }
        std::printf("%d agents, %d days: %zu behavior records, %zu reflections, %d strandings, %d fallback decisions "
                    "(%.2fs)\nbehavior sha256 %s\nartifacts in %s\n",
                    config.num_agents, config.horizon_days, art.behavior.size(), art.reflections.size(), strandings,
                    fallbacks, secs, art.behavior_digest.c_str(), out.c_str());
    } catch (const evsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_export(const std::string& run_dir, const std::string& format) {
    const evsim::ExportFormat f = format == "geojson" ? evsim::ExportFormat::geojson
                                  : format == "html"  ? evsim::ExportFormat::html
                                                      : evsim::ExportFormat::csv;
    try {
        for (const auto& p : evsim::export_run(run_dir, f)) std::cout << p.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    try {
        const evsim::ScenarioConfig c = evsim::load_config(config_path);
        std::cout << config_path << ": ok (" << c.num_agents << " agents, " << c.horizon_days << " days, "
                  << c.stations.size() << " stations)\n";
    } catch (const evsim::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agent-based EV charging behavior simulator"};
    app.require_subcommand(1);

    std::string config_path, provider, out = "runs/latest";
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    run->add_option("--config", config_path, "Scenario config (JSON, // comments allowed); defaults built in");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--provider", provider, "Cognition provider")->check(CLI::IsMember({"mock", "live"}));
    run->add_option("--out", out, "Run directory")->capture_default_str();

    std::string run_dir, format;
    auto* exp = app.add_subcommand("export", "Export a finished run");
    exp->add_option("--run", run_dir, "Run directory")->required();
    exp->add_option("--format", format, "Export format")->required()->check(CLI::IsMember({"geojson", "html", "csv"}));

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "Check a scenario config");
    val->add_option("--config", validate_path, "Scenario config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (*run) return cmd_run(config_path, seed, provider, out);
    if (*exp) return cmd_export(run_dir, format);
    return cmd_validate(validate_path);
}
