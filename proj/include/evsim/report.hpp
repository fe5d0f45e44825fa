#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "evsim/config.hpp"
#include "evsim/domain.hpp"
#include "evsim/serialize.hpp"

namespace evsim {

/// The artifacts of a finished run, as read back from its directory.
struct RunData {
    ScenarioConfig config;
    std::vector<Persona> personas;
    std::vector<BehaviorRecord> behavior;
    std::vector<ReflectionReport> reflections;
};

/// Throws ArtifactError if a required file is missing or unreadable.
RunData load_run(const std::filesystem::path& run_dir);

struct AgentSummary {
    std::string agent_id;
    double total_km = 0.0;
    double total_kwh_charged = 0.0;
    double total_cost = 0.0;
    int charge_count = 0;
    double mean_satisfaction = 0.0;
    int strandings = 0;
    int fallback_decisions = 0;
    bool operator==(const AgentSummary&) const = default;
};

inline constexpr int kHoursPerWeek = 168;

struct RunSummary {
    std::vector<AgentSummary> agents; // by agent id
    AgentSummary fleet;               // sums; satisfaction is the mean of agent means
    std::array<double, kHoursPerWeek> load_kw{}; // mean fleet charging power per hour of week
    bool operator==(const RunSummary&) const = default;
};

/// Pure function of the logs. Charging energy is spread evenly over each
/// session's [start, end) before binning by hour.
RunSummary summarize(const std::vector<BehaviorRecord>& behavior, const std::vector<ReflectionReport>& reflections,
                     int horizon_days);

Json summary_to_json(const RunSummary& s);
std::string summary_csv(const RunSummary& s);
std::string load_csv(const RunSummary& s);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

Json build_geojson(const RunData& run);
std::string build_html(const RunData& run);

enum class ExportFormat { geojson, html, csv };

/// Writes the export next to the logs and returns the files written.
std::vector<std::filesystem::path> export_run(const std::filesystem::path& run_dir, ExportFormat format);

/// Writes summary.json for a run directory.
std::filesystem::path write_summary(const std::filesystem::path& run_dir);

} // namespace evsim
