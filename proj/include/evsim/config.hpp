#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evsim/cognition.hpp"
#include "evsim/environment.hpp"
#include "evsim/live_provider.hpp"
#include "evsim/mock_provider.hpp"

namespace evsim {

struct StationSpec {
    std::string station_id;
    std::string name;
    GeoPoint location;
    int pile_count = 1;
    double pile_power_kw = 60.0;
    std::string tariff_id;
};

enum class ProviderKind { mock, live };

struct FaultInjection {
    double malformed_rate = 0.0;
    double transport_error_rate = 0.0;
};

struct ScenarioConfig {
    int num_agents = 10;
    int horizon_days = 7;
    double initial_soc_kwh = 60.0;
    std::uint64_t seed = 42;
    double search_radius_km = 15.0;
    double tow_soc_fraction = 0.05;

    ProviderKind provider = ProviderKind::mock;
    LiveProviderConfig llm;
    RetryPolicy retry;
    FaultInjection faults;

    RoutingParams routing;
    BaselineWeights weights;
    ServiceArea area;
    PersonaTemplate persona_template;
    PlanTemplate plan_template;

    std::map<std::string, std::vector<TariffBand>> tariffs;
    std::vector<StationSpec> stations;

    MockSettings mock_settings() const { return {area, persona_template, plan_template, routing, weights}; }
};

/// Every violated constraint as a readable message; empty means valid.
std::vector<std::string> validate_config(const ScenarioConfig& c);

/// Parses the config document (JSON with // comments allowed). Unknown keys
/// and type errors throw ConfigError; missing keys keep their defaults.
/// Relative prompt directories resolve against `base_dir`.
ScenarioConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {});

/// Loads, parses and validates; throws ConfigError on any problem.
ScenarioConfig load_config(const std::filesystem::path& path);

Json config_to_json(const ScenarioConfig& c);

/// The shipped Shanghai taxi scenario.
ScenarioConfig default_config();

/// Builds the initial world (stations, tariffs, routing; no vehicles).
EnvironmentState build_environment(const ScenarioConfig& c);

std::string format_time_of_day(Minutes tod);

} // namespace evsim
