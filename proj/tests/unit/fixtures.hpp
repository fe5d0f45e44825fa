#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "evsim/config.hpp"
#include "evsim/domain.hpp"

namespace fixtures {

inline evsim::Persona persona(const std::string& id = "driver-01") {
    evsim::Persona p;
    p.id = id;
    p.home = evsim::GeoPoint(31.2304, 121.4737);
    p.demographics = {41, evsim::Gender::male, "taxi driver"};
    p.economics = {evsim::IncomeLevel::mid, 0.5};
    p.psychology = {0.5, 0.2, 0.5};
    p.vehicle = {"BYD e6", 75.0, 0.15, 60.0};
    p.habits = {{22 * 60, 6 * 60}, evsim::ChargingScenario::home, 0.9};
    return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("evsim-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Small fast scenario for engine tests.
inline evsim::ScenarioConfig small_config(int agents = 3, int days = 2) {
    evsim::ScenarioConfig c = evsim::default_config();
    c.num_agents = agents;
    c.horizon_days = days;
    c.retry.initial_backoff = std::chrono::milliseconds(0);
    return c;
}

} // namespace fixtures
