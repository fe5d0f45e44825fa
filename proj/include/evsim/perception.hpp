#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evsim/environment.hpp"
#include "evsim/serialize.hpp"

namespace evsim {

/// What the agent sees of its own trip, grouped by dimension.
struct TravelPerception {
    // scenario
    double congestion_multiplier = 1.0;
    // time
    Minutes now = 0;
    std::optional<Minutes> next_event_time;
    // space
    GeoPoint location;
    std::optional<GeoPoint> next_destination;
    double distance_to_next_km = 0.0;
    // energy
    double soc_kwh = 0.0;
    double soc_fraction = 0.0;

    bool operator==(const TravelPerception&) const = default;
};

/// What the agent sees of one reachable station, grouped by dimension.
struct StationPerception {
    std::string station_id;
    GeoPoint location;
    // scenario
    int free_piles = 0;
    int pile_count = 0;
    // time
    Minutes travel_minutes = 0;
    Minutes predicted_queue_minutes = 0;
    Minutes charge_minutes = 0;
    // space
    double distance_km = 0.0;
    // energy
    double pile_power_kw = 0.0;
    double effective_power_kw = 0.0;
    // price
    double price_per_kwh = 0.0;
    bool off_peak = false;

    bool operator==(const StationPerception&) const = default;
};

struct PerceptionSnapshot {
    std::string agent_id;
    double target_kwh = 0.0; // energy the agent would add to reach its usual target
    TravelPerception travel;
    std::vector<StationPerception> stations; // by distance, then station_id

    bool operator==(const PerceptionSnapshot&) const = default;
};

/// Agent-side inputs to perception that the environment does not hold.
struct AgentOutlook {
    std::string agent_id;
    double typical_target_soc = 1.0;
    std::optional<Minutes> next_event_time;
    std::optional<GeoPoint> next_destination;
};

/// Pure function of its inputs. Queue prediction uses only vehicles already
/// admitted at each station.
PerceptionSnapshot perceive(const AgentOutlook& agent, const EnvironmentState& env, SimClock clock, double radius_km);

void to_json(Json& j, const TravelPerception& t);
void to_json(Json& j, const StationPerception& s);
void to_json(Json& j, const PerceptionSnapshot& s);
PerceptionSnapshot snapshot_from_json(const Json& j, const std::string& path = "$");

} // namespace evsim
