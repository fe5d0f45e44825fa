#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evsim {

using Minutes = std::int64_t;
inline constexpr Minutes kMinutesPerDay = 1440;

/// Simulation time in whole minutes since scenario start.
class SimClock {
public:
    SimClock() = default;
    explicit SimClock(Minutes sim_time);

    Minutes sim_time() const { return sim_time_; }
    std::int64_t day_index() const { return sim_time_ / kMinutesPerDay; }
    Minutes time_of_day() const { return sim_time_ % kMinutesPerDay; }

    auto operator<=>(const SimClock&) const = default;

private:
    Minutes sim_time_ = 0;
};

class GeoPoint {
public:
    GeoPoint() = default;
    /// Throws InvalidValue when latitude is outside [-90,90] or longitude
    /// outside [-180,180].
    GeoPoint(double latitude, double longitude);

    double latitude() const { return latitude_; }
    double longitude() const { return longitude_; }

    bool operator==(const GeoPoint&) const = default;

private:
    double latitude_ = 0.0;
    double longitude_ = 0.0;
};

/// Half-open time-of-day range [start, end). A window with start > end wraps
/// past midnight; start == end is the whole day.
struct TimeWindow {
    Minutes start = 0;
    Minutes end = kMinutesPerDay;

    bool contains(Minutes time_of_day) const;
    bool operator==(const TimeWindow&) const = default;
};

enum class Gender { female, male, other };
enum class IncomeLevel { low, mid, high };
enum class ChargingScenario { home, work, public_station, en_route };
enum class BehaviorAction { start_charging, stop_charging, skip_charging, travel, idle };
enum class EventKind { work_shift, trip, break_time, leisure };

std::string_view to_string(Gender v);
std::string_view to_string(IncomeLevel v);
std::string_view to_string(ChargingScenario v);
std::string_view to_string(BehaviorAction v);
std::string_view to_string(EventKind v);

// Parsers throw SchemaError on unknown names.
Gender parse_gender(std::string_view s);
IncomeLevel parse_income_level(std::string_view s);
ChargingScenario parse_scenario(std::string_view s);
BehaviorAction parse_action(std::string_view s);
EventKind parse_event_kind(std::string_view s);

struct Persona {
    struct Demographics {
        int age = 0;
        Gender gender = Gender::other;
        std::string occupation;
        bool operator==(const Demographics&) const = default;
    };
    struct Economics {
        IncomeLevel income_level = IncomeLevel::mid;
        double price_sensitivity = 0.5;
        bool operator==(const Economics&) const = default;
    };
    struct Psychology {
        double risk_aversion = 0.5;
        double range_anxiety_threshold = 0.2; // soc fraction, open interval (0,1)
        double patience = 0.5;
        bool operator==(const Psychology&) const = default;
    };
    struct Vehicle {
        std::string model;
        double battery_capacity_kwh = 75.0;
        double consumption_kwh_per_km = 0.15;
        double max_charge_power_kw = 60.0;
        bool operator==(const Vehicle&) const = default;
    };
    struct Habits {
        TimeWindow preferred_window;
        ChargingScenario preferred_scenario = ChargingScenario::public_station;
        double typical_target_soc = 0.9; // (0,1]
        bool operator==(const Habits&) const = default;
    };

    std::string id;
    GeoPoint home;
    Demographics demographics;
    Economics economics;
    Psychology psychology;
    Vehicle vehicle;
    Habits habits;

    bool operator==(const Persona&) const = default;
};

/// One violated invariant, addressed by a dotted field path.
struct Violation {
    std::string field;
    std::string message;
    bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate_persona(const Persona& p);

/// The decision bundle attached to every behavior record. Seven fields; the
/// name follows common usage in the charging-behavior literature.
struct Quintuple {
    bool decision = false;
    ChargingScenario scenario = ChargingScenario::en_route;
    Minutes time_minutes = 0;
    std::optional<std::string> station_id;
    double amount_kwh = 0.0;
    double power_kw = 0.0;
    double price_per_kwh = 0.0;

    bool operator==(const Quintuple&) const = default;
};

/// The {action, object, time} behavior tuple plus decision details and the
/// agent's state after the behavior.
struct BehaviorRecord {
    std::string agent_id;
    BehaviorAction action = BehaviorAction::idle;
    std::string object_id;
    Minutes timestamp = 0;
    Quintuple quintuple;
    std::string reason;

    GeoPoint location;
    double soc_kwh = 0.0;
    double distance_km = 0.0; // travel records only
    double cost = 0.0;        // stop_charging records only
    bool fallback = false;    // decision substituted by the baseline rule

    bool operator==(const BehaviorRecord&) const = default;
};

std::vector<Violation> validate_record(const BehaviorRecord& r, double battery_capacity_kwh);

struct PlanEvent {
    EventKind kind = EventKind::trip;
    GeoPoint origin;
    GeoPoint destination;
    Minutes start = 0; // time of day
    Minutes duration_minutes = 0;
    double expected_distance_km = 0.0;

    Minutes end() const { return start + duration_minutes; }
    bool operator==(const PlanEvent&) const = default;
};

struct DailyPlan {
    std::int64_t day_index = 0;
    std::vector<PlanEvent> events;

    double total_distance_km() const;
    bool operator==(const DailyPlan&) const = default;
};

std::vector<Violation> validate_plan(const DailyPlan& plan);

struct Assessment {
    double score = 0.5;
    std::string text;
    bool operator==(const Assessment&) const = default;
};

/// End-of-day self evaluation for one agent.
struct ReflectionReport {
    std::string agent_id;
    std::int64_t day_index = 0;
    Minutes timestamp = 0;
    Assessment plan_adherence;
    Assessment satisfaction;
    Assessment persona_consistency;
    bool fallback = false;

    bool operator==(const ReflectionReport&) const = default;
};

std::vector<Violation> validate_reflection(const ReflectionReport& r);

/// Rounds a price to the 4 fractional digits used for currency amounts.
double quantize_price(double value);

} // namespace evsim
