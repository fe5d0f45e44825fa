#include "evsim/domain.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "evsim/errors.hpp"

namespace evsim {

StrandedError::StrandedError(std::string agent_id, double required_kwh, double available_kwh)
    : Error([&] {
          std::ostringstream os;
          os << "agent " << agent_id << " stranded: needs " << required_kwh << " kWh, has "
             << available_kwh << " kWh";
          return os.str();
      }()),
      agent_id_(std::move(agent_id)),
      required_kwh_(required_kwh),
      available_kwh_(available_kwh) {}

SimClock::SimClock(Minutes sim_time) : sim_time_(sim_time) {
    if (sim_time < 0) throw InvalidValue("sim_time must be >= 0");
}

GeoPoint::GeoPoint(double latitude, double longitude) : latitude_(latitude), longitude_(longitude) {
    if (!(latitude >= -90.0 && latitude <= 90.0))
        throw InvalidValue("latitude out of range [-90,90]: " + std::to_string(latitude));
    if (!(longitude >= -180.0 && longitude <= 180.0))
        throw InvalidValue("longitude out of range [-180,180]: " + std::to_string(longitude));
}

bool TimeWindow::contains(Minutes tod) const {
    if (start == end) return true;
    if (start < end) return tod >= start && tod < end;
    return tod >= start || tod < end;
}

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Gender, 3> kGenders{{
    {Gender::female, "female"}, {Gender::male, "male"}, {Gender::other, "other"}}};
constexpr NameTable<IncomeLevel, 3> kIncomes{{
    {IncomeLevel::low, "low"}, {IncomeLevel::mid, "mid"}, {IncomeLevel::high, "high"}}};
constexpr NameTable<ChargingScenario, 4> kScenarios{{{ChargingScenario::home, "home"},
                                                     {ChargingScenario::work, "work"},
                                                     {ChargingScenario::public_station, "public"},
                                                     {ChargingScenario::en_route, "en_route"}}};
constexpr NameTable<BehaviorAction, 5> kActions{{{BehaviorAction::start_charging, "start_charging"},
                                                 {BehaviorAction::stop_charging, "stop_charging"},
                                                 {BehaviorAction::skip_charging, "skip_charging"},
                                                 {BehaviorAction::travel, "travel"},
                                                 {BehaviorAction::idle, "idle"}}};
constexpr NameTable<EventKind, 4> kEventKinds{{{EventKind::work_shift, "work_shift"},
                                               {EventKind::trip, "trip"},
                                               {EventKind::break_time, "break"},
                                               {EventKind::leisure, "leisure"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) {
    for (const auto& [e, name] : table)
        if (e == v) return name;
    return "?";
}

template <typename E, std::size_t N>
E parse_name(const NameTable<E, N>& table, std::string_view s, std::string_view what) {
    for (const auto& [e, name] : table)
        if (name == s) return e;
    throw SchemaError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

bool in_closed(double v, double lo, double hi) { return v >= lo && v <= hi; }

} // namespace

std::string_view to_string(Gender v) { return name_of(kGenders, v); }
std::string_view to_string(IncomeLevel v) { return name_of(kIncomes, v); }
std::string_view to_string(ChargingScenario v) { return name_of(kScenarios, v); }
std::string_view to_string(BehaviorAction v) { return name_of(kActions, v); }
std::string_view to_string(EventKind v) { return name_of(kEventKinds, v); }

Gender parse_gender(std::string_view s) { return parse_name(kGenders, s, "gender"); }
IncomeLevel parse_income_level(std::string_view s) { return parse_name(kIncomes, s, "income_level"); }
ChargingScenario parse_scenario(std::string_view s) { return parse_name(kScenarios, s, "scenario"); }
BehaviorAction parse_action(std::string_view s) { return parse_name(kActions, s, "action"); }
EventKind parse_event_kind(std::string_view s) { return parse_name(kEventKinds, s, "event kind"); }

std::vector<Violation> validate_persona(const Persona& p) {
    std::vector<Violation> out;
    auto check = [&](bool ok, const char* field, const char* message) {
        if (!ok) out.push_back({field, message});
    };
    check(!p.id.empty(), "id", "must be non-empty");
    check(p.demographics.age >= 16 && p.demographics.age <= 100, "demographics.age",
          "must be in [16,100]");
    check(in_closed(p.economics.price_sensitivity, 0.0, 1.0), "economics.price_sensitivity",
          "must be in [0,1]");
    check(in_closed(p.psychology.risk_aversion, 0.0, 1.0), "psychology.risk_aversion",
          "must be in [0,1]");
    check(p.psychology.range_anxiety_threshold > 0.0 && p.psychology.range_anxiety_threshold < 1.0,
          "psychology.range_anxiety_threshold", "must be in (0,1)");
    check(in_closed(p.psychology.patience, 0.0, 1.0), "psychology.patience", "must be in [0,1]");
    check(p.vehicle.battery_capacity_kwh > 0.0 && std::isfinite(p.vehicle.battery_capacity_kwh),
          "vehicle.battery_capacity_kwh", "must be > 0");
    check(p.vehicle.consumption_kwh_per_km > 0.0 && std::isfinite(p.vehicle.consumption_kwh_per_km),
          "vehicle.consumption_kwh_per_km", "must be > 0");
    check(p.vehicle.max_charge_power_kw > 0.0 && std::isfinite(p.vehicle.max_charge_power_kw),
          "vehicle.max_charge_power_kw", "must be > 0");
    const auto& w = p.habits.preferred_window;
    check(w.start >= 0 && w.start < kMinutesPerDay && w.end >= 0 && w.end <= kMinutesPerDay,
          "habits.preferred_window", "bounds must be time-of-day minutes");
    check(p.habits.typical_target_soc > 0.0 && p.habits.typical_target_soc <= 1.0,
          "habits.typical_target_soc", "must be in (0,1]");
    return out;
}

std::vector<Violation> validate_record(const BehaviorRecord& r, double capacity) {
    std::vector<Violation> out;
    auto check = [&](bool ok, const char* field, const char* message) {
        if (!ok) out.push_back({field, message});
    };
    const auto& q = r.quintuple;
    check(r.timestamp >= 0, "timestamp", "must be >= 0");
    check(q.amount_kwh >= 0.0, "quintuple.amount_kwh", "must be >= 0");
    check(q.power_kw >= 0.0, "quintuple.power_kw", "must be >= 0");
    check(q.price_per_kwh >= 0.0, "quintuple.price_per_kwh", "must be >= 0");
    check(q.amount_kwh <= capacity, "quintuple.amount_kwh", "must not exceed battery capacity");
    if (!q.decision) {
        check(!q.station_id.has_value(), "quintuple.station_id", "must be absent when decision is false");
        check(q.amount_kwh == 0.0, "quintuple.amount_kwh", "must be 0 when decision is false");
    }
    check(r.soc_kwh >= 0.0 && r.soc_kwh <= capacity, "soc_kwh", "must be in [0, capacity]");
    check(r.distance_km >= 0.0, "distance_km", "must be >= 0");
    check(r.cost >= 0.0, "cost", "must be >= 0");
    return out;
}

double DailyPlan::total_distance_km() const {
    double total = 0.0;
    for (const auto& e : events) total += e.expected_distance_km;
    return total;
}

std::vector<Violation> validate_plan(const DailyPlan& plan) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < plan.events.size(); ++i) {
        const auto& e = plan.events[i];
        const std::string path = "events[" + std::to_string(i) + "]";
        if (e.start < 0 || e.start >= kMinutesPerDay)
            out.push_back({path + ".start", "must be a time of day"});
        if (e.duration_minutes < 0) out.push_back({path + ".duration_minutes", "must be >= 0"});
        if (e.end() > kMinutesPerDay) out.push_back({path, "must end within the day"});
        if (!(e.expected_distance_km >= 0.0))
            out.push_back({path + ".expected_distance_km", "must be >= 0"});
        if ((e.expected_distance_km == 0.0) != (e.origin == e.destination))
            out.push_back({path + ".expected_distance_km", "must be 0 iff origin == destination"});
        if (i > 0 && plan.events[i - 1].end() > e.start)
            out.push_back({path + ".start", "overlaps or precedes the previous event"});
    }
    return out;
}

std::vector<Violation> validate_reflection(const ReflectionReport& r) {
    std::vector<Violation> out;
    auto score = [&](const Assessment& a, const char* field) {
        if (!in_closed(a.score, 0.0, 1.0)) out.push_back({field, "score must be in [0,1]"});
    };
    score(r.plan_adherence, "plan_adherence.score");
    score(r.satisfaction, "satisfaction.score");
    score(r.persona_consistency, "persona_consistency.score");
    if (r.day_index < 0) out.push_back({"day_index", "must be >= 0"});
    return out;
}

double quantize_price(double value) { return std::round(value * 10000.0) / 10000.0; }

} // namespace evsim
