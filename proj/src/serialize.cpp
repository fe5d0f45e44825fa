#include "evsim/serialize.hpp"

#include <cmath>

#include "evsim/errors.hpp"

namespace evsim {

StrictObject::StrictObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_ + ": expected object");
}

bool StrictObject::has(const std::string& key) const { return j_.contains(key); }

const Json& StrictObject::at(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw SchemaError(path_of(key) + ": missing");
    seen_.insert(key);
    return *it;
}

double StrictObject::number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) throw SchemaError(path_of(key) + ": expected number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(path_of(key) + ": not finite");
    return d;
}

std::int64_t StrictObject::integer(const std::string& key) {
    const Json& v = at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15)
            return static_cast<std::int64_t>(d);
    }
    throw SchemaError(path_of(key) + ": expected integer");
}

bool StrictObject::boolean(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_boolean()) throw SchemaError(path_of(key) + ": expected boolean");
    return v.get<bool>();
}

std::string StrictObject::string(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) throw SchemaError(path_of(key) + ": expected string");
    return v.get<std::string>();
}

std::optional<std::string> StrictObject::nullable_string(const std::string& key) {
    const Json& v = at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw SchemaError(path_of(key) + ": expected string or null");
    return v.get<std::string>();
}

StrictObject StrictObject::object(const std::string& key) { return StrictObject(at(key), path_of(key)); }

void StrictObject::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
        if (!seen_.contains(it.key())) throw SchemaError(path_of(it.key()) + ": unexpected key");
}

void to_json(Json& j, const GeoPoint& p) { j = Json{{"lat", p.latitude()}, {"lon", p.longitude()}}; }

void to_json(Json& j, const TimeWindow& w) { j = Json{{"start", w.start}, {"end", w.end}}; }

void to_json(Json& j, const Persona& p) {
    j = Json{
        {"id", p.id},
        {"home", p.home},
        {"demographics",
         {{"age", p.demographics.age},
          {"gender", to_string(p.demographics.gender)},
          {"occupation", p.demographics.occupation}}},
        {"economics",
         {{"income_level", to_string(p.economics.income_level)},
          {"price_sensitivity", p.economics.price_sensitivity}}},
        {"psychology",
         {{"risk_aversion", p.psychology.risk_aversion},
          {"range_anxiety_threshold", p.psychology.range_anxiety_threshold},
          {"patience", p.psychology.patience}}},
        {"vehicle",
         {{"model", p.vehicle.model},
          {"battery_capacity_kwh", p.vehicle.battery_capacity_kwh},
          {"consumption_kwh_per_km", p.vehicle.consumption_kwh_per_km},
          {"max_charge_power_kw", p.vehicle.max_charge_power_kw}}},
        {"habits",
         {{"preferred_window", p.habits.preferred_window},
          {"preferred_scenario", to_string(p.habits.preferred_scenario)},
          {"typical_target_soc", p.habits.typical_target_soc}}},
    };
}

void to_json(Json& j, const Quintuple& q) {
    j = Json{{"decision", q.decision},
             {"scenario", to_string(q.scenario)},
             {"time_minutes", q.time_minutes},
             {"station_id", q.station_id ? Json(*q.station_id) : Json(nullptr)},
             {"amount_kwh", q.amount_kwh},
             {"power_kw", q.power_kw},
             {"price_per_kwh", q.price_per_kwh}};
}

void to_json(Json& j, const BehaviorRecord& r) {
    j = Json{{"agent_id", r.agent_id},
             {"action", to_string(r.action)},
             {"object_id", r.object_id},
             {"timestamp", r.timestamp},
             {"quintuple", r.quintuple},
             {"reason", r.reason},
             {"location", r.location},
             {"soc_kwh", r.soc_kwh},
             {"distance_km", r.distance_km},
             {"cost", r.cost},
             {"fallback", r.fallback}};
}

void to_json(Json& j, const PlanEvent& e) {
    j = Json{{"kind", to_string(e.kind)},
             {"origin", e.origin},
             {"destination", e.destination},
             {"start", e.start},
             {"duration_minutes", e.duration_minutes},
             {"expected_distance_km", e.expected_distance_km}};
}

void to_json(Json& j, const DailyPlan& p) { j = Json{{"day_index", p.day_index}, {"events", p.events}}; }

void to_json(Json& j, const Assessment& a) { j = Json{{"score", a.score}, {"text", a.text}}; }

void to_json(Json& j, const ReflectionReport& r) {
    j = Json{{"agent_id", r.agent_id},
             {"day_index", r.day_index},
             {"timestamp", r.timestamp},
             {"plan_adherence", r.plan_adherence},
             {"satisfaction", r.satisfaction},
             {"persona_consistency", r.persona_consistency},
             {"fallback", r.fallback}};
}

GeoPoint geo_point_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    const double lat = o.number("lat");
    const double lon = o.number("lon");
    o.finish();
    try {
        return GeoPoint(lat, lon);
    } catch (const InvalidValue& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

TimeWindow time_window_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    TimeWindow w{o.integer("start"), o.integer("end")};
    o.finish();
    return w;
}

namespace {

template <typename F>
auto enum_field(StrictObject& o, const std::string& key, F parse) {
    const std::string s = o.string(key);
    try {
        return parse(s);
    } catch (const SchemaError& e) {
        throw SchemaError(o.path_of(key) + ": " + e.what());
    }
}

} // namespace

Persona persona_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    Persona p;
    p.id = o.string("id");
    p.home = geo_point_from_json(o.at("home"), o.path_of("home"));
    {
        auto d = o.object("demographics");
        const auto age = d.integer("age");
        if (age < 0 || age > 200) throw SchemaError(d.path_of("age") + ": out of range");
        p.demographics.age = static_cast<int>(age);
        p.demographics.gender = enum_field(d, "gender", parse_gender);
        p.demographics.occupation = d.string("occupation");
        d.finish();
    }
    {
        auto e = o.object("economics");
        p.economics.income_level = enum_field(e, "income_level", parse_income_level);
        p.economics.price_sensitivity = e.number("price_sensitivity");
        e.finish();
    }
    {
        auto s = o.object("psychology");
        p.psychology.risk_aversion = s.number("risk_aversion");
        p.psychology.range_anxiety_threshold = s.number("range_anxiety_threshold");
        p.psychology.patience = s.number("patience");
        s.finish();
    }
    {
        auto v = o.object("vehicle");
        p.vehicle.model = v.string("model");
        p.vehicle.battery_capacity_kwh = v.number("battery_capacity_kwh");
        p.vehicle.consumption_kwh_per_km = v.number("consumption_kwh_per_km");
        p.vehicle.max_charge_power_kw = v.number("max_charge_power_kw");
        v.finish();
    }
    {
        auto h = o.object("habits");
        p.habits.preferred_window =
            time_window_from_json(h.at("preferred_window"), h.path_of("preferred_window"));
        p.habits.preferred_scenario = enum_field(h, "preferred_scenario", parse_scenario);
        p.habits.typical_target_soc = h.number("typical_target_soc");
        h.finish();
    }
    o.finish();
    return p;
}

Quintuple quintuple_from_json(StrictObject& o) {
    Quintuple q;
    q.decision = o.boolean("decision");
    q.scenario = enum_field(o, "scenario", parse_scenario);
    q.time_minutes = o.integer("time_minutes");
    q.station_id = o.nullable_string("station_id");
    q.amount_kwh = o.number("amount_kwh");
    q.power_kw = o.number("power_kw");
    q.price_per_kwh = o.number("price_per_kwh");
    return q;
}

BehaviorRecord record_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    BehaviorRecord r;
    r.agent_id = o.string("agent_id");
    r.action = enum_field(o, "action", parse_action);
    r.object_id = o.string("object_id");
    r.timestamp = o.integer("timestamp");
    {
        auto q = o.object("quintuple");
        r.quintuple = quintuple_from_json(q);
        q.finish();
    }
    r.reason = o.string("reason");
    r.location = geo_point_from_json(o.at("location"), o.path_of("location"));
    r.soc_kwh = o.number("soc_kwh");
    r.distance_km = o.number("distance_km");
    r.cost = o.number("cost");
    r.fallback = o.boolean("fallback");
    o.finish();
    return r;
}

PlanEvent plan_event_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    PlanEvent e;
    e.kind = enum_field(o, "kind", parse_event_kind);
    e.origin = geo_point_from_json(o.at("origin"), o.path_of("origin"));
    e.destination = geo_point_from_json(o.at("destination"), o.path_of("destination"));
    e.start = o.integer("start");
    e.duration_minutes = o.integer("duration_minutes");
    e.expected_distance_km = o.number("expected_distance_km");
    o.finish();
    return e;
}

DailyPlan plan_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    DailyPlan p;
    p.day_index = o.integer("day_index");
    const Json& events = o.at("events");
    if (!events.is_array()) throw SchemaError(o.path_of("events") + ": expected array");
    for (std::size_t i = 0; i < events.size(); ++i)
        p.events.push_back(plan_event_from_json(events[i], o.path_of("events") + "[" + std::to_string(i) + "]"));
    o.finish();
    return p;
}

Assessment assessment_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    Assessment a{o.number("score"), o.string("text")};
    o.finish();
    return a;
}

ReflectionReport reflection_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    ReflectionReport r;
    r.agent_id = o.string("agent_id");
    r.day_index = o.integer("day_index");
    r.timestamp = o.integer("timestamp");
    r.plan_adherence = assessment_from_json(o.at("plan_adherence"), o.path_of("plan_adherence"));
    r.satisfaction = assessment_from_json(o.at("satisfaction"), o.path_of("satisfaction"));
    r.persona_consistency =
        assessment_from_json(o.at("persona_consistency"), o.path_of("persona_consistency"));
    r.fallback = o.boolean("fallback");
    o.finish();
    return r;
}

std::string canonical(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

} // namespace evsim
