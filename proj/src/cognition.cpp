#include "evsim/cognition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "evsim/errors.hpp"
#include "evsim/geo.hpp"

namespace evsim {

std::string_view to_string(CognitionTask t) {
    switch (t) {
    case CognitionTask::persona: return "persona";
    case CognitionTask::plan: return "plan";
    case CognitionTask::decide: return "decide";
    case CognitionTask::reflect: return "reflect";
    }
    return "?";
}

// --- Encoding --------------------------------------------------------------

namespace {

Json encode_aggregate(const DayAggregate& a) {
    return Json{{"day_index", a.day_index},
                {"charge_count", a.charge_count},
                {"energy_kwh", a.energy_kwh},
                {"mean_price_per_kwh", a.mean_price_per_kwh}};
}

DayAggregate aggregate_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    DayAggregate a;
    a.day_index = o.integer("day_index");
    a.charge_count = static_cast<int>(o.integer("charge_count"));
    a.energy_kwh = o.number("energy_kwh");
    a.mean_price_per_kwh = o.number("mean_price_per_kwh");
    o.finish();
    return a;
}

template <typename T, typename F>
std::vector<T> array_of(StrictObject& o, const std::string& key, F each) {
    const Json& arr = o.at(key);
    if (!arr.is_array()) throw SchemaError(o.path_of(key) + ": expected array");
    std::vector<T> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(each(arr[i], o.path_of(key) + "[" + std::to_string(i) + "]"));
    return out;
}

Json parse_text(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError(std::string("response is not valid JSON: ") + e.what());
    }
}

std::string join_violations(const std::vector<Violation>& v) {
    std::string out;
    for (const auto& x : v) {
        if (!out.empty()) out += "; ";
        out += x.field + " " + x.message;
    }
    return out;
}

} // namespace

Json encode(const PersonaRequest& r) { return Json{{"agent_id", r.agent_id}, {"seed", r.seed}}; }

Json encode(const PlanRequest& r) {
    return Json{{"persona", r.persona}, {"day_index", r.day_index}, {"seed", r.seed}};
}

Json encode(const DecisionRequest& r) {
    Json long_term = Json::array();
    for (const auto& a : r.long_memory) long_term.push_back(encode_aggregate(a));
    const SimClock clock(r.clock);
    return Json{{"persona", r.persona},
                {"plan_excerpt", r.plan_excerpt},
                {"perception", r.snapshot},
                {"memory", {{"short_term", r.short_memory}, {"long_term", long_term}}},
                {"clock",
                 {{"sim_time", clock.sim_time()}, {"day_index", clock.day_index()}, {"time_of_day", clock.time_of_day()}}},
                {"idle_minutes", r.idle_minutes}};
}

Json encode(const ReflectionRequest& r) {
    return Json{{"persona", r.persona},
                {"day_index", r.day_index},
                {"plan", r.plan},
                {"day_records", r.day_records},
                {"tariff", {{"min_price_per_kwh", r.min_price_per_kwh}, {"max_price_per_kwh", r.max_price_per_kwh}}},
                {"stranded", r.stranded}};
}

Json encode(const DecisionResponse& r) {
    Json j = r.quintuple;
    j["reason"] = r.reason;
    return j;
}

PersonaRequest persona_request_from_json(const Json& j) {
    StrictObject o(j, "$");
    PersonaRequest r;
    r.agent_id = o.string("agent_id");
    const Json& seed = o.at("seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) throw SchemaError("$.seed: expected integer");
    r.seed = seed.get<std::uint64_t>();
    o.finish();
    return r;
}

PlanRequest plan_request_from_json(const Json& j) {
    StrictObject o(j, "$");
    PlanRequest r;
    r.persona = persona_from_json(o.at("persona"), "$.persona");
    r.day_index = o.integer("day_index");
    const Json& seed = o.at("seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) throw SchemaError("$.seed: expected integer");
    r.seed = seed.get<std::uint64_t>();
    o.finish();
    return r;
}

DecisionRequest decision_request_from_json(const Json& j) {
    StrictObject o(j, "$");
    DecisionRequest r;
    r.persona = persona_from_json(o.at("persona"), "$.persona");
    r.plan_excerpt = array_of<PlanEvent>(o, "plan_excerpt", [](const Json& e, const std::string& p) {
        return plan_event_from_json(e, p);
    });
    r.snapshot = snapshot_from_json(o.at("perception"), "$.perception");
    {
        auto m = o.object("memory");
        r.short_memory = array_of<BehaviorRecord>(m, "short_term", [](const Json& e, const std::string& p) {
            return record_from_json(e, p);
        });
        r.long_memory = array_of<DayAggregate>(m, "long_term", aggregate_from_json);
        m.finish();
    }
    {
        auto c = o.object("clock");
        r.clock = c.integer("sim_time");
        c.integer("day_index");
        c.integer("time_of_day");
        c.finish();
    }
    r.idle_minutes = o.integer("idle_minutes");
    o.finish();
    return r;
}

ReflectionRequest reflection_request_from_json(const Json& j) {
    StrictObject o(j, "$");
    ReflectionRequest r;
    r.persona = persona_from_json(o.at("persona"), "$.persona");
    r.day_index = o.integer("day_index");
    r.plan = plan_from_json(o.at("plan"), "$.plan");
    r.day_records = array_of<BehaviorRecord>(o, "day_records", [](const Json& e, const std::string& p) {
        return record_from_json(e, p);
    });
    {
        auto t = o.object("tariff");
        r.min_price_per_kwh = t.number("min_price_per_kwh");
        r.max_price_per_kwh = t.number("max_price_per_kwh");
        t.finish();
    }
    r.stranded = o.boolean("stranded");
    o.finish();
    return r;
}

// --- Response parsing ---------------------------------------------------------

Persona parse_persona_response(std::string_view text, const PersonaRequest& req) {
    Persona p = persona_from_json(parse_text(text));
    if (p.id != req.agent_id) throw SchemaError("$.id: expected '" + req.agent_id + "', got '" + p.id + "'");
    if (auto v = validate_persona(p); !v.empty()) throw SchemaError("persona invalid: " + join_violations(v));
    return p;
}

DailyPlan parse_plan_response(std::string_view text, const PlanRequest& req) {
    DailyPlan plan = plan_from_json(parse_text(text));
    if (plan.day_index != req.day_index) throw SchemaError("$.day_index: does not match the requested day");
    if (auto v = validate_plan(plan); !v.empty()) throw SchemaError("plan invalid: " + join_violations(v));
    return plan;
}

DecisionResponse parse_decision_response(std::string_view text, const DecisionRequest& req) {
    const Json j = parse_text(text);
    StrictObject o(j, "$");
    DecisionResponse r;
    r.quintuple = quintuple_from_json(o);
    r.reason = o.string("reason");
    o.finish();

    const auto& q = r.quintuple;
    if (q.amount_kwh < 0.0) throw SchemaError("$.amount_kwh: must be >= 0");
    if (q.power_kw < 0.0) throw SchemaError("$.power_kw: must be >= 0");
    if (q.price_per_kwh < 0.0) throw SchemaError("$.price_per_kwh: must be >= 0");
    if (q.time_minutes < req.clock) throw SchemaError("$.time_minutes: must not precede the current time");
    if (!q.decision) {
        if (q.station_id) throw SchemaError("$.station_id: must be null when decision is false");
        if (q.amount_kwh != 0.0) throw SchemaError("$.amount_kwh: must be 0 when decision is false");
        return r;
    }
    if (!q.station_id) throw SchemaError("$.station_id: required when decision is true");
    const auto& stations = req.snapshot.stations;
    auto st = std::find_if(stations.begin(), stations.end(),
                           [&](const StationPerception& s) { return s.station_id == *q.station_id; });
    if (st == stations.end()) throw SchemaError("$.station_id: '" + *q.station_id + "' is not among perceived stations");
    const double room = req.persona.vehicle.battery_capacity_kwh - req.snapshot.travel.soc_kwh;
    if (!(q.amount_kwh > 0.0)) throw SchemaError("$.amount_kwh: must be > 0 when charging");
    if (q.amount_kwh > room + 1e-9) throw SchemaError("$.amount_kwh: exceeds free battery capacity");
    if (!(q.power_kw > 0.0) || q.power_kw > st->effective_power_kw + 1e-9)
        throw SchemaError("$.power_kw: must be in (0, station effective power]");
    return r;
}

ReflectionReport parse_reflection_response(std::string_view text, const ReflectionRequest& req) {
    const Json j = parse_text(text);
    StrictObject o(j, "$");
    ReflectionReport r;
    r.agent_id = req.persona.id;
    r.day_index = req.day_index;
    r.timestamp = (req.day_index + 1) * kMinutesPerDay;
    r.plan_adherence = assessment_from_json(o.at("plan_adherence"), "$.plan_adherence");
    r.satisfaction = assessment_from_json(o.at("satisfaction"), "$.satisfaction");
    r.persona_consistency = assessment_from_json(o.at("persona_consistency"), "$.persona_consistency");
    o.finish();
    if (auto v = validate_reflection(r); !v.empty()) throw SchemaError("reflection invalid: " + join_violations(v));
    return r;
}

// --- Response schemas -----------------------------------------------------------

namespace {

Json object_schema(std::initializer_list<std::pair<const std::string, Json>> props) {
    Json properties = Json::object();
    Json required = Json::array();
    for (const auto& [k, v] : props) {
        properties[k] = v;
        required.push_back(k);
    }
    return Json{{"type", "object"}, {"properties", properties}, {"required", required}, {"additionalProperties", false}};
}

Json num(double lo, std::optional<double> hi = std::nullopt) {
    Json j{{"type", "number"}, {"minimum", lo}};
    if (hi) j["maximum"] = *hi;
    return j;
}

Json integer() { return Json{{"type", "integer"}, {"minimum", 0}}; }
Json str() { return Json{{"type", "string"}}; }
Json enum_of(std::initializer_list<const char*> values) {
    Json arr = Json::array();
    for (auto v : values) arr.push_back(v);
    return Json{{"type", "string"}, {"enum", arr}};
}

Json point_schema() { return object_schema({{"lat", num(-90, 90)}, {"lon", num(-180, 180)}}); }

Json assessment_schema() { return object_schema({{"score", num(0, 1)}, {"text", str()}}); }

} // namespace

Json response_schema(CognitionTask task) {
    switch (task) {
    case CognitionTask::persona:
        return object_schema({
            {"id", str()},
            {"home", point_schema()},
            {"demographics", object_schema({{"age", integer()},
                                            {"gender", enum_of({"female", "male", "other"})},
                                            {"occupation", str()}})},
            {"economics", object_schema({{"income_level", enum_of({"low", "mid", "high"})},
                                         {"price_sensitivity", num(0, 1)}})},
            {"psychology", object_schema({{"risk_aversion", num(0, 1)},
                                          {"range_anxiety_threshold", num(0, 1)},
                                          {"patience", num(0, 1)}})},
            {"vehicle", object_schema({{"model", str()},
                                       {"battery_capacity_kwh", num(0)},
                                       {"consumption_kwh_per_km", num(0)},
                                       {"max_charge_power_kw", num(0)}})},
            {"habits", object_schema({{"preferred_window", object_schema({{"start", integer()}, {"end", integer()}})},
                                      {"preferred_scenario", enum_of({"home", "work", "public", "en_route"})},
                                      {"typical_target_soc", num(0, 1)}})},
        });
    case CognitionTask::plan: {
        Json event = object_schema({{"kind", enum_of({"work_shift", "trip", "break", "leisure"})},
                                    {"origin", point_schema()},
                                    {"destination", point_schema()},
                                    {"start", integer()},
                                    {"duration_minutes", integer()},
                                    {"expected_distance_km", num(0)}});
        return object_schema({{"day_index", integer()}, {"events", Json{{"type", "array"}, {"items", event}}}});
    }
    case CognitionTask::decide:
        return object_schema({{"decision", Json{{"type", "boolean"}}},
                              {"scenario", enum_of({"home", "work", "public", "en_route"})},
                              {"time_minutes", integer()},
                              {"station_id", Json{{"type", Json::array({"string", "null"})}}},
                              {"amount_kwh", num(0)},
                              {"power_kw", num(0)},
                              {"price_per_kwh", num(0)},
                              {"reason", str()}});
    case CognitionTask::reflect:
        return object_schema({{"plan_adherence", assessment_schema()},
                              {"satisfaction", assessment_schema()},
                              {"persona_consistency", assessment_schema()}});
    }
    return Json::object();
}

// --- Baseline policy ---------------------------------------------------------

std::optional<std::string> choose_station(std::span<const StationOption> options, const BaselineWeights& w) {
    const StationOption* best = nullptr;
    double best_score = 0.0;
    for (const auto& o : options) {
        const double score = w.distance * o.distance_km + w.price * o.price_per_kwh + w.wait * o.wait_minutes;
        if (!best || score < best_score || (score == best_score && o.station_id < best->station_id)) {
            best = &o;
            best_score = score;
        }
    }
    if (!best) return std::nullopt;
    return best->station_id;
}

namespace {

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

DecisionResponse no_charge(const DecisionRequest& req, std::string reason) {
    DecisionResponse r;
    r.quintuple.decision = false;
    r.quintuple.scenario = ChargingScenario::en_route;
    r.quintuple.time_minutes = req.clock;
    r.reason = std::move(reason);
    return r;
}

constexpr double kHomeRadiusKm = 2.0;

} // namespace

DecisionResponse baseline_decision(const DecisionRequest& req, const BaselineWeights& w) {
    const auto& persona = req.persona;
    const auto& travel = req.snapshot.travel;
    const double capacity = persona.vehicle.battery_capacity_kwh;
    const double room = capacity - travel.soc_kwh;
    const double soc = travel.soc_fraction;
    const double threshold = persona.psychology.range_anxiety_threshold;
    const double target = persona.habits.typical_target_soc;

    if (room <= 0.0) return no_charge(req, "battery full; nothing to charge");

    const bool anxious = soc < threshold;
    const bool opportunistic = !anxious && req.idle_minutes >= kOpportunisticIdleMinutes && soc < target;
    if (!anxious && !opportunistic)
        return no_charge(req, format("soc %.1f%% is comfortable (threshold %.0f%%, target %.0f%%, idle %lld min)",
                                     soc * 100.0, threshold * 100.0, target * 100.0,
                                     static_cast<long long>(req.idle_minutes)));

    std::vector<StationOption> options;
    for (const auto& s : req.snapshot.stations) {
        if (opportunistic && !s.off_peak) continue;
        options.push_back({s.station_id, s.distance_km, s.price_per_kwh, static_cast<double>(s.predicted_queue_minutes)});
    }
    const auto chosen = choose_station(options, w);
    if (!chosen)
        return no_charge(req, anxious ? "low battery but no station within reach"
                                      : "no off-peak station within reach; waiting");

    const auto& st = *std::find_if(req.snapshot.stations.begin(), req.snapshot.stations.end(),
                                   [&](const StationPerception& s) { return s.station_id == *chosen; });
    double amount = std::min(req.snapshot.target_kwh, room);
    if (amount <= 0.0) amount = room;

    DecisionResponse r;
    auto& q = r.quintuple;
    q.decision = true;
    if (great_circle_km(st.location, persona.home) <= kHomeRadiusKm)
        q.scenario = ChargingScenario::home;
    else if (anxious && !req.plan_excerpt.empty())
        q.scenario = ChargingScenario::en_route;
    else
        q.scenario = ChargingScenario::public_station;
    q.time_minutes = req.clock + st.travel_minutes + st.predicted_queue_minutes;
    q.station_id = st.station_id;
    q.amount_kwh = amount;
    q.power_kw = st.effective_power_kw;
    q.price_per_kwh = st.price_per_kwh;
    r.reason = anxious
                   ? format("soc %.1f%% below range-anxiety threshold %.0f%%; %s is best (%.2f km, %.4f/kWh, wait %lld min)",
                            soc * 100.0, threshold * 100.0, st.station_id.c_str(), st.distance_km, st.price_per_kwh,
                            static_cast<long long>(st.predicted_queue_minutes))
                   : format("off-peak idle window of %lld min and soc %.1f%% below target %.0f%%; %s is best (%.2f km, "
                            "%.4f/kWh, wait %lld min)",
                            static_cast<long long>(req.idle_minutes), soc * 100.0, target * 100.0,
                            st.station_id.c_str(), st.distance_km, st.price_per_kwh,
                            static_cast<long long>(st.predicted_queue_minutes));
    return r;
}

ReflectionReport baseline_reflection(const ReflectionRequest& req) {
    const auto& persona = req.persona;
    const std::string leg_prefix = "leg:" + std::to_string(req.day_index) + ":";

    int planned = 0;
    for (const auto& e : req.plan.events)
        if (e.expected_distance_km > 0.0) ++planned;
    int executed = 0;
    for (const auto& r : req.day_records)
        if (r.action == BehaviorAction::travel && r.object_id.starts_with(leg_prefix)) ++executed;
    double adherence = planned == 0 ? 1.0 : std::min(1.0, static_cast<double>(executed) / planned);
    if (req.stranded) adherence *= 0.5;

    const double price_span = req.max_price_per_kwh - req.min_price_per_kwh;
    double satisfaction_sum = 0.0;
    int charges = 0;
    Minutes total_wait = 0;
    double total_cost = 0.0;
    double total_kwh = 0.0;
    Minutes arrival = 0;
    for (const auto& r : req.day_records) {
        if (r.action == BehaviorAction::travel && r.object_id.starts_with("detour:")) arrival = r.timestamp;
        if (r.action != BehaviorAction::stop_charging) continue;
        const Minutes wait = std::max<Minutes>(0, r.quintuple.time_minutes - arrival);
        const double norm_price = price_span > 0.0 ? (r.quintuple.price_per_kwh - req.min_price_per_kwh) / price_span : 0.0;
        double s = 1.0 - 0.5 * (1.0 - persona.psychology.patience) * std::min(1.0, static_cast<double>(wait) / 60.0) -
                   0.5 * persona.economics.price_sensitivity * std::clamp(norm_price, 0.0, 1.0);
        satisfaction_sum += std::clamp(s, 0.0, 1.0);
        ++charges;
        total_wait += wait;
        total_cost += r.cost;
        total_kwh += r.quintuple.amount_kwh;
    }
    const double satisfaction = charges == 0 ? (req.stranded ? 0.2 : 1.0) : satisfaction_sum / charges;

    int decisions = 0;
    int consistent = 0;
    for (const auto& r : req.day_records) {
        if (r.action != BehaviorAction::start_charging) continue;
        ++decisions;
        const double soc = r.soc_kwh / persona.vehicle.battery_capacity_kwh;
        if (soc < persona.psychology.range_anxiety_threshold ||
            persona.habits.preferred_window.contains(r.timestamp % kMinutesPerDay) ||
            r.quintuple.scenario == persona.habits.preferred_scenario)
            ++consistent;
    }
    const double consistency = decisions == 0 ? 1.0 : static_cast<double>(consistent) / decisions;

    ReflectionReport rep;
    rep.agent_id = persona.id;
    rep.day_index = req.day_index;
    rep.timestamp = (req.day_index + 1) * kMinutesPerDay;
    rep.plan_adherence = {adherence, format("completed %d of %d planned driving events%s", executed, planned,
                                            req.stranded ? "; stranded during the day" : "")};
    rep.satisfaction = {
        satisfaction,
        charges == 0 ? std::string(req.stranded ? "no charging and the vehicle ran out of energy" : "no charging needed")
                     : format("%d charge(s): %.2f kWh, total cost %.4f, waited %lld min in total", charges, total_kwh,
                              total_cost, static_cast<long long>(total_wait))};
    rep.persona_consistency = {consistency, format("%d of %d charging decisions matched habits or range anxiety",
                                                   consistent, decisions)};
    return rep;
}

// --- Cognition ---------------------------------------------------------------

Cognition::Cognition(CognitionProvider& provider, RetryPolicy policy, Sleeper sleeper)
    : provider_(provider), policy_(policy), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string Cognition::call_with_retries(CognitionTask task, const Json& request, const RepairHint* repair) {
    auto delay = policy_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            ++calls_;
            return provider_.complete(task, request, repair);
        } catch (const ProviderError&) {
            if (attempt >= policy_.transport_retries) throw;
            sleeper_(delay);
            delay *= 2;
        }
    }
}

template <typename Parse>
auto Cognition::ask(CognitionTask task, const Json& request, Parse parse) {
    std::optional<RepairHint> hint;
    for (int attempt = 0;; ++attempt) {
        std::string text = call_with_retries(task, request, hint ? &*hint : nullptr);
        try {
            return parse(text);
        } catch (const SchemaError& e) {
            if (attempt >= policy_.schema_repairs) throw;
            ++repairs_;
            hint = RepairHint{std::move(text), e.what()};
        }
    }
}

Persona Cognition::generate_persona(const PersonaRequest& req) {
    return ask(CognitionTask::persona, encode(req), [&](const std::string& t) { return parse_persona_response(t, req); });
}

DailyPlan Cognition::plan_day(const PlanRequest& req) {
    return ask(CognitionTask::plan, encode(req), [&](const std::string& t) { return parse_plan_response(t, req); });
}

DecisionResponse Cognition::decide(const DecisionRequest& req) {
    return ask(CognitionTask::decide, encode(req), [&](const std::string& t) { return parse_decision_response(t, req); });
}

ReflectionReport Cognition::reflect(const ReflectionRequest& req) {
    return ask(CognitionTask::reflect, encode(req),
               [&](const std::string& t) { return parse_reflection_response(t, req); });
}

} // namespace evsim
