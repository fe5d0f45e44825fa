#include "evsim/mock_provider.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evsim/errors.hpp"

namespace evsim {

namespace {

constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

double round_to(double v, double step) { return std::round(v / step) * step; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    if (items.empty()) throw ConfigError("mock template has an empty choice list");
    return items[static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(items.size()) - 1))];
}

GeoPoint sample_in(Rng& rng, const ServiceArea& area) {
    return GeoPoint(round_to(rng.uniform(area.lat_min, area.lat_max), 1e-6),
                    round_to(rng.uniform(area.lon_min, area.lon_max), 1e-6));
}

GeoPoint center_of(const ServiceArea& area) {
    return GeoPoint((area.lat_min + area.lat_max) / 2.0, (area.lon_min + area.lon_max) / 2.0);
}

// Uniform over the annulus [min_km, max_km] around `from`, rejected until it
// lands inside the service area.
GeoPoint sample_near(Rng& rng, const GeoPoint& from, double min_km, double max_km, const ServiceArea& area) {
    for (int tries = 0; tries < 64; ++tries) {
        const double r = std::sqrt(rng.uniform(min_km * min_km, max_km * max_km));
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double lat = from.latitude() + r * std::cos(theta) / kKmPerDegree;
        const double lon =
            from.longitude() + r * std::sin(theta) / (kKmPerDegree * std::cos(from.latitude() * std::numbers::pi / 180.0));
        if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) continue;
        GeoPoint p(round_to(lat, 1e-6), round_to(lon, 1e-6));
        if (area.contains(p) && !(p == from)) return p;
    }
    GeoPoint c = center_of(area);
    return c == from ? sample_in(rng, area) : c;
}

} // namespace

Persona MockProvider::make_persona(const PersonaRequest& req) const {
    const auto& t = settings_.persona;
    Rng rng(mix_seed(req.seed, 0x9e75));
    Persona p;
    p.id = req.agent_id;
    p.home = sample_in(rng, settings_.area);

    p.demographics.age = static_cast<int>(rng.range(t.age_min, t.age_max));
    const double g = rng.unit();
    p.demographics.gender = g < 0.80 ? Gender::male : g < 0.98 ? Gender::female : Gender::other;
    p.demographics.occupation = pick(rng, t.occupations);

    const double inc = rng.unit();
    p.economics.income_level = inc < 0.35 ? IncomeLevel::low : inc < 0.85 ? IncomeLevel::mid : IncomeLevel::high;
    const double base_sensitivity = p.economics.income_level == IncomeLevel::low   ? 0.8
                                    : p.economics.income_level == IncomeLevel::mid ? 0.55
                                                                                   : 0.3;
    p.economics.price_sensitivity = round_to(std::clamp(base_sensitivity + rng.uniform(-0.15, 0.15), 0.0, 1.0), 1e-3);

    p.psychology.risk_aversion = round_to(rng.unit(), 1e-3);
    // More risk-averse drivers start looking for a charger earlier.
    p.psychology.range_anxiety_threshold = round_to(
        t.anxiety_min + (t.anxiety_max - t.anxiety_min) * (0.5 * p.psychology.risk_aversion + 0.5 * rng.unit()), 1e-3);
    p.psychology.patience = round_to(rng.uniform(0.2, 0.9), 1e-3);

    p.vehicle.model = pick(rng, t.vehicle_models);
    p.vehicle.battery_capacity_kwh = t.battery_capacity_kwh;
    p.vehicle.consumption_kwh_per_km = round_to(rng.uniform(t.consumption_min, t.consumption_max), 1e-3);
    p.vehicle.max_charge_power_kw = pick(rng, t.charge_power_choices);

    switch (rng.range(0, 2)) {
    case 0:
        p.habits.preferred_window = {22 * 60, 6 * 60};
        p.habits.preferred_scenario = ChargingScenario::home;
        break;
    case 1:
        p.habits.preferred_window = {11 * 60 + 30, 13 * 60 + 30};
        p.habits.preferred_scenario = ChargingScenario::public_station;
        break;
    default:
        p.habits.preferred_window = {19 * 60, 22 * 60};
        p.habits.preferred_scenario = ChargingScenario::public_station;
        break;
    }
    p.habits.typical_target_soc = round_to(rng.uniform(t.target_soc_min, t.target_soc_max), 1e-3);
    return p;
}

DailyPlan MockProvider::make_plan(const PlanRequest& req) const {
    const auto& t = settings_.plan;
    const auto& area = settings_.area;
    const OfflineRouter router(settings_.routing);
    Rng rng(mix_seed(req.seed, 0x91a0 + static_cast<std::uint64_t>(req.day_index)));
    const GeoPoint home = req.persona.home;

    DailyPlan plan;
    plan.day_index = req.day_index;
    GeoPoint loc = home;

    auto add_leg = [&](EventKind kind, const GeoPoint& dest, Minutes depart) {
        const RouteEstimate r = router.route(loc, dest, depart);
        plan.events.push_back({kind, loc, dest, depart, r.travel_minutes, r.distance_km});
        loc = dest;
        return depart + r.travel_minutes;
    };

    // Fares until the next one would overrun the shift; with return_home the
    // drive back must also fit.
    auto shift = [&](Minutes begin, Minutes end, bool return_home) {
        Minutes now = begin;
        bool first = true;
        for (;;) {
            const Minutes depart = now + (first ? 0 : rng.range(t.gap_min, t.gap_max));
            const GeoPoint dest = sample_near(rng, loc, t.leg_min_km, t.leg_max_km, area);
            const RouteEstimate r = router.route(loc, dest, depart);
            const Minutes arrive = depart + r.travel_minutes;
            const Minutes back = return_home ? router.route(dest, home, arrive).travel_minutes : 0;
            if (arrive + back > end) break;
            now = add_leg(EventKind::work_shift, dest, depart);
            first = false;
        }
        if (return_home && !(loc == home)) now = add_leg(EventKind::trip, home, now);
        return now;
    };

    shift(t.morning_start, t.morning_end, false);
    plan.events.push_back({EventKind::break_time, loc, loc, t.morning_end, t.afternoon_start - t.morning_end, 0.0});
    shift(t.afternoon_start, t.afternoon_end, true);

    if (rng.bernoulli(t.leisure_probability)) {
        const Minutes out = rng.range(t.leisure_start_min, t.leisure_start_max);
        const Minutes stay = rng.range(t.leisure_stay_min, t.leisure_stay_max);
        const GeoPoint dest = sample_near(rng, home, t.leg_min_km, t.leg_max_km, area);
        const RouteEstimate there = router.route(home, dest, out);
        const Minutes back_depart = out + there.travel_minutes + stay;
        const RouteEstimate back = router.route(dest, home, back_depart);
        if (back_depart + back.travel_minutes <= kMinutesPerDay) {
            add_leg(EventKind::leisure, dest, out);
            add_leg(EventKind::leisure, home, back_depart);
        }
    }
    return plan;
}

std::string MockProvider::complete(CognitionTask task, const Json& request, const RepairHint*) {
    switch (task) {
    case CognitionTask::persona: return canonical(Json(make_persona(persona_request_from_json(request))));
    case CognitionTask::plan: return canonical(Json(make_plan(plan_request_from_json(request))));
    case CognitionTask::decide:
        return canonical(encode(baseline_decision(decision_request_from_json(request), settings_.weights)));
    case CognitionTask::reflect: {
        const ReflectionReport r = baseline_reflection(reflection_request_from_json(request));
        return canonical(Json{{"plan_adherence", r.plan_adherence},
                              {"satisfaction", r.satisfaction},
                              {"persona_consistency", r.persona_consistency}});
    }
    }
    throw ProviderError("unknown task");
}

FaultInjectingProvider::FaultInjectingProvider(CognitionProvider& inner, double malformed_rate, std::uint64_t seed,
                                               double transport_error_rate)
    : inner_(inner),
      malformed_rate_(malformed_rate),
      transport_error_rate_(transport_error_rate),
      rng_(mix_seed(seed, 0xfa17)) {}

std::string FaultInjectingProvider::complete(CognitionTask task, const Json& request, const RepairHint* repair) {
    ++responses_;
    const bool transport = rng_.bernoulli(transport_error_rate_);
    const bool malformed = rng_.bernoulli(malformed_rate_);
    if (transport) {
        ++transport_errors_;
        throw ProviderError("injected transport failure");
    }
    std::string good = inner_.complete(task, request, repair);
    if (!malformed) return good;
    ++malformed_;
    return corrupt(task, good);
}

std::string FaultInjectingProvider::corrupt(CognitionTask task, const std::string& good) {
    Json j = Json::parse(good);
    switch (rng_.range(0, 5)) {
    case 0: return good.substr(0, good.size() / 2);
    case 1: return "Sure! Here is my answer: " + good;
    case 2: j.erase(j.begin()); return j.dump();
    case 3: j.begin().value() = Json::array(); return j.dump();
    case 4: j["confidence"] = 0.9; return j.dump();
    default: break;
    }
    switch (task) {
    case CognitionTask::decide:
        j["decision"] = true;
        j["station_id"] = "NO-SUCH-STATION";
        j["amount_kwh"] = 10.0;
        break;
    case CognitionTask::reflect: j["plan_adherence"]["score"] = 1.7; break;
    case CognitionTask::persona: j["psychology"]["range_anxiety_threshold"] = 0.0; break;
    case CognitionTask::plan: j["day_index"] = -1; break;
    }
    return j.dump();
}

} // namespace evsim
