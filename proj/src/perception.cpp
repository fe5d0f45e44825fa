#include "evsim/perception.hpp"

#include <algorithm>

#include "evsim/errors.hpp"

namespace evsim {

PerceptionSnapshot perceive(const AgentOutlook& agent, const EnvironmentState& env, SimClock clock, double radius_km) {
    auto ev_it = env.evs.find(agent.agent_id);
    if (ev_it == env.evs.end()) throw InvalidValue("unknown agent " + agent.agent_id);
    const EvState& ev = ev_it->second;
    const Minutes now = clock.sim_time();
    const Minutes tod = clock.time_of_day();
    const OfflineRouter router(env.routing);

    PerceptionSnapshot snap;
    snap.agent_id = agent.agent_id;
    snap.target_kwh = std::max(0.0, agent.typical_target_soc * ev.battery_capacity_kwh - ev.soc_kwh);

    auto& travel = snap.travel;
    travel.congestion_multiplier = env.routing.congestion_at(tod);
    travel.now = now;
    travel.next_event_time = agent.next_event_time;
    travel.location = ev.location;
    travel.next_destination = agent.next_destination;
    if (agent.next_destination)
        travel.distance_to_next_km = router.route(ev.location, *agent.next_destination, tod).distance_km;
    travel.soc_kwh = ev.soc_kwh;
    travel.soc_fraction = ev.soc_fraction();

    for (const auto& near : nearby_stations(router, ev.location, env.stations, radius_km, tod)) {
        const ChargingStation& st = env.station(near.station_id);
        const TariffSchedule& tariff = env.tariff_of(st);
        StationPerception sp;
        sp.station_id = st.station_id;
        sp.location = st.location;
        sp.free_piles = st.free_piles(now);
        sp.pile_count = st.pile_count;
        sp.travel_minutes = near.route.travel_minutes;
        sp.predicted_queue_minutes = st.earliest_free(now) - now;
        sp.effective_power_kw = std::min(st.pile_power_kw, ev.max_charge_power_kw);
        sp.charge_minutes = charge_duration_minutes(snap.target_kwh, sp.effective_power_kw);
        sp.distance_km = near.route.distance_km;
        sp.pile_power_kw = st.pile_power_kw;
        sp.price_per_kwh = tariff.price_at(tod);
        sp.off_peak = tariff.is_off_peak(tod);
        snap.stations.push_back(std::move(sp));
    }
    return snap;
}

void to_json(Json& j, const TravelPerception& t) {
    j = Json{
        {"scenario", {{"congestion_multiplier", t.congestion_multiplier}}},
        {"time",
         {{"now", t.now}, {"next_event_time", t.next_event_time ? Json(*t.next_event_time) : Json(nullptr)}}},
        {"space",
         {{"location", t.location},
          {"next_destination", t.next_destination ? Json(*t.next_destination) : Json(nullptr)},
          {"distance_to_next_km", t.distance_to_next_km}}},
        {"energy", {{"soc_kwh", t.soc_kwh}, {"soc_fraction", t.soc_fraction}}},
    };
}

void to_json(Json& j, const StationPerception& s) {
    j = Json{
        {"station_id", s.station_id},
        {"scenario", {{"free_piles", s.free_piles}, {"pile_count", s.pile_count}}},
        {"time",
         {{"travel_minutes", s.travel_minutes},
          {"predicted_queue_minutes", s.predicted_queue_minutes},
          {"charge_minutes", s.charge_minutes}}},
        {"space", {{"location", s.location}, {"distance_km", s.distance_km}}},
        {"energy", {{"pile_power_kw", s.pile_power_kw}, {"effective_power_kw", s.effective_power_kw}}},
        {"price", {{"price_per_kwh", s.price_per_kwh}, {"off_peak", s.off_peak}}},
    };
}

void to_json(Json& j, const PerceptionSnapshot& s) {
    j = Json{{"agent_id", s.agent_id}, {"target_kwh", s.target_kwh}, {"travel", s.travel}, {"stations", s.stations}};
}

namespace {

std::optional<GeoPoint> nullable_point(StrictObject& o, const std::string& key) {
    const Json& v = o.at(key);
    if (v.is_null()) return std::nullopt;
    return geo_point_from_json(v, o.path_of(key));
}

} // namespace

PerceptionSnapshot snapshot_from_json(const Json& j, const std::string& path) {
    StrictObject o(j, path);
    PerceptionSnapshot s;
    s.agent_id = o.string("agent_id");
    s.target_kwh = o.number("target_kwh");
    {
        auto t = o.object("travel");
        auto sc = t.object("scenario");
        s.travel.congestion_multiplier = sc.number("congestion_multiplier");
        sc.finish();
        auto tm = t.object("time");
        s.travel.now = tm.integer("now");
        if (!tm.at("next_event_time").is_null()) s.travel.next_event_time = tm.integer("next_event_time");
        tm.finish();
        auto sp = t.object("space");
        s.travel.location = geo_point_from_json(sp.at("location"), sp.path_of("location"));
        s.travel.next_destination = nullable_point(sp, "next_destination");
        s.travel.distance_to_next_km = sp.number("distance_to_next_km");
        sp.finish();
        auto en = t.object("energy");
        s.travel.soc_kwh = en.number("soc_kwh");
        s.travel.soc_fraction = en.number("soc_fraction");
        en.finish();
        t.finish();
    }
    const Json& stations = o.at("stations");
    if (!stations.is_array()) throw SchemaError(o.path_of("stations") + ": expected array");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        StrictObject so(stations[i], o.path_of("stations") + "[" + std::to_string(i) + "]");
        StationPerception st;
        st.station_id = so.string("station_id");
        auto sc = so.object("scenario");
        st.free_piles = static_cast<int>(sc.integer("free_piles"));
        st.pile_count = static_cast<int>(sc.integer("pile_count"));
        sc.finish();
        auto tm = so.object("time");
        st.travel_minutes = tm.integer("travel_minutes");
        st.predicted_queue_minutes = tm.integer("predicted_queue_minutes");
        st.charge_minutes = tm.integer("charge_minutes");
        tm.finish();
        auto sp = so.object("space");
        st.location = geo_point_from_json(sp.at("location"), sp.path_of("location"));
        st.distance_km = sp.number("distance_km");
        sp.finish();
        auto en = so.object("energy");
        st.pile_power_kw = en.number("pile_power_kw");
        st.effective_power_kw = en.number("effective_power_kw");
        en.finish();
        auto pr = so.object("price");
        st.price_per_kwh = pr.number("price_per_kwh");
        st.off_peak = pr.boolean("off_peak");
        pr.finish();
        so.finish();
        s.stations.push_back(std::move(st));
    }
    o.finish();
    return s;
}

} // namespace evsim
