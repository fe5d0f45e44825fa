#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evsim/perception.hpp"
#include "oracles.hpp"

using namespace evsim;

namespace {

EnvironmentState world() {
    EnvironmentState env;
    env.tariffs.emplace("flat", TariffSchedule::flat(1.0));
    env.tariffs.emplace("tou", TariffSchedule({{0, 360, 0.8}, {360, 1440, 1.5}}));
    env.stations.emplace_back("A", GeoPoint(31.23, 121.48), 1, 60.0, "flat");
    env.stations.emplace_back("B", GeoPoint(31.25, 121.50), 2, 120.0, "tou");
    env.stations.emplace_back("FAR", GeoPoint(31.90, 121.90), 2, 120.0, "flat");
    env.evs["a"] = EvState{"a", GeoPoint(31.23, 121.47), 30.0, 75.0, 90.0, EvStatus::idle};
    return env;
}

const AgentOutlook kOutlook{"a", 0.9, 600, GeoPoint(31.24, 121.49)};

} // namespace

TEST_CASE("snapshot fields and ordering") {
    const EnvironmentState env = world();
    const PerceptionSnapshot s = perceive(kOutlook, env, SimClock(300), 15.0);
    CHECK(s.target_kwh == doctest::Approx(0.9 * 75 - 30));
    CHECK(s.travel.soc_fraction == doctest::Approx(0.4));
    CHECK(s.travel.next_event_time == 600);
    CHECK(s.travel.distance_to_next_km > 0);
    REQUIRE(s.stations.size() == 2); // FAR is outside the radius
    CHECK(s.stations[0].station_id == "A");
    CHECK(s.stations[0].distance_km <= s.stations[1].distance_km);
    CHECK(s.stations[0].effective_power_kw == 60.0);
    CHECK(s.stations[1].effective_power_kw == 90.0);
    CHECK(s.stations[1].price_per_kwh == 0.8);
    CHECK(s.stations[1].off_peak);
    CHECK(s.stations[0].predicted_queue_minutes == 0); // all piles free
}

TEST_CASE("no stations within radius") {
    CHECK(perceive(kOutlook, world(), SimClock(0), 0.1).stations.empty());
}

TEST_CASE("queue prediction matches the FIFO oracle") {
    EnvironmentState env = world();
    ChargingStation& a = env.station("A");
    const TariffSchedule& flat = env.tariffs.at("flat");
    // Pile busy until t=120 (20 more minutes at t=100), one job queued behind it needing 30.
    begin_charge(a, EvState{"x", a.location, 55.0, 75.0, 60.0, EvStatus::idle}, 20.0, SimClock(100), flat);
    begin_charge(a, EvState{"y", a.location, 45.0, 75.0, 60.0, EvStatus::idle}, 30.0, SimClock(100), flat);

    const PerceptionSnapshot s = perceive(kOutlook, env, SimClock(100), 15.0);
    const long predicted = s.stations[0].predicted_queue_minutes;

    const auto ref = oracle::fifo({0}, {{"x", 100, 20}, {"y", 100, 30}, {"z-newcomer", 100, 1}}, 100);
    CHECK(predicted == ref[2].start - 100);
    CHECK(predicted == 50);
}

TEST_CASE("perception is a pure function of its inputs") {
    const EnvironmentState env = world();
    const auto a = perceive(kOutlook, env, SimClock(777), 15.0);
    const auto b = perceive(kOutlook, env, SimClock(777), 15.0);
    CHECK(a == b);
    CHECK(canonical(Json(a)) == canonical(Json(b)));
    CHECK(snapshot_from_json(Json(a)) == a);
}

TEST_CASE("serialized snapshot carries every field group") {
    const Json j = Json(perceive(kOutlook, world(), SimClock(300), 15.0));
    for (const char* group : {"scenario", "time", "space", "energy"}) CHECK(j["travel"].contains(group));
    for (const auto& st : j["stations"])
        for (const char* group : {"scenario", "time", "space", "energy", "price"}) CHECK(st.contains(group));
}
