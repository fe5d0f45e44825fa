#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "evsim/errors.hpp"
#include "evsim/geo.hpp"
#include "oracles.hpp"

using namespace evsim;

namespace {

constexpr double kKmPerDegLat = kEarthRadiusKm * 3.14159265358979323846 / 180.0;

struct Site {
    std::string station_id;
    GeoPoint location;
};

GeoPoint random_point(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180);
    return GeoPoint(lat(gen), lon(gen));
}

} // namespace

TEST_CASE("estimate_route examples") {
    const GeoPoint a(31.2304, 121.4737), b(31.1443, 121.8083);
    CHECK(estimate_route(a, a, 1.3, 30) == RouteEstimate{0.0, 0});

    const RouteEstimate r = estimate_route(a, b, 1.0, 30);
    const double ref = oracle::great_circle_km(31.2304, 121.4737, 31.1443, 121.8083).value;
    CHECK(std::abs(r.distance_km - ref) / ref < 0.005);
    CHECK(r.travel_minutes == std::llround(r.distance_km / 30 * 60));

    CHECK(estimate_route(a, b, 1.3, 30).distance_km == 1.3 * estimate_route(a, b, 1.0, 30).distance_km);
    CHECK_THROWS_AS(estimate_route(a, b, 0.9, 30), InvalidValue);
    CHECK_THROWS_AS(estimate_route(a, b, 1.0, 0), InvalidValue);
}

TEST_CASE("route properties over random pairs") {
    std::mt19937_64 gen(99);
    for (int i = 0; i < 500; ++i) {
        const GeoPoint a = random_point(gen), b = random_point(gen), c = random_point(gen);
        CHECK(estimate_route(a, b, 1.3, 30) == estimate_route(b, a, 1.3, 30));
        const double ab = estimate_route(a, b, 1.3, 30).distance_km;
        const double bc = estimate_route(b, c, 1.3, 30).distance_km;
        const double ac = estimate_route(a, c, 1.3, 30).distance_km;
        CHECK(ac <= ab + bc + 1e-6);
        const double ref = oracle::great_circle_km(a.latitude(), a.longitude(), b.latitude(), b.longitude()).value;
        if (ref > 1e-3) CHECK(std::abs(estimate_route(a, b, 1.0, 30).distance_km - ref) / ref < 0.005);
    }
}

TEST_CASE("zero distance means zero travel time") {
    const GeoPoint p(31.2, 121.5);
    const OfflineRouter router(RoutingParams{});
    for (Minutes t = 0; t < kMinutesPerDay; t += 60) CHECK(router.route(p, p, t) == RouteEstimate{0.0, 0});
}

TEST_CASE("congestion slows the offline router") {
    RoutingParams params;
    params.congestion[8] = 0.5;
    const OfflineRouter router(params);
    const GeoPoint a(31.20, 121.40), b(31.25, 121.50);
    const RouteEstimate free_flow = router.route(a, b, 3 * 60);
    const RouteEstimate rush = router.route(a, b, 8 * 60 + 15);
    CHECK(rush.distance_km == free_flow.distance_km);
    CHECK(rush.travel_minutes == std::llround(free_flow.distance_km / 15.0 * 60));
    CHECK(router.route(b, a, 8 * 60) == router.route(a, b, 8 * 60));
}

TEST_CASE("nearby_stations") {
    const GeoPoint origin(31.0, 121.0);
    RoutingParams straight;
    straight.detour_factor = 1.0;
    const OfflineRouter router(straight);
    auto north = [&](double km) { return GeoPoint(31.0 + km / kKmPerDegLat, 121.0); };

    SUBCASE("nothing in radius") {
        const std::vector<Site> sites{{"A", north(5)}};
        CHECK(nearby_stations(router, origin, sites, 1.0, 0).empty());
    }
    SUBCASE("three stations at 1, 2, 3 km with radius 2.5") {
        const std::vector<Site> sites{{"C", north(3)}, {"A", north(1)}, {"B", north(2)}};
        const auto got = nearby_stations(router, origin, sites, 2.5, 0);
        // Brute force: filter then sort by (distance, id).
        std::vector<std::pair<double, std::string>> expect;
        for (const auto& s : sites) {
            const double d = oracle::great_circle_km(31.0, 121.0, s.location.latitude(), s.location.longitude()).value;
            if (d <= 2.5) expect.push_back({d, s.station_id});
        }
        std::sort(expect.begin(), expect.end());
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].station_id == expect[i].second);
        CHECK(got.size() == 2);
        CHECK(got[0].station_id == "A");
    }
    SUBCASE("ties go to the lower id") {
        const std::vector<Site> sites{{"Z", north(1)}, {"M", north(1)}};
        const auto got = nearby_stations(router, origin, sites, 5, 0);
        REQUIRE(got.size() == 2);
        CHECK(got[0].station_id == "M");
        CHECK(got[1].station_id == "Z");
    }
    SUBCASE("random fixtures: subset, sorted, duplicate-free") {
        std::mt19937_64 gen(5);
        std::uniform_real_distribution<double> d(-0.2, 0.2);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Site> sites;
            for (int i = 0; i < 20; ++i)
                sites.push_back({"S" + std::to_string(i), GeoPoint(31.0 + d(gen), 121.0 + d(gen))});
            const auto got = nearby_stations(router, origin, sites, 12.0, 0);
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].route.distance_km <= 12.0);
                if (i > 0) {
                    const auto& p = got[i - 1];
                    CHECK((p.route.distance_km < got[i].route.distance_km ||
                           (p.route.distance_km == got[i].route.distance_km && p.station_id < got[i].station_id)));
                }
            }
            std::size_t in_radius = 0;
            for (const auto& s : sites)
                if (router.route(origin, s.location, 0).distance_km <= 12.0) ++in_radius;
            CHECK(got.size() == in_radius);
        }
    }
}
