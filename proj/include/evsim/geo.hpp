#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "evsim/domain.hpp"

namespace evsim {

inline constexpr double kEarthRadiusKm = 6371.0088; // IUGG mean radius

struct RouteEstimate {
    double distance_km = 0.0;
    Minutes travel_minutes = 0;
    bool operator==(const RouteEstimate&) const = default;
};

/// Haversine distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(const GeoPoint& a, const GeoPoint& b);

/// Straight-line distance scaled by a detour factor, driven at a constant
/// speed. Throws InvalidValue if detour_factor < 1 or speed_kmh <= 0.
RouteEstimate estimate_route(const GeoPoint& a, const GeoPoint& b, double detour_factor, double speed_kmh);

/// Offline routing parameters. The congestion table holds one speed
/// multiplier per hour of day; 1.0 means free-flow urban speed.
struct RoutingParams {
    double detour_factor = 1.3;
    double speed_kmh = 30.0;
    std::array<double, 24> congestion{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
                                      1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

    double congestion_at(Minutes time_of_day) const;
    double effective_speed_kmh(Minutes time_of_day) const {
        return speed_kmh * congestion_at(time_of_day);
    }
};

/// Distance/travel-time source. The offline implementation below is the
/// only one the simulator needs; online services plug in here.
class RoutingProvider {
public:
    virtual ~RoutingProvider() = default;
    virtual RouteEstimate route(const GeoPoint& from, const GeoPoint& to, Minutes depart_time_of_day) const = 0;
};

class OfflineRouter final : public RoutingProvider {
public:
    explicit OfflineRouter(RoutingParams params) : params_(params) {}

    RouteEstimate route(const GeoPoint& from, const GeoPoint& to, Minutes depart_time_of_day) const override;
    const RoutingParams& params() const { return params_; }

private:
    RoutingParams params_;
};

struct NearbyStation {
    std::string station_id;
    RouteEstimate route;
    bool operator==(const NearbyStation&) const = default;
};

/// Sorts by distance ascending, then station_id ascending.
void sort_nearby(std::vector<NearbyStation>& stations);

/// Stations whose route distance from `p` is within radius_km. Works over
/// any range whose elements expose `station_id` and `location`.
template <typename StationRange>
std::vector<NearbyStation> nearby_stations(const RoutingProvider& router, const GeoPoint& p,
                                           const StationRange& stations, double radius_km,
                                           Minutes depart_time_of_day) {
    std::vector<NearbyStation> out;
    for (const auto& s : stations) {
        RouteEstimate r = router.route(p, s.location, depart_time_of_day);
        if (r.distance_km <= radius_km) out.push_back({s.station_id, r});
    }
    sort_nearby(out);
    return out;
}

} // namespace evsim
