#include "evsim/geo.hpp"

#include <cmath>
#include <numbers>

#include "evsim/errors.hpp"

namespace evsim {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b) {
    const double lat1 = a.latitude() * kDegToRad;
    const double lat2 = b.latitude() * kDegToRad;
    const double dlat = lat2 - lat1;
    const double dlon = (b.longitude() - a.longitude()) * kDegToRad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::min(1.0, h)));
}

RouteEstimate estimate_route(const GeoPoint& a, const GeoPoint& b, double detour_factor, double speed_kmh) {
    if (!(detour_factor >= 1.0)) throw InvalidValue("detour_factor must be >= 1");
    if (!(speed_kmh > 0.0)) throw InvalidValue("speed_kmh must be > 0");
    if (a == b) return {};
    // Symmetric by construction: order the endpoints before evaluating so
    // a->b and b->a run the same floating-point operations.
    const bool swap = std::pair(a.latitude(), a.longitude()) > std::pair(b.latitude(), b.longitude());
    const double km = (swap ? great_circle_km(b, a) : great_circle_km(a, b)) * detour_factor;
    return {km, static_cast<Minutes>(std::llround(km / speed_kmh * 60.0))};
}

double RoutingParams::congestion_at(Minutes time_of_day) const {
    const auto tod = ((time_of_day % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay;
    return congestion[static_cast<std::size_t>(tod / 60)];
}

RouteEstimate OfflineRouter::route(const GeoPoint& from, const GeoPoint& to, Minutes depart_time_of_day) const {
    return estimate_route(from, to, params_.detour_factor, params_.effective_speed_kmh(depart_time_of_day));
}

void sort_nearby(std::vector<NearbyStation>& stations) {
    std::sort(stations.begin(), stations.end(), [](const NearbyStation& x, const NearbyStation& y) {
        if (x.route.distance_km != y.route.distance_km) return x.route.distance_km < y.route.distance_km;
        return x.station_id < y.station_id;
    });
}

} // namespace evsim
