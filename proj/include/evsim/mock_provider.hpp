#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evsim/cognition.hpp"
#include "evsim/geo.hpp"
#include "evsim/rng.hpp"

namespace evsim {

/// Rectangular service area in degrees.
struct ServiceArea {
    double lat_min = 31.10;
    double lat_max = 31.35;
    double lon_min = 121.30;
    double lon_max = 121.65;

    bool contains(const GeoPoint& p) const {
        return p.latitude() >= lat_min && p.latitude() <= lat_max && p.longitude() >= lon_min &&
               p.longitude() <= lon_max;
    }
};

struct PersonaTemplate {
    std::vector<std::string> occupations{"taxi driver (day shift)", "taxi driver (fleet company)",
                                         "taxi driver (owner-operator)", "ride-hailing driver"};
    std::vector<std::string> vehicle_models{"BYD e6", "BYD Qin EV", "SAIC Roewe Ei5", "GAC Aion S"};
    int age_min = 25;
    int age_max = 60;
    double battery_capacity_kwh = 75.0;
    double consumption_min = 0.13;
    double consumption_max = 0.18;
    std::vector<double> charge_power_choices{60.0, 90.0, 120.0};
    double anxiety_min = 0.15;
    double anxiety_max = 0.35;
    double target_soc_min = 0.80;
    double target_soc_max = 1.00;
};

/// Taxi work pattern: two shifts split by a meal break, optional evening
/// leisure round trip.
struct PlanTemplate {
    Minutes morning_start = 7 * 60;
    Minutes morning_end = 12 * 60;
    Minutes afternoon_start = 13 * 60;
    Minutes afternoon_end = 19 * 60;
    Minutes gap_min = 5;  // idle minutes between fares
    Minutes gap_max = 20;
    double leg_min_km = 2.0; // straight-line fare length bounds
    double leg_max_km = 12.0;
    double leisure_probability = 0.5;
    Minutes leisure_start_min = 20 * 60;
    Minutes leisure_start_max = 21 * 60;
    Minutes leisure_stay_min = 45;
    Minutes leisure_stay_max = 75;
};

struct MockSettings {
    ServiceArea area;
    PersonaTemplate persona;
    PlanTemplate plan;
    RoutingParams routing;
    BaselineWeights weights;
};

/// Deterministic provider: personas and plans are pure functions of the
/// request seed, decisions follow the baseline rule, reflections the
/// baseline evaluation.
class MockProvider final : public CognitionProvider {
public:
    explicit MockProvider(MockSettings settings) : settings_(std::move(settings)) {}

    std::string complete(CognitionTask task, const Json& request, const RepairHint* repair) override;

    Persona make_persona(const PersonaRequest& req) const;
    DailyPlan make_plan(const PlanRequest& req) const;

    const MockSettings& settings() const { return settings_; }

private:
    MockSettings settings_;
};

/// Decorator that corrupts a fraction of the wrapped provider's responses
/// (and can throw transport errors) using its own seeded stream.
class FaultInjectingProvider final : public CognitionProvider {
public:
    FaultInjectingProvider(CognitionProvider& inner, double malformed_rate, std::uint64_t seed,
                           double transport_error_rate = 0.0);

    std::string complete(CognitionTask task, const Json& request, const RepairHint* repair) override;

    int responses() const { return responses_; }
    int malformed() const { return malformed_; }
    int transport_errors() const { return transport_errors_; }

private:
    std::string corrupt(CognitionTask task, const std::string& good);

    CognitionProvider& inner_;
    double malformed_rate_;
    double transport_error_rate_;
    Rng rng_;
    int responses_ = 0;
    int malformed_ = 0;
    int transport_errors_ = 0;
};

} // namespace evsim
