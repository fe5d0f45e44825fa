#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "evsim/domain.hpp"
#include "evsim/geo.hpp"

namespace evsim {

// --- Tariffs -------------------------------------------------------------

struct TariffBand {
    Minutes start = 0; // inclusive time of day
    Minutes end = 0;   // exclusive time of day
    double price_per_kwh = 0.0;
    bool operator==(const TariffBand&) const = default;
};

/// Time-of-use price schedule whose bands partition [0, 1440).
class TariffSchedule {
public:
    /// Throws InvalidValue unless the bands (in any order) tile the day
    /// exactly with non-negative prices.
    explicit TariffSchedule(std::vector<TariffBand> bands);
    static TariffSchedule flat(double price_per_kwh);

    const std::vector<TariffBand>& bands() const { return bands_; }

    /// Price of the band containing `time_of_day`. Throws InvalidValue
    /// outside [0, 1440).
    double price_at(Minutes time_of_day) const;

    double min_price() const;
    double max_price() const;
    bool is_off_peak(Minutes time_of_day) const { return price_at(time_of_day) == min_price(); }

    /// Cost of delivering `energy_kwh` at a uniform rate over the sim-time
    /// window [start, end).
    double cost_of(Minutes start, Minutes end, double energy_kwh) const;

private:
    std::vector<TariffBand> bands_;
};

inline double price_at(const TariffSchedule& tariff, Minutes time_of_day) { return tariff.price_at(time_of_day); }

// --- Vehicles ------------------------------------------------------------

enum class EvStatus { idle, driving, queued, charging, stranded };

std::string_view to_string(EvStatus s);

struct EvState {
    std::string agent_id;
    GeoPoint location;
    double soc_kwh = 0.0;
    double battery_capacity_kwh = 0.0;
    double max_charge_power_kw = 0.0;
    EvStatus status = EvStatus::idle;

    double soc_fraction() const { return soc_kwh / battery_capacity_kwh; }
};

/// Returns the vehicle after driving `distance_km`. The state of charge is
/// never clamped: if the trip needs more energy than is stored, throws
/// StrandedError and the input is left as it was.
EvState consume_energy(const EvState& ev, double distance_km, double rate_kwh_per_km);

// --- Stations --------------------------------------------------------------

struct ChargeTicket {
    std::string station_id;
    std::string agent_id;
    std::size_t pile = 0;
    Minutes start_wait = 0; // arrival / enqueue time
    Minutes start_charge = 0;
    Minutes end_charge = 0;
    double energy_kwh = 0.0;
    double power_kw = 0.0;
    double cost = 0.0;

    Minutes wait_minutes() const { return start_charge - start_wait; }
    Minutes charge_minutes() const { return end_charge - start_charge; }
};

struct QueueEntry {
    std::string agent_id;
    Minutes enqueue_time = 0;
    Minutes start_charge = 0;
};

struct Reservation {
    std::string agent_id;
    std::size_t pile = 0;
    Minutes start = 0;
    Minutes end = 0;
};

/// A station with identical piles. Admission is non-preemptive: an arriving
/// vehicle reserves the pile that frees up first, so service starts in
/// arrival order.
struct ChargingStation {
    ChargingStation() = default;
    ChargingStation(std::string station_id, GeoPoint location, int pile_count, double pile_power_kw,
                    std::string tariff_id);

    std::string station_id;
    GeoPoint location;
    int pile_count = 1;
    double pile_power_kw = 0.0;
    std::string tariff_id;

    std::deque<QueueEntry> queue;     // admitted but not yet charging, FIFO
    std::vector<Minutes> busy_until;  // per pile
    std::vector<Reservation> active;  // admitted and not yet finished

    /// Drops queue entries that have started and reservations that ended.
    void advance(Minutes now);

    int occupancy(Minutes now) const;
    int free_piles(Minutes now) const;
    /// Earliest minute >= now at which some pile is free.
    Minutes earliest_free(Minutes now) const;
};

/// Admits `ev` (already at the station) for up to `target_kwh`. Energy is
/// capped by the free battery space and power by the slower of pile and
/// vehicle. Throws ZeroChargeError on a full battery and InvalidValue if
/// the vehicle is elsewhere or target_kwh <= 0.
ChargeTicket begin_charge(ChargingStation& station, const EvState& ev, double target_kwh, SimClock arrival,
                          const TariffSchedule& tariff);

/// Whole minutes needed to deliver energy at constant power, rounded up.
Minutes charge_duration_minutes(double energy_kwh, double power_kw);

// --- World -----------------------------------------------------------------

struct EnvironmentState {
    std::map<std::string, EvState> evs;
    std::vector<ChargingStation> stations; // sorted by station_id
    std::map<std::string, TariffSchedule> tariffs;
    RoutingParams routing;

    ChargingStation& station(const std::string& id);
    const ChargingStation& station(const std::string& id) const;
    const TariffSchedule& tariff_of(const ChargingStation& s) const;
};

} // namespace evsim
