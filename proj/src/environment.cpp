#include "evsim/environment.hpp"

#include <algorithm>
#include <cmath>

#include "evsim/errors.hpp"

namespace evsim {

TariffSchedule::TariffSchedule(std::vector<TariffBand> bands) : bands_(std::move(bands)) {
    if (bands_.empty()) throw InvalidValue("tariff needs at least one band");
    std::sort(bands_.begin(), bands_.end(),
              [](const TariffBand& a, const TariffBand& b) { return a.start < b.start; });
    Minutes expected = 0;
    for (const auto& b : bands_) {
        if (b.start != expected)
            throw InvalidValue("tariff bands leave a gap or overlap at minute " + std::to_string(expected));
        if (b.end <= b.start) throw InvalidValue("tariff band must have start < end");
        if (!(b.price_per_kwh >= 0.0) || !std::isfinite(b.price_per_kwh))
            throw InvalidValue("tariff price must be a finite value >= 0");
        expected = b.end;
    }
    if (expected != kMinutesPerDay) throw InvalidValue("tariff bands must end at minute 1440");
}

TariffSchedule TariffSchedule::flat(double price_per_kwh) {
    return TariffSchedule({{0, kMinutesPerDay, price_per_kwh}});
}

double TariffSchedule::price_at(Minutes tod) const {
    if (tod < 0 || tod >= kMinutesPerDay) throw InvalidValue("time of day out of range");
    auto it = std::upper_bound(bands_.begin(), bands_.end(), tod,
                               [](Minutes t, const TariffBand& b) { return t < b.start; });
    return std::prev(it)->price_per_kwh;
}

double TariffSchedule::min_price() const {
    return std::min_element(bands_.begin(), bands_.end(), [](auto& a, auto& b) {
               return a.price_per_kwh < b.price_per_kwh;
           })->price_per_kwh;
}

double TariffSchedule::max_price() const {
    return std::max_element(bands_.begin(), bands_.end(), [](auto& a, auto& b) {
               return a.price_per_kwh < b.price_per_kwh;
           })->price_per_kwh;
}

double TariffSchedule::cost_of(Minutes start, Minutes end, double energy_kwh) const {
    if (end <= start || energy_kwh <= 0.0) return 0.0;
    const double duration = static_cast<double>(end - start);
    double cost = 0.0;
    Minutes t = start;
    while (t < end) {
        const Minutes tod = t % kMinutesPerDay;
        auto it = std::prev(std::upper_bound(bands_.begin(), bands_.end(), tod,
                                             [](Minutes x, const TariffBand& b) { return x < b.start; }));
        const Minutes seg = std::min(end - t, it->end - tod);
        cost += energy_kwh * (static_cast<double>(seg) / duration) * it->price_per_kwh;
        t += seg;
    }
    return cost;
}

std::string_view to_string(EvStatus s) {
    switch (s) {
    case EvStatus::idle: return "idle";
    case EvStatus::driving: return "driving";
    case EvStatus::queued: return "queued";
    case EvStatus::charging: return "charging";
    case EvStatus::stranded: return "stranded";
    }
    return "?";
}

EvState consume_energy(const EvState& ev, double distance_km, double rate_kwh_per_km) {
    if (!(distance_km >= 0.0)) throw InvalidValue("distance_km must be >= 0");
    if (!(rate_kwh_per_km > 0.0)) throw InvalidValue("rate_kwh_per_km must be > 0");
    const double required = distance_km * rate_kwh_per_km;
    if (required > ev.soc_kwh) throw StrandedError(ev.agent_id, required, ev.soc_kwh);
    EvState out = ev;
    out.soc_kwh = ev.soc_kwh - required;
    return out;
}

ChargingStation::ChargingStation(std::string id, GeoPoint loc, int piles, double power, std::string tariff)
    : station_id(std::move(id)),
      location(loc),
      pile_count(piles),
      pile_power_kw(power),
      tariff_id(std::move(tariff)),
      busy_until(static_cast<std::size_t>(std::max(piles, 0)), 0) {
    if (station_id.empty()) throw InvalidValue("station_id must be non-empty");
    if (piles < 1) throw InvalidValue("station " + station_id + ": pile_count must be >= 1");
    if (!(power > 0.0)) throw InvalidValue("station " + station_id + ": pile_power_kw must be > 0");
}

void ChargingStation::advance(Minutes now) {
    while (!queue.empty() && queue.front().start_charge <= now) queue.pop_front();
    std::erase_if(active, [now](const Reservation& r) { return r.end <= now; });
}

int ChargingStation::occupancy(Minutes now) const {
    return static_cast<int>(
        std::count_if(active.begin(), active.end(), [now](const Reservation& r) { return r.start <= now && now < r.end; }));
}

int ChargingStation::free_piles(Minutes now) const {
    return static_cast<int>(std::count_if(busy_until.begin(), busy_until.end(), [now](Minutes b) { return b <= now; }));
}

Minutes ChargingStation::earliest_free(Minutes now) const {
    return std::max(now, *std::min_element(busy_until.begin(), busy_until.end()));
}

Minutes charge_duration_minutes(double energy_kwh, double power_kw) {
    if (energy_kwh <= 0.0) return 0;
    // Slack absorbs representation error when the quotient is integral.
    return static_cast<Minutes>(std::ceil(energy_kwh * 60.0 / power_kw - 1e-9));
}

ChargeTicket begin_charge(ChargingStation& station, const EvState& ev, double target_kwh, SimClock arrival,
                          const TariffSchedule& tariff) {
    if (!(target_kwh > 0.0)) throw InvalidValue("target_kwh must be > 0");
    if (!(ev.location == station.location))
        throw InvalidValue("agent " + ev.agent_id + " is not at station " + station.station_id);
    const double room = ev.battery_capacity_kwh - ev.soc_kwh;
    if (room <= 0.0) throw ZeroChargeError("agent " + ev.agent_id + " battery is full");

    const Minutes now = arrival.sim_time();
    station.advance(now);

    ChargeTicket t;
    t.station_id = station.station_id;
    t.agent_id = ev.agent_id;
    t.energy_kwh = std::min(target_kwh, room);
    t.power_kw = std::min(station.pile_power_kw, ev.max_charge_power_kw);

    auto pile = std::min_element(station.busy_until.begin(), station.busy_until.end());
    t.pile = static_cast<std::size_t>(pile - station.busy_until.begin());
    t.start_wait = now;
    t.start_charge = std::max(now, *pile);
    t.end_charge = t.start_charge + std::max<Minutes>(1, charge_duration_minutes(t.energy_kwh, t.power_kw));
    t.cost = tariff.cost_of(t.start_charge, t.end_charge, t.energy_kwh);

    *pile = t.end_charge;
    station.active.push_back({ev.agent_id, t.pile, t.start_charge, t.end_charge});
    if (t.start_charge > now) station.queue.push_back({ev.agent_id, now, t.start_charge});
    return t;
}

ChargingStation& EnvironmentState::station(const std::string& id) {
    auto it = std::lower_bound(stations.begin(), stations.end(), id,
                               [](const ChargingStation& s, const std::string& k) { return s.station_id < k; });
    if (it == stations.end() || it->station_id != id) throw InvalidValue("unknown station " + id);
    return *it;
}

const ChargingStation& EnvironmentState::station(const std::string& id) const {
    return const_cast<EnvironmentState*>(this)->station(id);
}

const TariffSchedule& EnvironmentState::tariff_of(const ChargingStation& s) const {
    auto it = tariffs.find(s.tariff_id);
    if (it == tariffs.end()) throw InvalidValue("station " + s.station_id + " references unknown tariff " + s.tariff_id);
    return it->second;
}

} // namespace evsim
