#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

namespace {

constexpr double kRadiusKm = 6371.0088;
constexpr double kPi = 3.14159265358979323846;

double band_price(const std::vector<Band>& bands, long minute_of_day) {
    for (const auto& b : bands)
        if (b.start <= minute_of_day && minute_of_day < b.end) return b.price;
    throw std::logic_error("tariff gap at minute " + std::to_string(minute_of_day));
}

} // namespace

OracleResult cost(long start, long end, double energy_kwh, const std::vector<Band>& bands) {
    if (energy_kwh == 0.0 || end <= start) return {0.0, "minute-integration"};
    const double per_minute = energy_kwh / static_cast<double>(end - start);
    double total = 0.0;
    for (long t = start; t < end; ++t) total += per_minute * band_price(bands, t % 1440);
    return {total, "minute-integration"};
}

std::string station_choice(const std::vector<Candidate>& candidates, double w_distance, double w_price,
                           double w_wait) {
    if (candidates.empty()) throw NoCandidateError();
    std::vector<double> scores;
    for (const auto& c : candidates)
        scores.push_back(w_distance * c.distance_km + w_price * c.price + w_wait * c.wait_minutes);
    const double best = *std::min_element(scores.begin(), scores.end());
    std::vector<std::string> tied;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (scores[i] == best) tied.push_back(candidates[i].id);
    std::sort(tied.begin(), tied.end());
    return tied.front();
}

std::vector<Service> fifo(std::vector<long> busy_for, std::vector<Job> jobs, long t0) {
    std::vector<std::size_t> order(jobs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return jobs[a].arrival != jobs[b].arrival ? jobs[a].arrival < jobs[b].arrival : jobs[a].id < jobs[b].id;
    });

    std::vector<long> remaining = busy_for; // minutes of work left per pile
    std::vector<Service> out(jobs.size());
    std::size_t next = 0;
    std::vector<std::size_t> waiting;
    for (long t = t0; next < order.size() || !waiting.empty(); ++t) {
        while (next < order.size() && jobs[order[next]].arrival <= t) waiting.push_back(order[next++]);
        for (std::size_t p = 0; p < remaining.size() && !waiting.empty(); ++p) {
            if (remaining[p] > 0) continue;
            const std::size_t j = waiting.front();
            waiting.erase(waiting.begin());
            out[j] = {jobs[j].id, t, t + jobs[j].duration};
            remaining[p] = jobs[j].duration;
        }
        for (auto& r : remaining)
            if (r > 0) --r;
    }
    return out;
}

OracleResult great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    auto unit = [](double lat, double lon) {
        const double phi = lat * kPi / 180.0, lam = lon * kPi / 180.0;
        return std::vector<double>{std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi)};
    };
    const auto a = unit(lat1, lon1), b = unit(lat2, lon2);
    double chord2 = 0.0;
    for (int i = 0; i < 3; ++i) chord2 += (a[i] - b[i]) * (a[i] - b[i]);
    const double chord = std::sqrt(chord2);
    return {2.0 * kRadiusKm * std::asin(std::min(1.0, chord / 2.0)), "unit-vector-chord"};
}

} // namespace oracle
