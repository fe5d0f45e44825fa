// Acceptance suite: one PASS/FAIL line per criterion. Runs offline with the
// mock provider; the live smoke check only runs when LLM_API_KEY is set.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evsim/config.hpp"
#include "evsim/digest.hpp"
#include "evsim/engine.hpp"
#include "evsim/environment.hpp"
#include "evsim/geo.hpp"
#include "evsim/memory.hpp"
#include "evsim/report.hpp"
#include "oracles.hpp"

using namespace evsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum { pass, fail, skip } status = pass;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::fail, std::move(d)}; }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("evsim-acceptance-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScenarioConfig fast(ScenarioConfig c) {
    c.retry.initial_backoff = std::chrono::milliseconds(0);
    return c;
}

// Default scenario, shared by criteria 1, 3 and 9.
const fs::path& default_run_dir() {
    static const fs::path dir = scratch("default");
    return dir;
}
RunArtifacts g_default;
double g_default_seconds = 0;

Outcome scenario_reproduction() {
    const ScenarioConfig c = load_config(fs::path(EVSIM_SOURCE_DIR) / "config" / "default.jsonc");
    if (c.num_agents != 10 || c.horizon_days != 7 || c.initial_soc_kwh != 60.0 ||
        c.persona_template.battery_capacity_kwh != 75.0)
        return fail("shipped config is not 10 agents x 7 days at 60/75 kWh");
    const auto t0 = std::chrono::steady_clock::now();
    g_default = run_scenario(c, default_run_dir());
    g_default_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::map<std::string, int> per_agent;
    for (const auto& r : g_default.behavior) ++per_agent[r.agent_id];
    for (const auto& a : g_default.agents) {
        if (per_agent[a.agent_id] < 1) return fail(a.agent_id + " has no behavior records");
        if (a.persona.vehicle.battery_capacity_kwh != 75.0 || a.initial_soc_kwh != 60.0)
            return fail(a.agent_id + " does not start at 60/75 kWh");
    }
    const std::string d = fmt("%zu agents, %zu reflections, %zu records, %.2fs", g_default.agents.size(),
                              g_default.reflections.size(), g_default.behavior.size(), g_default_seconds);
    if (g_default.agents.size() != 10 || g_default.reflections.size() != 70 || per_agent.size() != 10)
        return fail(d);
    if (g_default_seconds >= 10.0) return fail(d + " (too slow)");
    return pass(d);
}

Outcome determinism() {
    const ScenarioConfig c = default_config();
    const fs::path a = scratch("det-a"), b = scratch("det-b");
    run_scenario(c, a);
    run_scenario(c, b);
    const std::string ba = sha256_file(a / "behavior.log"), bb = sha256_file(b / "behavior.log");
    const std::string ra = sha256_file(a / "reflections.log"), rb = sha256_file(b / "reflections.log");
    if (ba != bb || ra != rb) return fail("digests differ between identical runs");
    return pass("behavior " + ba.substr(0, 16) + ", reflections " + ra.substr(0, 16));
}

Outcome energy_conservation() {
    double worst = 0.0;
    std::string who;
    for (const auto& a : g_default.agents) {
        // Tow resets are the one external energy source; the default scenario has none.
        const double imbalance = std::abs(a.energy_imbalance_kwh());
        if (imbalance >= worst) {
            worst = imbalance;
            who = a.agent_id;
        }
        if (a.towed_kwh != 0.0) return fail(a.agent_id + " was towed in the default scenario");
    }
    const std::string d = fmt("max |imbalance| %.3g kWh (%s)", worst, who.c_str());
    return worst <= 1e-9 ? pass(d) : fail(d);
}

Outcome queue_discipline() {
    // Engine level: 200 agents sharing one station.
    ScenarioConfig c = fast(default_config());
    c.num_agents = 200;
    c.horizon_days = 2;
    c.search_radius_km = 200.0;
    StationSpec only = c.stations.front();
    only.pile_count = 3;
    c.stations = {only};
    const RunArtifacts art = run_scenario(c, std::nullopt);
    if (art.charges.size() < 20) return fail(fmt("only %zu charging sessions in the stress run", art.charges.size()));
    if (art.audit.occupancy_violations != 0) return fail("occupancy exceeded pile count");
    if (art.audit.max_occupancy.at(only.station_id) > only.pile_count) return fail("max occupancy above pile count");

    // Admission order is enqueue order, and service starts follow it.
    std::vector<oracle::Job> jobs;
    for (std::size_t i = 0; i < art.charges.size(); ++i) {
        const ChargeTicket& t = art.charges[i];
        if (i > 0) {
            const ChargeTicket& p = art.charges[i - 1];
            if (std::tie(p.start_wait, p.agent_id) > std::tie(t.start_wait, t.agent_id))
                return fail("admission out of enqueue order at " + t.agent_id);
        }
        jobs.push_back({t.agent_id, static_cast<long>(t.start_wait), static_cast<long>(t.charge_minutes())});
    }
    // Per-agent sessions never overlap, so the FIFO oracle sees each job once.
    const auto ref = oracle::fifo(std::vector<long>(static_cast<std::size_t>(only.pile_count), 0), jobs);
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (art.charges[i].start_charge != ref[i].start)
            return fail("service start differs from the FIFO oracle for " + jobs[i].id);

    // Station level: 200 randomized arrivals straight into begin_charge.
    std::mt19937_64 gen(4242);
    const TariffSchedule flat = TariffSchedule::flat(1.0);
    ChargingStation s("S", GeoPoint(31.23, 121.47), 4, 60.0, "flat");
    std::vector<oracle::Job> direct;
    std::vector<ChargeTicket> tickets;
    Minutes t = 0;
    for (int i = 0; i < 200; ++i) {
        t += std::uniform_int_distribution<Minutes>(0, 6)(gen);
        const double kwh = std::uniform_int_distribution<int>(1, 60)(gen);
        const std::string id = fmt("v%03d", i);
        tickets.push_back(begin_charge(s, EvState{id, s.location, 75.0 - kwh, 75.0, 60.0, EvStatus::idle}, kwh,
                                       SimClock(t), flat));
        direct.push_back({id, static_cast<long>(t), static_cast<long>(tickets.back().charge_minutes())});
        if (s.occupancy(t) > s.pile_count) return fail("station occupancy above pile count");
    }
    const auto ref2 = oracle::fifo(std::vector<long>(4, 0), direct);
    for (std::size_t i = 0; i < direct.size(); ++i)
        if (tickets[i].start_charge != ref2[i].start || tickets[i].end_charge != ref2[i].end)
            return fail("randomized admission differs from the FIFO oracle at " + direct[i].id);
    return pass(fmt("%zu engine sessions (max occupancy %d/%d), 200 direct arrivals match the oracle",
                    art.charges.size(), art.audit.max_occupancy.at(only.station_id), only.pile_count));
}

Outcome cost_correctness() {
    const ScenarioConfig c = default_config();
    std::vector<TariffSchedule> tariffs;
    std::vector<std::vector<oracle::Band>> bands;
    for (const auto& [id, b] : c.tariffs) {
        tariffs.emplace_back(b);
        bands.emplace_back();
        for (const auto& x : b) bands.back().push_back({static_cast<long>(x.start), static_cast<long>(x.end), x.price_per_kwh});
    }
    std::mt19937_64 gen(99);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, tariffs.size() - 1)(gen);
        const double power = std::vector<double>{7.0, 60.0, 120.0}[i % 3];
        ChargingStation s("S", GeoPoint(31.23, 121.47), 2, power, "t");
        const double kwh = std::uniform_real_distribution<double>(0.5, 70.0)(gen);
        const Minutes at = std::uniform_int_distribution<Minutes>(0, 7 * 1440)(gen);
        const ChargeTicket tk =
            begin_charge(s, EvState{"v", s.location, 75.0 - kwh, 75.0, 120.0, EvStatus::idle}, kwh, SimClock(at), tariffs[k]);
        const double ref = oracle::cost(tk.start_charge, tk.end_charge, tk.energy_kwh, bands[k]).value;
        worst = std::max(worst, std::abs(tk.cost - ref));
    }
    const std::string d = fmt("1000 tickets, max |cost - oracle| %.3g", worst);
    return worst <= 1e-6 ? pass(d) : fail(d);
}

Outcome geo_correctness() {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-180, 180);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        // Half the pairs local to the service area, half anywhere.
        GeoPoint a, b;
        if (i % 2 == 0) {
            std::uniform_real_distribution<double> la(31.10, 31.35), lo(121.30, 121.65);
            a = GeoPoint(la(gen), lo(gen));
            b = GeoPoint(la(gen), lo(gen));
        } else {
            a = GeoPoint(lat(gen), lon(gen));
            b = GeoPoint(lat(gen), lon(gen));
        }
        const double d = estimate_route(a, b, 1.0, 30.0).distance_km;
        const double back = estimate_route(b, a, 1.0, 30.0).distance_km;
        if (d != back) return fail(fmt("asymmetric distance for pair %d", i));
        const double ref = oracle::great_circle_km(a.latitude(), a.longitude(), b.latitude(), b.longitude()).value;
        if (ref > 0) worst = std::max(worst, std::abs(d - ref) / ref);
    }
    const std::string d = fmt("100 pairs, max relative error %.3g, symmetric", worst);
    return worst <= 0.005 ? pass(d) : fail(d);
}

Outcome memory_windows() {
    auto rec = [](Minutes t) {
        BehaviorRecord r;
        r.agent_id = "a";
        r.action = BehaviorAction::travel;
        r.object_id = "o";
        r.timestamp = t;
        r.quintuple.time_minutes = t;
        r.location = GeoPoint(31.2, 121.4);
        return r;
    };
    const Minutes now = 10 * kMinutesPerDay;
    MemoryStore m;
    for (Minutes t : {now - 7 * kMinutesPerDay, now - 7 * kMinutesPerDay + 1, now - 3 * kMinutesPerDay,
                      now - 3 * kMinutesPerDay + 1, now})
        m.append(rec(t));
    const auto s = m.retrieve(SimClock(now), MemoryHorizon::short_term);
    const auto l = m.retrieve(SimClock(now), MemoryHorizon::long_term);
    for (const auto& r : s)
        if (r.timestamp == now - 3 * kMinutesPerDay) return fail("record exactly 3 days old is in the short window");
    if (s.size() != 2 || l.size() != 4) return fail(fmt("window sizes %zu/%zu, expected 2/4", s.size(), l.size()));

    std::mt19937_64 gen(31);
    int checks = 0;
    for (int trial = 0; trial < 100; ++trial) {
        MemoryStore store;
        Minutes t = 0;
        for (int i = 0; i < 60; ++i) {
            t += std::uniform_int_distribution<Minutes>(0, 400)(gen);
            store.append(rec(t));
        }
        for (int q = 0; q < 20; ++q, ++checks) {
            // Bias queries onto exact boundaries.
            Minutes at = std::uniform_int_distribution<Minutes>(0, t + 2000)(gen);
            if (q % 2) at = store.records()[static_cast<std::size_t>(q)].timestamp + (q % 4 == 1 ? 3 : 7) * kMinutesPerDay;
            const auto ss = store.retrieve(SimClock(at), MemoryHorizon::short_term);
            const auto ll = store.retrieve(SimClock(at), MemoryHorizon::long_term);
            for (const auto& r : ss) {
                if (r.timestamp <= at - 3 * kMinutesPerDay || r.timestamp > at) return fail("short window bound broken");
                if (std::find(ll.begin(), ll.end(), r) == ll.end()) return fail("short window not within long window");
            }
            for (const auto& r : ll)
                if (r.timestamp <= at - 7 * kMinutesPerDay || r.timestamp > at) return fail("long window bound broken");
        }
    }
    return pass(fmt("boundary cases plus %d randomized window queries", checks));
}

// Sits outside the fault injector and replays each decision's strict parse,
// so the expected fallbacks are known independently of the engine.
class Referee final : public CognitionProvider {
public:
    explicit Referee(CognitionProvider& inner) : inner_(inner) {}
    std::string complete(CognitionTask task, const Json& request, const RepairHint* repair) override {
        std::string out = inner_.complete(task, request, repair);
        if (task == CognitionTask::decide) {
            bool ok = true;
            try {
                parse_decision_response(out, decision_request_from_json(request));
            } catch (const SchemaError&) {
                ok = false;
            }
            if (!repair) verdicts.push_back(ok);
            else if (!verdicts.empty()) verdicts.back() = verdicts.back() || ok;
        }
        return out;
    }
    std::vector<bool> verdicts; // one per decision: did any attempt parse
private:
    CognitionProvider& inner_;
};

Outcome schema_robustness() {
    ScenarioConfig c = fast(default_config());
    MockProvider mock(c.mock_settings());
    FaultInjectingProvider faulty(mock, 0.2, 2024);
    Referee referee(faulty);
    RunArtifacts art;
    try {
        Engine engine(c, referee, scratch("faults"));
        art = engine.run();
    } catch (const std::exception& e) {
        return fail(std::string("run aborted: ") + e.what());
    }
    if (art.reflections.size() != 70) return fail("run did not reach the horizon");
    if (art.audit.occupancy_violations || art.audit.soc_violations || art.audit.record_violations)
        return fail("engine audit found violations");
    std::map<std::string, double> capacity;
    for (const auto& a : art.agents) {
        capacity[a.agent_id] = a.persona.vehicle.battery_capacity_kwh;
        if (std::abs(a.energy_imbalance_kwh()) > 1e-9) return fail(a.agent_id + " energy does not balance");
    }
    std::vector<bool> tagged;
    for (const auto& r : art.behavior) {
        if (!validate_record(r, capacity[r.agent_id]).empty()) return fail("invalid record for " + r.agent_id);
        if (r.action == BehaviorAction::start_charging || r.action == BehaviorAction::skip_charging)
            tagged.push_back(r.fallback);
    }
    if (tagged.size() != referee.verdicts.size())
        return fail(fmt("%zu decision records for %zu decisions", tagged.size(), referee.verdicts.size()));
    int fallbacks = 0;
    for (std::size_t i = 0; i < tagged.size(); ++i) {
        if (tagged[i] != !referee.verdicts[i]) return fail(fmt("decision %zu fallback tag is wrong", i));
        fallbacks += tagged[i];
    }
    int reflection_fallbacks = 0;
    for (const auto& a : art.agents) reflection_fallbacks += a.fallback_reflections;
    if (faulty.malformed() == 0 || fallbacks == 0) return fail("the injector produced no fallbacks");
    return pass(fmt("%d/%d responses malformed, %d/%zu decisions fell back (all tagged), %d reflection fallbacks",
                    faulty.malformed(), faulty.responses(), fallbacks, tagged.size(), reflection_fallbacks));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

Outcome export_validity() {
    const fs::path dir = default_run_dir();
    export_run(dir, ExportFormat::geojson);
    export_run(dir, ExportFormat::csv);
    const RunData run = load_run(dir);

    const std::string cmd = std::string(EVSIM_PYTHON) + " " + EVSIM_SOURCE_DIR + "/tests/data/validate_geojson.py " +
                            (dir / "map.geojson").string() + " --stations " + std::to_string(run.config.stations.size()) +
                            " --agents " + std::to_string(run.config.num_agents) + " > /dev/null";
    if (std::system(cmd.c_str()) != 0) return fail("schema validator rejected map.geojson");

    // Feature counts straight from the file.
    std::ifstream gin(dir / "map.geojson");
    const Json g = Json::parse(gin);
    std::map<std::string, int> kinds;
    for (const auto& f : g["features"]) ++kinds[f["properties"]["kind"].get<std::string>()];
    int starts = 0;
    for (const auto& r : run.behavior) starts += r.action == BehaviorAction::start_charging;
    if (kinds["trajectory"] != run.config.num_agents || kinds["station"] != static_cast<int>(run.config.stations.size()) ||
        kinds["charge"] != starts)
        return fail("feature counts do not match agents/stations/charges");

    // CSV totals against sums taken directly from behavior.log.
    std::map<std::string, std::array<double, 3>> sums; // km, kWh, cost
    std::map<std::string, int> charges;
    std::ifstream lin(dir / "behavior.log");
    std::string line;
    while (std::getline(lin, line)) {
        const Json j = Json::parse(line);
        const std::string id = j["agent_id"];
        auto& s = sums[id];
        if (j["action"] == "travel") s[0] += j["distance_km"].get<double>();
        if (j["action"] == "stop_charging") {
            s[1] += j["quintuple"]["amount_kwh"].get<double>();
            s[2] += j["cost"].get<double>();
            ++charges[id];
        }
    }
    std::array<double, 3> fleet{};
    int fleet_charges = 0;
    for (const auto& [id, s] : sums) {
        for (int k = 0; k < 3; ++k) fleet[static_cast<std::size_t>(k)] += s[static_cast<std::size_t>(k)];
        fleet_charges += charges[id];
    }
    std::ifstream cin_(dir / "summary.csv");
    std::stringstream text;
    text << cin_.rdbuf();
    const auto rows = split(text.str(), '\n');
    if (rows.size() != sums.size() + 2) return fail("summary.csv has the wrong number of rows");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto cols = split(rows[i], ',');
        const bool is_fleet = cols[0] == "fleet";
        if (!is_fleet && !sums.count(cols[0])) return fail("unknown agent " + cols[0] + " in summary.csv");
        const std::array<double, 3>& want = is_fleet ? fleet : sums[cols[0]];
        const int want_charges = is_fleet ? fleet_charges : charges[cols[0]];
        for (int k = 0; k < 3; ++k)
            if (std::stod(cols[static_cast<std::size_t>(k + 1)]) != want[static_cast<std::size_t>(k)])
                return fail("summary.csv total differs from behavior.log for " + cols[0]);
        if (std::stoi(cols[4]) != want_charges) return fail("charge count differs for " + cols[0]);
    }
    return pass(fmt("%zu features valid, %d trajectories, %d stations, %d charge points; CSV totals exact",
                    g["features"].size(), kinds["trajectory"], kinds["station"], kinds["charge"]));
}

Outcome live_smoke() {
    if (!std::getenv("LLM_API_KEY")) return {Outcome::skip, "LLM_API_KEY not set"};
    ScenarioConfig c = default_config();
    c.num_agents = 1;
    c.horizon_days = 1;
    c.provider = ProviderKind::live;
    try {
        const RunArtifacts art = run_scenario(c, scratch("live"));
        int valid = 0;
        for (const auto& r : art.behavior)
            if ((r.action == BehaviorAction::start_charging || r.action == BehaviorAction::skip_charging) && !r.fallback)
                ++valid;
        const std::string d = fmt("%d schema-valid live decisions", valid);
        return valid >= 1 ? pass(d) : fail(d);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"scenario reproduction", scenario_reproduction},
        {"determinism", determinism},
        {"energy conservation", energy_conservation},
        {"queue discipline", queue_discipline},
        {"cost correctness", cost_correctness},
        {"geo correctness", geo_correctness},
        {"memory windows", memory_windows},
        {"schema robustness", schema_robustness},
        {"export validity", export_validity},
        {"live provider smoke", live_smoke},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::skip ? "SKIP" : "FAIL";
        failures += o.status == Outcome::fail;
        std::printf("%s %2zu %-22s %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures ? 1 : 0;
}
