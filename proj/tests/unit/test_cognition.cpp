#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <deque>
#include <random>
#include <set>

#include "evsim/cognition.hpp"
#include "evsim/config.hpp"
#include "evsim/errors.hpp"
#include "evsim/mock_provider.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace evsim;

namespace {

/// Replies from a fixed script; an empty string entry throws ProviderError.
class Scripted final : public CognitionProvider {
public:
    explicit Scripted(std::deque<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(CognitionTask, const Json&, const RepairHint* repair) override {
        hints.push_back(repair ? repair->error : "");
        if (replies_.empty()) throw ProviderError("script exhausted");
        std::string r = replies_.front();
        replies_.pop_front();
        if (r.empty()) throw ProviderError("scripted transport failure");
        return r;
    }
    std::vector<std::string> hints;

private:
    std::deque<std::string> replies_;
};

MockSettings settings() { return default_config().mock_settings(); }

EnvironmentState world(double soc) {
    EnvironmentState env = build_environment(default_config());
    env.evs["driver-01"] = EvState{"driver-01", GeoPoint(31.2304, 121.4737), soc, 75.0, 60.0, EvStatus::idle};
    return env;
}

DecisionRequest decision_request(double soc, Minutes now = 600, Minutes idle = 10) {
    const EnvironmentState env = world(soc);
    const Persona p = fixtures::persona();
    DecisionRequest req;
    req.persona = p;
    req.snapshot = perceive({p.id, p.habits.typical_target_soc, std::nullopt, std::nullopt}, env, SimClock(now), 15.0);
    req.clock = now;
    req.idle_minutes = idle;
    return req;
}

} // namespace

TEST_CASE("mock personas are deterministic, valid and varied") {
    const MockProvider mock(settings());
    CHECK(mock.make_persona({"driver-01", 42}) == mock.make_persona({"driver-01", 42}));

    std::set<std::string> occupations;
    std::set<double> thresholds;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Persona p = mock.make_persona({"driver-" + std::to_string(seed), seed});
        CHECK(validate_persona(p).empty());
        CHECK(p.vehicle.battery_capacity_kwh == 75.0);
        occupations.insert(p.demographics.occupation);
        thresholds.insert(p.psychology.range_anxiety_threshold);
    }
    CHECK(occupations.size() >= 2);
    CHECK(thresholds.size() >= 2);
}

TEST_CASE("mock plans are deterministic, valid and within the daily distance band") {
    const MockProvider mock(settings());
    const Persona p = mock.make_persona({"driver-01", 7});
    CHECK(mock.make_plan({p, 3, 99}) == mock.make_plan({p, 3, 99}));
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const Persona persona = mock.make_persona({"d", seed});
        const DailyPlan plan = mock.make_plan({persona, static_cast<std::int64_t>(seed % 7), seed});
        CHECK(validate_plan(plan).empty());
        CHECK(plan.total_distance_km() >= 100.0);
        CHECK(plan.total_distance_km() <= 400.0);
        for (const auto& e : plan.events) CHECK(mock.settings().area.contains(e.destination));
    }
}

TEST_CASE("mock provider is a pure function of the request") {
    MockProvider a(settings()), b(settings());
    const Json req = encode(decision_request(20.0));
    CHECK(a.complete(CognitionTask::decide, req, nullptr) == b.complete(CognitionTask::decide, req, nullptr));
    CHECK(a.complete(CognitionTask::decide, req, nullptr) == a.complete(CognitionTask::decide, req, nullptr));
}

TEST_CASE("baseline decisions") {
    const BaselineWeights w;
    SUBCASE("below the anxiety threshold the agent charges") {
        const DecisionRequest req = decision_request(0.10 * 75);
        const DecisionResponse r = baseline_decision(req, w);
        CHECK(r.quintuple.decision);
        REQUIRE(r.quintuple.station_id);
        CHECK(r.quintuple.amount_kwh > 0);
        CHECK(r.quintuple.amount_kwh <= 75 - 7.5);
        CHECK_NOTHROW(parse_decision_response(canonical(encode(r)), req));
    }
    SUBCASE("a full battery never charges") {
        const DecisionResponse r = baseline_decision(decision_request(75.0), w);
        CHECK_FALSE(r.quintuple.decision);
        CHECK(r.quintuple.amount_kwh == 0);
        CHECK_FALSE(r.quintuple.station_id);
    }
    SUBCASE("long off-peak idle window below target charges opportunistically") {
        CHECK(baseline_decision(decision_request(40.0, 2 * 60, 120), w).quintuple.decision);
        CHECK_FALSE(baseline_decision(decision_request(40.0, 2 * 60, 30), w).quintuple.decision);
        CHECK_FALSE(baseline_decision(decision_request(40.0, 9 * 60, 120), w).quintuple.decision); // peak
    }
}

TEST_CASE("baseline station choice equals the exhaustive oracle") {
    std::mt19937_64 gen(1234);
    const BaselineWeights w;
    std::uniform_int_distribution<int> count(1, 12);
    std::uniform_real_distribution<double> dist(0, 15), price(0.8, 2.2);
    std::uniform_int_distribution<int> wait(0, 90), coin(0, 3);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<StationOption> options;
        std::vector<oracle::Candidate> candidates;
        const int n = count(gen);
        for (int i = 0; i < n; ++i) {
            StationOption o{"S" + std::to_string(std::uniform_int_distribution<int>(10, 99)(gen)) + "-" +
                                std::to_string(i),
                            dist(gen), price(gen), static_cast<double>(wait(gen))};
            // Copy a previous candidate's numbers now and then to force exact ties.
            if (i > 0 && coin(gen) == 0) {
                const auto& prev = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(gen)];
                o.distance_km = prev.distance_km;
                o.price_per_kwh = prev.price_per_kwh;
                o.wait_minutes = prev.wait_minutes;
            }
            options.push_back(o);
            candidates.push_back({o.station_id, o.distance_km, o.price_per_kwh, o.wait_minutes});
        }
        CHECK(*choose_station(options, w) == oracle::station_choice(candidates, w.distance, w.price, w.wait));
    }
    CHECK_FALSE(choose_station({}, w));
    CHECK_THROWS_AS(oracle::station_choice({}, 1, 1, 1), oracle::NoCandidateError);
    const std::vector<StationOption> one{{"ONLY", 3, 1, 0}};
    CHECK(*choose_station(one, w) == "ONLY");
    CHECK(oracle::station_choice({{"ONLY", 3, 1, 0}}, 0.5, 0.3, 0.2) == "ONLY");
}

TEST_CASE("decision responses are validated against the request") {
    const DecisionRequest req = decision_request(10.0);
    REQUIRE(!req.snapshot.stations.empty());
    const std::string sid = req.snapshot.stations[0].station_id;
    auto reply = [&](Json patch) {
        Json j = encode(baseline_decision(req, {}));
        for (auto it = patch.begin(); it != patch.end(); ++it) j[it.key()] = it.value();
        return canonical(j);
    };
    CHECK_NOTHROW(parse_decision_response(reply({{"station_id", sid}}), req));
    CHECK_THROWS_AS(parse_decision_response(reply({{"station_id", "NOPE"}}), req), SchemaError);
    CHECK_THROWS_AS(parse_decision_response(reply({{"amount_kwh", 70.0}}), req), SchemaError);
    CHECK_THROWS_AS(parse_decision_response(reply({{"decision", false}}), req), SchemaError);
    CHECK_THROWS_AS(parse_decision_response(reply({{"extra", 1}}), req), SchemaError);
    CHECK_THROWS_AS(parse_decision_response("Sure! " + reply({}), req), SchemaError);
    CHECK_THROWS_AS(parse_decision_response(reply({{"time_minutes", 10}}), req), SchemaError);
}

TEST_CASE("requests serialize with stable key order") {
    const DecisionRequest req = decision_request(30.0);
    const std::string a = canonical(encode(req));
    CHECK(a == canonical(encode(req)));
    CHECK(canonical(encode(decision_request_from_json(Json::parse(a)))) == a);
}

TEST_CASE("transport errors are retried with exponential backoff") {
    const MockProvider mock(settings());
    const std::string good = canonical(Json(mock.make_persona({"driver-01", 5})));
    std::vector<long> sleeps;
    auto sleeper = [&](std::chrono::milliseconds d) { sleeps.push_back(static_cast<long>(d.count())); };

    Scripted ok_after_two({"", "", good});
    Cognition c(ok_after_two, RetryPolicy{}, sleeper);
    CHECK(c.generate_persona({"driver-01", 5}) == mock.make_persona({"driver-01", 5}));
    CHECK(sleeps == std::vector<long>{250, 500});

    Scripted always_down({"", "", ""});
    Cognition d(always_down, RetryPolicy{}, sleeper);
    CHECK_THROWS_AS(d.generate_persona({"driver-01", 5}), ProviderError);
    CHECK(always_down.hints.size() == 3);
}

TEST_CASE("a malformed response gets exactly one repair round-trip") {
    const MockProvider mock(settings());
    const std::string good = canonical(Json(mock.make_persona({"driver-01", 5})));
    auto no_sleep = [](std::chrono::milliseconds) {};

    Scripted repaired({"{\"oops\": true}", good});
    Cognition c(repaired, RetryPolicy{}, no_sleep);
    CHECK_NOTHROW(c.generate_persona({"driver-01", 5}));
    REQUIRE(repaired.hints.size() == 2);
    CHECK(repaired.hints[0].empty());
    CHECK_FALSE(repaired.hints[1].empty());
    CHECK(c.repairs() == 1);

    Scripted broken({"{\"oops\": true}", "still not right", good});
    Cognition d(broken, RetryPolicy{}, no_sleep);
    CHECK_THROWS_AS(d.generate_persona({"driver-01", 5}), SchemaError);
    CHECK(broken.hints.size() == 2);
}

TEST_CASE("baseline reflection") {
    const Persona p = fixtures::persona();
    ReflectionRequest req;
    req.persona = p;
    req.day_index = 0;
    req.min_price_per_kwh = 0.8;
    req.max_price_per_kwh = 2.2;

    SUBCASE("quiet day without charging or stranding") {
        const ReflectionReport r = baseline_reflection(req);
        CHECK(r.plan_adherence.score == 1.0);
        CHECK(r.timestamp == kMinutesPerDay);
        CHECK(validate_reflection(r).empty());
    }
    SUBCASE("all planned legs driven, no charging") {
        const GeoPoint a(31.2, 121.4), b(31.25, 121.45);
        req.plan = {0, {{EventKind::work_shift, a, b, 420, 20, 8.0}, {EventKind::trip, b, a, 500, 20, 8.0}}};
        for (int i = 0; i < 2; ++i) {
            BehaviorRecord r;
            r.agent_id = p.id;
            r.action = BehaviorAction::travel;
            r.object_id = "leg:0:" + std::to_string(i);
            r.timestamp = 440 + 80 * i;
            req.day_records.push_back(r);
        }
        CHECK(baseline_reflection(req).plan_adherence.score == 1.0);
        req.stranded = true;
        CHECK(baseline_reflection(req).plan_adherence.score == 0.5);
    }
    SUBCASE("scores stay in range for random days") {
        std::mt19937_64 gen(4);
        for (int i = 0; i < 200; ++i) {
            req.day_records.clear();
            Minutes t = 0;
            for (int k = 0; k < 6; ++k) {
                t += std::uniform_int_distribution<Minutes>(10, 200)(gen);
                BehaviorRecord r;
                r.agent_id = p.id;
                r.timestamp = t;
                r.action = static_cast<BehaviorAction>(std::uniform_int_distribution<int>(0, 4)(gen));
                r.object_id = k % 2 ? "detour:SH01" : "leg:0:" + std::to_string(k);
                r.quintuple.time_minutes = t - std::uniform_int_distribution<Minutes>(0, 90)(gen);
                r.quintuple.price_per_kwh = std::uniform_real_distribution<double>(0.8, 2.2)(gen);
                r.quintuple.amount_kwh = 10;
                req.day_records.push_back(r);
            }
            req.stranded = i % 3 == 0;
            CHECK(validate_reflection(baseline_reflection(req)).empty());
        }
    }
}

TEST_CASE("response schemas are strict objects") {
    for (auto task : {CognitionTask::persona, CognitionTask::plan, CognitionTask::decide, CognitionTask::reflect}) {
        const Json s = response_schema(task);
        CHECK(s["type"] == "object");
        CHECK(s["additionalProperties"] == false);
        CHECK(s["required"].size() == s["properties"].size());
    }
}

TEST_CASE("fault injector corrupts roughly the requested share of replies") {
    MockProvider mock(settings());
    FaultInjectingProvider faulty(mock, 0.2, 42);
    const Json req = encode(PersonaRequest{"driver-01", 1});
    int invalid = 0;
    for (int i = 0; i < 500; ++i) {
        try {
            parse_persona_response(faulty.complete(CognitionTask::persona, req, nullptr), {"driver-01", 1});
        } catch (const SchemaError&) {
            ++invalid;
        }
    }
    CHECK(faulty.malformed() == invalid); // every corruption is caught
    CHECK(invalid > 60);
    CHECK(invalid < 140);
}
