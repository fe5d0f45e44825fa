#include "evsim/engine.hpp"

#include <algorithm>
#include <cmath>

#include "evsim/digest.hpp"
#include "evsim/errors.hpp"
#include "evsim/live_provider.hpp"
#include "evsim/perception.hpp"
#include "evsim/rng.hpp"
#include "evsim/serialize.hpp"

namespace evsim {

namespace {

constexpr double kSocSlack = 1e-9;

std::string agent_name(int index, int count) {
    const int width = std::max<int>(2, static_cast<int>(std::to_string(count).size()));
    std::string n = std::to_string(index + 1);
    return "driver-" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, n.size()), '0') + n;
}

std::string fmt_kwh(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

std::string_view to_string(EventType t) {
    switch (t) {
    case EventType::day_boundary: return "day_boundary";
    case EventType::leg_start: return "leg_start";
    case EventType::leg_end: return "leg_end";
    case EventType::station_arrival: return "station_arrival";
    case EventType::station_admit: return "station_admit";
    case EventType::charge_start: return "charge_start";
    case EventType::charge_end: return "charge_end";
    }
    return "?";
}

std::string_view to_string(TraceStep s) {
    switch (s) {
    case TraceStep::plan: return "plan";
    case TraceStep::consume: return "consume";
    case TraceStep::perceive: return "perceive";
    case TraceStep::retrieve: return "retrieve";
    case TraceStep::decide: return "decide";
    case TraceStep::execute: return "execute";
    case TraceStep::reflect: return "reflect";
    }
    return "?";
}

std::uint64_t EventQueue::push(Minutes time, EventType type, std::size_t subject, std::size_t payload) {
    const std::uint64_t seq = next_sequence_++;
    heap_.push({time, seq, type, subject, payload});
    return seq;
}

SimEvent EventQueue::pop() {
    SimEvent e = heap_.top();
    heap_.pop();
    return e;
}

Engine::Engine(ScenarioConfig config, CognitionProvider& provider, std::optional<std::filesystem::path> run_dir)
    : config_(std::move(config)),
      cognition_(provider, config_.retry),
      fallback_(config_.mock_settings()),
      run_dir_(std::move(run_dir)),
      env_(build_environment(config_)),
      router_(config_.routing) {
    if (const auto problems = validate_config(config_); !problems.empty())
        throw ConfigError("invalid config: " + problems.front());
    horizon_end_ = static_cast<Minutes>(config_.horizon_days) * kMinutesPerDay;
    initialize();
}

Engine::~Engine() = default;

void Engine::initialize() {
    min_price_ = std::numeric_limits<double>::infinity();
    max_price_ = 0.0;
    for (const auto& [id, t] : env_.tariffs) {
        min_price_ = std::min(min_price_, t.min_price());
        max_price_ = std::max(max_price_, t.max_price());
    }
    arrivals_.resize(env_.stations.size());
    admit_scheduled_.resize(env_.stations.size());

    if (run_dir_) {
        std::filesystem::create_directories(*run_dir_ / "memory");
        behavior_log_.open(*run_dir_ / "behavior.log", std::ios::binary | std::ios::trunc);
        reflections_log_.open(*run_dir_ / "reflections.log", std::ios::binary | std::ios::trunc);
        trace_log_.open(*run_dir_ / "trace.log", std::ios::binary | std::ios::trunc);
        std::ofstream(*run_dir_ / "plans.jsonl", std::ios::binary | std::ios::trunc);
        if (!behavior_log_ || !reflections_log_ || !trace_log_)
            throw ArtifactError("cannot write logs under " + run_dir_->string());
        std::ofstream(*run_dir_ / "config.json", std::ios::binary) << config_to_json(config_).dump(2) << '\n';
    }

    agents_.resize(static_cast<std::size_t>(config_.num_agents));
    Json personas = Json::array();
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        Agent& a = agents_[i];
        const std::string id = agent_name(static_cast<int>(i), config_.num_agents);
        a.seed = mix_seed(config_.seed, i + 1);
        const PersonaRequest req{id, a.seed};
        try {
            a.persona = cognition_.generate_persona(req);
        } catch (const SchemaError&) {
            a.persona = fallback_.make_persona(req);
            a.outcome.fallback_persona = true;
        } catch (const ProviderError&) {
            a.persona = fallback_.make_persona(req);
            a.outcome.fallback_persona = true;
        }
        a.outcome.agent_id = id;
        a.outcome.persona = a.persona;
        personas.push_back(a.persona);

        if (run_dir_) {
            const auto path = *run_dir_ / "memory" / (id + ".log");
            std::filesystem::remove(path);
            a.memory = MemoryStore::open(path);
        }

        EvState ev;
        ev.agent_id = id;
        ev.location = a.persona.home;
        ev.battery_capacity_kwh = a.persona.vehicle.battery_capacity_kwh;
        ev.soc_kwh = std::min(config_.initial_soc_kwh, ev.battery_capacity_kwh);
        ev.max_charge_power_kw = a.persona.vehicle.max_charge_power_kw;
        env_.evs[id] = ev;
        a.outcome.initial_soc_kwh = ev.soc_kwh;
    }
    if (run_dir_) std::ofstream(*run_dir_ / "personas.json", std::ios::binary) << personas.dump(2) << '\n';

    for (std::size_t i = 0; i < agents_.size(); ++i) {
        BehaviorRecord r = base_record(i, BehaviorAction::idle, "home");
        r.reason = "shift pattern begins at home";
        emit(i, std::move(r));
    }
    // Day boundaries go in first so they precede everything else at their
    // minute.
    for (int d = 0; d <= config_.horizon_days; ++d)
        for (std::size_t i = 0; i < agents_.size(); ++i)
            queue_.push(static_cast<Minutes>(d) * kMinutesPerDay, EventType::day_boundary, i,
                        static_cast<std::size_t>(d));
}

EvState& Engine::ev(std::size_t agent) { return env_.evs.at(agents_[agent].outcome.agent_id); }

double Engine::consumption_rate(std::size_t agent) const {
    return agents_[agent].persona.vehicle.consumption_kwh_per_km;
}

BehaviorRecord Engine::base_record(std::size_t agent, BehaviorAction action, std::string object_id) {
    const EvState& e = ev(agent);
    BehaviorRecord r;
    r.agent_id = e.agent_id;
    r.action = action;
    r.object_id = std::move(object_id);
    r.timestamp = now_;
    r.quintuple.time_minutes = now_;
    r.location = e.location;
    r.soc_kwh = e.soc_kwh;
    return r;
}

void Engine::emit(std::size_t agent, BehaviorRecord record) {
    if (!validate_record(record, ev(agent).battery_capacity_kwh).empty()) ++audit_.record_violations;
    agents_[agent].memory.append(record);
    if (behavior_log_.is_open()) behavior_log_ << canonical(Json(record)) << '\n';
    artifacts_.behavior.push_back(std::move(record));
}

void Engine::trace(std::size_t agent, TraceStep step) {
    TraceEntry t{now_, agents_[agent].outcome.agent_id, step};
    if (trace_log_.is_open()) trace_log_ << t.time << '\t' << t.agent_id << '\t' << to_string(step) << '\n';
    artifacts_.trace.push_back(std::move(t));
}

bool Engine::step() {
    while (!queue_.empty()) {
        const SimEvent e = queue_.pop();
        // Past the horizon only the closing reflections still run.
        if (e.time >= horizon_end_ && e.type != EventType::day_boundary) continue;
        if (e.time > horizon_end_) continue;
        now_ = e.time;
        last_event_ = e;
        dispatch(e);
        ++audit_.events_processed;
        audit_state();
        return true;
    }
    return false;
}

void Engine::dispatch(const SimEvent& e) {
    switch (e.type) {
    case EventType::day_boundary: on_day_boundary(e.subject, static_cast<std::int64_t>(e.payload)); break;
    case EventType::leg_start: on_leg_start(e.subject, e.payload); break;
    case EventType::leg_end: on_leg_end(e.subject, e.payload); break;
    case EventType::station_arrival: on_station_arrival(e.subject, e.payload); break;
    case EventType::station_admit: on_station_admit(e.subject); break;
    case EventType::charge_start: on_charge_start(e.subject); break;
    case EventType::charge_end: on_charge_end(e.subject); break;
    }
}

void Engine::audit_state() {
    for (const auto& s : env_.stations) {
        const int occ = s.occupancy(now_);
        int& peak = audit_.max_occupancy[s.station_id];
        peak = std::max(peak, occ);
        if (occ > s.pile_count) ++audit_.occupancy_violations;
    }
    if (last_event_ && last_event_->type != EventType::station_admit) {
        const EvState& e = ev(last_event_->subject);
        if (e.soc_kwh < 0.0 || e.soc_kwh > e.battery_capacity_kwh + kSocSlack) ++audit_.soc_violations;
    }
}

// --- Day boundaries ----------------------------------------------------------

void Engine::on_day_boundary(std::size_t agent, std::int64_t day) {
    Agent& a = agents_[agent];
    EvState& e = ev(agent);
    if (day >= 1) {
        if (e.status == EvStatus::stranded) {
            const double before = e.soc_kwh;
            e.soc_kwh = std::max(before, config_.tow_soc_fraction * e.battery_capacity_kwh);
            e.location = a.persona.home;
            e.status = EvStatus::idle;
            a.outcome.towed_kwh += e.soc_kwh - before;
            a.awaiting_plan = true;
            BehaviorRecord r = base_record(agent, BehaviorAction::idle, "tow");
            r.reason = "towed home overnight after stranding";
            emit(agent, std::move(r));
        }
        reflect(agent, day - 1);
    }
    if (day >= config_.horizon_days) return;

    trace(agent, TraceStep::plan);
    const PlanRequest req{a.persona, day, a.seed};
    DailyPlan plan;
    try {
        plan = cognition_.plan_day(req);
    } catch (const SchemaError&) {
        plan = fallback_.make_plan(req);
        ++a.outcome.fallback_plans;
    } catch (const ProviderError&) {
        plan = fallback_.make_plan(req);
        ++a.outcome.fallback_plans;
    }
    artifacts_.plans[a.outcome.agent_id].push_back(plan);
    if (run_dir_) {
        std::ofstream out(*run_dir_ / "plans.jsonl", std::ios::binary | std::ios::app);
        out << canonical(Json{{"agent_id", a.outcome.agent_id}, {"plan", plan}}) << '\n';
    }
    if (a.awaiting_plan) {
        a.plan = std::move(plan);
        a.next_event = 0;
        a.awaiting_plan = false;
        schedule_next(agent);
    } else {
        a.pending_plan = std::move(plan);
    }
}

void Engine::reflect(std::size_t agent, std::int64_t day) {
    Agent& a = agents_[agent];
    trace(agent, TraceStep::reflect);
    ReflectionRequest req;
    req.persona = a.persona;
    req.day_index = day;
    const auto& plans = artifacts_.plans[a.outcome.agent_id];
    for (const auto& p : plans)
        if (p.day_index == day) req.plan = p;
    req.plan.day_index = day;
    const Minutes lo = day * kMinutesPerDay, hi = lo + kMinutesPerDay;
    for (const auto& r : a.memory.records())
        if (r.timestamp >= lo && r.timestamp < hi) req.day_records.push_back(r);
    req.min_price_per_kwh = min_price_;
    req.max_price_per_kwh = max_price_;
    req.stranded = a.stranded_days.count(day) > 0;

    ReflectionReport report;
    bool failed = false;
    try {
        report = cognition_.reflect(req);
    } catch (const SchemaError&) {
        failed = true;
    } catch (const ProviderError&) {
        failed = true;
    }
    if (failed) {
        const Assessment unavailable{0.5, "unavailable"};
        report = ReflectionReport{a.outcome.agent_id, day, (day + 1) * kMinutesPerDay,
                                  unavailable, unavailable, unavailable, true};
    }
    if (report.fallback) ++a.outcome.fallback_reflections;
    a.memory.append_reflection(report);
    if (reflections_log_.is_open()) reflections_log_ << canonical(Json(report)) << '\n';
    artifacts_.reflections.push_back(std::move(report));
}

// --- Plan execution ------------------------------------------------------------

void Engine::schedule_next(std::size_t agent) {
    Agent& a = agents_[agent];
    for (;;) {
        if (a.plan && a.next_event < a.plan->events.size()) {
            const PlanEvent& pe = a.plan->events[a.next_event];
            const Minutes base = a.plan->day_index * kMinutesPerDay;
            const Minutes start = std::max(now_, base + pe.start);
            if (start < base + kMinutesPerDay && start < horizon_end_) {
                queue_.push(start, EventType::leg_start, agent, a.next_event);
                return;
            }
            a.outcome.dropped_events += static_cast<int>(a.plan->events.size() - a.next_event);
            a.next_event = a.plan->events.size();
            continue;
        }
        if (a.pending_plan) {
            a.plan = std::move(a.pending_plan);
            a.pending_plan.reset();
            a.next_event = 0;
            continue;
        }
        a.awaiting_plan = true;
        return;
    }
}

void Engine::on_leg_start(std::size_t agent, std::size_t index) {
    Agent& a = agents_[agent];
    EvState& e = ev(agent);
    const PlanEvent& pe = a.plan->events.at(index);
    a.next_event = index + 1;
    if (pe.origin == pe.destination && pe.expected_distance_km == 0.0) {
        // Stationary event: stay put for its duration.
        a.leg_km = 0.0;
        a.leg_destination = e.location;
        queue_.push(now_ + pe.duration_minutes, EventType::leg_end, agent, index);
        return;
    }
    const RouteEstimate r = router_.route(e.location, pe.destination, now_ % kMinutesPerDay);
    a.leg_km = r.distance_km;
    a.leg_destination = pe.destination;
    e.status = EvStatus::driving;
    queue_.push(now_ + r.travel_minutes, EventType::leg_end, agent, index);
}

void Engine::on_leg_end(std::size_t agent, std::size_t index) {
    Agent& a = agents_[agent];
    const std::string object = "leg:" + std::to_string(a.plan->day_index) + ":" + std::to_string(index);

    trace(agent, TraceStep::consume);
    if (a.leg_km > 0.0) {
        try {
            EvState moved = consume_energy(ev(agent), a.leg_km, consumption_rate(agent));
            moved.location = a.leg_destination;
            moved.status = EvStatus::idle;
            a.outcome.consumed_kwh += a.leg_km * consumption_rate(agent);
            ev(agent) = moved;
        } catch (const StrandedError& err) {
            strand(agent, err);
            return;
        }
        BehaviorRecord r = base_record(agent, BehaviorAction::travel, object);
        r.distance_km = a.leg_km;
        r.reason = std::string(to_string(a.plan->events[index].kind));
        emit(agent, std::move(r));
    } else {
        BehaviorRecord r = base_record(agent, BehaviorAction::idle, object);
        r.reason = std::string(to_string(a.plan->events[index].kind));
        emit(agent, std::move(r));
    }
    decide_and_act(agent);
}

void Engine::strand(std::size_t agent, const StrandedError& err) {
    Agent& a = agents_[agent];
    EvState& e = ev(agent);
    e.status = EvStatus::stranded;
    a.charge.reset();
    ++a.outcome.strandings;
    a.stranded_days.insert(now_ / kMinutesPerDay);
    BehaviorRecord r = base_record(agent, BehaviorAction::idle, "stranded");
    r.reason = "stranded: trip needs " + fmt_kwh(err.required_kwh()) + " kWh, " + fmt_kwh(err.available_kwh()) +
               " kWh left";
    emit(agent, std::move(r));
}

void Engine::decide_and_act(std::size_t agent) {
    Agent& a = agents_[agent];
    EvState& e = ev(agent);

    // What comes next: the rest of today's plan, else tomorrow's if it is
    // already known.
    const PlanEvent* next = nullptr;
    Minutes next_base = 0;
    if (a.plan && a.next_event < a.plan->events.size()) {
        next = &a.plan->events[a.next_event];
        next_base = a.plan->day_index * kMinutesPerDay;
    } else if (a.pending_plan && !a.pending_plan->events.empty()) {
        next = &a.pending_plan->events.front();
        next_base = a.pending_plan->day_index * kMinutesPerDay;
    }

    trace(agent, TraceStep::perceive);
    AgentOutlook outlook{e.agent_id, a.persona.habits.typical_target_soc, std::nullopt, std::nullopt};
    if (next) {
        outlook.next_event_time = std::max(now_, next_base + next->start);
        outlook.next_destination = next->destination;
    }
    const SimClock clock(now_);
    PerceptionSnapshot snapshot = perceive(outlook, env_, clock, config_.search_radius_km);

    trace(agent, TraceStep::retrieve);
    DecisionRequest req;
    req.persona = a.persona;
    if (a.plan)
        req.plan_excerpt.assign(a.plan->events.begin() + static_cast<std::ptrdiff_t>(a.next_event),
                                a.plan->events.end());
    req.snapshot = std::move(snapshot);
    req.short_memory = a.memory.retrieve(clock, MemoryHorizon::short_term);
    req.long_memory = a.memory.long_term_aggregates(clock);
    req.clock = now_;
    req.idle_minutes = outlook.next_event_time ? *outlook.next_event_time - now_
                                               : (now_ / kMinutesPerDay + 1) * kMinutesPerDay - now_;

    trace(agent, TraceStep::decide);
    DecisionResponse resp;
    bool fallback = false;
    try {
        resp = cognition_.decide(req);
    } catch (const SchemaError&) {
        fallback = true;
    } catch (const ProviderError&) {
        fallback = true;
    }
    if (fallback) {
        resp = baseline_decision(req, config_.weights);
        ++a.outcome.fallback_decisions;
    }

    trace(agent, TraceStep::execute);
    const Quintuple& q = resp.quintuple;
    if (!q.decision || !q.station_id || !(q.amount_kwh > 0.0)) {
        BehaviorRecord r = base_record(agent, BehaviorAction::skip_charging, q.station_id.value_or("none"));
        r.quintuple = q;
        r.reason = resp.reason;
        r.fallback = fallback;
        emit(agent, std::move(r));
        schedule_next(agent);
        return;
    }

    BehaviorRecord r = base_record(agent, BehaviorAction::start_charging, *q.station_id);
    r.quintuple = q;
    r.reason = resp.reason;
    r.fallback = fallback;
    emit(agent, std::move(r));

    const auto it = std::lower_bound(env_.stations.begin(), env_.stations.end(), *q.station_id,
                                     [](const ChargingStation& s, const std::string& k) { return s.station_id < k; });
    const std::size_t station = static_cast<std::size_t>(it - env_.stations.begin());
    const RouteEstimate detour = router_.route(e.location, it->location, now_ % kMinutesPerDay);
    a.charge = PendingCharge{station, q.amount_kwh, detour.distance_km, q.scenario, fallback, std::nullopt};
    e.status = EvStatus::driving;
    queue_.push(now_ + detour.travel_minutes, EventType::station_arrival, agent, station);
}

// --- Charging --------------------------------------------------------------------

void Engine::on_station_arrival(std::size_t agent, std::size_t station) {
    Agent& a = agents_[agent];
    if (!a.charge) return;
    const ChargingStation& s = env_.stations[station];
    if (a.charge->detour_km > 0.0) {
        try {
            EvState moved = consume_energy(ev(agent), a.charge->detour_km, consumption_rate(agent));
            a.outcome.consumed_kwh += a.charge->detour_km * consumption_rate(agent);
            ev(agent) = moved;
        } catch (const StrandedError& err) {
            strand(agent, err);
            return;
        }
    }
    EvState& e = ev(agent);
    e.location = s.location;
    e.status = EvStatus::queued;
    BehaviorRecord r = base_record(agent, BehaviorAction::travel, "detour:" + s.station_id);
    r.distance_km = a.charge->detour_km;
    r.reason = "drive to charger";
    emit(agent, std::move(r));

    arrivals_[station].insert({now_, e.agent_id, agent});
    if (admit_scheduled_[station].insert(now_).second) queue_.push(now_, EventType::station_admit, station);
}

void Engine::on_station_admit(std::size_t station) {
    admit_scheduled_[station].erase(now_);
    ChargingStation& s = env_.stations[station];
    const TariffSchedule& tariff = env_.tariff_of(s);
    // Same-minute arrivals are admitted in agent-id order.
    auto& waiting = arrivals_[station];
    while (!waiting.empty() && waiting.begin()->time <= now_) {
        const Arrival arr = *waiting.begin();
        waiting.erase(waiting.begin());
        Agent& a = agents_[arr.agent];
        try {
            ChargeTicket t = begin_charge(s, ev(arr.agent), a.charge->target_kwh, SimClock(now_), tariff);
            a.charge->ticket = t;
            artifacts_.charges.push_back(t);
            queue_.push(t.start_charge, EventType::charge_start, arr.agent);
            queue_.push(t.end_charge, EventType::charge_end, arr.agent);
        } catch (const ZeroChargeError&) {
            a.charge.reset();
            ev(arr.agent).status = EvStatus::idle;
            const std::size_t prev_subject = arr.agent;
            BehaviorRecord r = base_record(prev_subject, BehaviorAction::idle, s.station_id);
            r.reason = "battery already full";
            emit(prev_subject, std::move(r));
            schedule_next(prev_subject);
        }
    }
}

void Engine::on_charge_start(std::size_t agent) {
    if (agents_[agent].charge) ev(agent).status = EvStatus::charging;
}

void Engine::on_charge_end(std::size_t agent) {
    Agent& a = agents_[agent];
    if (!a.charge || !a.charge->ticket) return;
    const ChargeTicket t = *a.charge->ticket;
    EvState& e = ev(agent);
    e.soc_kwh += t.energy_kwh;
    e.status = EvStatus::idle;
    a.outcome.charged_kwh += t.energy_kwh;

    BehaviorRecord r = base_record(agent, BehaviorAction::stop_charging, t.station_id);
    r.quintuple.decision = true;
    r.quintuple.scenario = a.charge->scenario;
    r.quintuple.time_minutes = t.start_charge;
    r.quintuple.station_id = t.station_id;
    r.quintuple.amount_kwh = t.energy_kwh;
    r.quintuple.power_kw = t.power_kw;
    r.quintuple.price_per_kwh = quantize_price(t.cost / t.energy_kwh);
    r.cost = t.cost;
    r.fallback = a.charge->fallback;
    r.reason = "charged " + fmt_kwh(t.energy_kwh) + " kWh after waiting " + std::to_string(t.wait_minutes()) + " min";
    a.charge.reset();
    emit(agent, std::move(r));
    schedule_next(agent);
}

// --- Run ---------------------------------------------------------------------------

RunArtifacts Engine::run() {
    while (step()) {
    }
    behavior_log_.flush();
    reflections_log_.flush();
    trace_log_.flush();

    RunArtifacts out = std::move(artifacts_);
    artifacts_ = {};
    for (auto& a : agents_) {
        a.outcome.final_state = env_.evs.at(a.outcome.agent_id);
        out.agents.push_back(a.outcome);
    }
    out.audit = audit_;

    std::string behavior_text, reflection_text;
    for (const auto& r : out.behavior) behavior_text += canonical(Json(r)) + '\n';
    for (const auto& r : out.reflections) reflection_text += canonical(Json(r)) + '\n';
    out.behavior_digest = sha256_hex(behavior_text);
    out.reflections_digest = sha256_hex(reflection_text);
    return out;
}

RunArtifacts run_scenario(const ScenarioConfig& config, const std::optional<std::filesystem::path>& run_dir) {
    std::unique_ptr<CognitionProvider> base;
    if (config.provider == ProviderKind::live) {
        LiveProviderConfig llm = config.llm;
        if (llm.api_key.empty())
            if (const char* key = std::getenv("LLM_API_KEY")) llm.api_key = key;
        if (llm.api_key.empty()) throw ConfigError("live provider needs LLM_API_KEY");
        base = std::make_unique<OpenAiCompatibleProvider>(llm);
    } else {
        base = std::make_unique<MockProvider>(config.mock_settings());
    }
    std::unique_ptr<FaultInjectingProvider> faulty;
    CognitionProvider* provider = base.get();
    if (config.faults.malformed_rate > 0.0 || config.faults.transport_error_rate > 0.0) {
        faulty = std::make_unique<FaultInjectingProvider>(*base, config.faults.malformed_rate, config.seed,
                                                          config.faults.transport_error_rate);
        provider = faulty.get();
    }
    Engine engine(config, *provider, run_dir);
    return engine.run();
}

} // namespace evsim
