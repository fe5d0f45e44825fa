#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "evsim/cognition.hpp"
#include "evsim/config.hpp"
#include "evsim/environment.hpp"
#include "evsim/errors.hpp"
#include "evsim/memory.hpp"
#include "evsim/mock_provider.hpp"

namespace evsim {

enum class EventType { day_boundary, leg_start, leg_end, station_arrival, station_admit, charge_start, charge_end };

std::string_view to_string(EventType t);

struct SimEvent {
    Minutes time = 0;
    std::uint64_t sequence = 0;
    EventType type = EventType::day_boundary;
    std::size_t subject = 0; // agent index, or station index for station_admit
    std::size_t payload = 0; // plan event index or day index
};

/// Min-queue ordered by (time, sequence); sequence numbers are handed out at
/// push, so same-minute events pop in push order.
class EventQueue {
public:
    std::uint64_t push(Minutes time, EventType type, std::size_t subject, std::size_t payload = 0);
    SimEvent pop();
    const SimEvent& top() const { return heap_.top(); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
        }
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
};

/// The decision-cycle steps, logged so the order within a tick can be
/// audited.
enum class TraceStep { plan, consume, perceive, retrieve, decide, execute, reflect };

std::string_view to_string(TraceStep s);

struct TraceEntry {
    Minutes time = 0;
    std::string agent_id;
    TraceStep step = TraceStep::plan;
    bool operator==(const TraceEntry&) const = default;
};

struct AgentOutcome {
    std::string agent_id;
    Persona persona;
    EvState final_state;
    double initial_soc_kwh = 0.0;
    double consumed_kwh = 0.0;
    double charged_kwh = 0.0;
    double towed_kwh = 0.0; // net energy added by tow resets
    int strandings = 0;
    int fallback_decisions = 0;
    int fallback_reflections = 0;
    int fallback_plans = 0;
    bool fallback_persona = false;
    int dropped_events = 0; // plan events that no longer fit their day

    /// soc_final - soc_initial + consumed - charged - towed; zero up to
    /// rounding.
    double energy_imbalance_kwh() const {
        return final_state.soc_kwh - initial_soc_kwh + consumed_kwh - charged_kwh - towed_kwh;
    }
};

struct EngineAudit {
    std::uint64_t events_processed = 0;
    std::map<std::string, int> max_occupancy; // per station
    int occupancy_violations = 0;
    int soc_violations = 0;
    int record_violations = 0;
};

struct RunArtifacts {
    std::vector<BehaviorRecord> behavior; // emission order
    std::vector<ReflectionReport> reflections;
    std::vector<ChargeTicket> charges;    // admission order
    std::vector<TraceEntry> trace;
    std::vector<AgentOutcome> agents;     // by agent id
    std::map<std::string, std::vector<DailyPlan>> plans;
    EngineAudit audit;
    std::string behavior_digest;
    std::string reflections_digest;
};

/// Deterministic discrete-event simulation of the agent fleet. Each agent's
/// event end runs consume -> perceive -> retrieve -> decide -> execute, and
/// every day boundary runs the reflection for the finished day.
class Engine {
public:
    /// With a run directory, logs are streamed there as the run proceeds.
    Engine(ScenarioConfig config, CognitionProvider& provider,
           std::optional<std::filesystem::path> run_dir = std::nullopt);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Processes one event. Returns false once the horizon is reached and
    /// nothing is left to do.
    bool step();

    /// Runs to the horizon and collects the artifacts.
    RunArtifacts run();

    Minutes now() const { return now_; }
    const EnvironmentState& environment() const { return env_; }
    const EngineAudit& audit() const { return audit_; }
    std::size_t pending_events() const { return queue_.size(); }
    std::optional<SimEvent> last_event() const { return last_event_; }

private:
    struct PendingCharge {
        std::size_t station = 0;
        double target_kwh = 0.0;
        double detour_km = 0.0;
        ChargingScenario scenario = ChargingScenario::public_station;
        bool fallback = false;
        std::optional<ChargeTicket> ticket;
    };

    struct Agent {
        Persona persona;
        std::uint64_t seed = 0;
        MemoryStore memory;
        std::optional<DailyPlan> plan;
        std::size_t next_event = 0;
        std::optional<DailyPlan> pending_plan;
        bool awaiting_plan = true;
        double leg_km = 0.0;
        GeoPoint leg_destination;
        std::optional<PendingCharge> charge;
        std::set<std::int64_t> stranded_days;
        AgentOutcome outcome;
    };

    struct Arrival {
        Minutes time;
        std::string agent_id;
        std::size_t agent;
        auto operator<=>(const Arrival& o) const {
            return std::tie(time, agent_id) <=> std::tie(o.time, o.agent_id);
        }
        bool operator==(const Arrival& o) const = default;
    };

    void initialize();
    void dispatch(const SimEvent& e);

    void on_day_boundary(std::size_t agent, std::int64_t day);
    void on_leg_start(std::size_t agent, std::size_t index);
    void on_leg_end(std::size_t agent, std::size_t index);
    void on_station_arrival(std::size_t agent, std::size_t station);
    void on_station_admit(std::size_t station);
    void on_charge_start(std::size_t agent);
    void on_charge_end(std::size_t agent);

    void decide_and_act(std::size_t agent);
    void schedule_next(std::size_t agent);
    void strand(std::size_t agent, const StrandedError& err);
    void reflect(std::size_t agent, std::int64_t day);

    EvState& ev(std::size_t agent);
    BehaviorRecord base_record(std::size_t agent, BehaviorAction action, std::string object_id);
    void emit(std::size_t agent, BehaviorRecord record);
    void trace(std::size_t agent, TraceStep step);
    void audit_state();
    double consumption_rate(std::size_t agent) const;

    ScenarioConfig config_;
    Cognition cognition_;
    MockProvider fallback_;
    std::optional<std::filesystem::path> run_dir_;

    EnvironmentState env_;
    OfflineRouter router_;
    EventQueue queue_;
    std::vector<Agent> agents_;
    std::vector<std::set<Arrival>> arrivals_;          // per station, waiting for admission
    std::vector<std::set<Minutes>> admit_scheduled_;   // per station
    Minutes now_ = 0;
    Minutes horizon_end_ = 0;
    double min_price_ = 0.0;
    double max_price_ = 0.0;
    std::optional<SimEvent> last_event_;

    RunArtifacts artifacts_;
    EngineAudit audit_;
    std::ofstream behavior_log_;
    std::ofstream reflections_log_;
    std::ofstream trace_log_;
};

/// Runs a scenario with the provider named in the config (mock, or live
/// with LLM_API_KEY), optionally wrapped in fault injection.
RunArtifacts run_scenario(const ScenarioConfig& config, const std::optional<std::filesystem::path>& run_dir);

} // namespace evsim
