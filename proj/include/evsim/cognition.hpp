#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evsim/domain.hpp"
#include "evsim/memory.hpp"
#include "evsim/perception.hpp"
#include "evsim/serialize.hpp"

namespace evsim {

enum class CognitionTask { persona, plan, decide, reflect };

std::string_view to_string(CognitionTask t);

// --- Requests and responses -------------------------------------------------

struct PersonaRequest {
    std::string agent_id;
    std::uint64_t seed = 0;
};

struct PlanRequest {
    Persona persona;
    std::int64_t day_index = 0;
    std::uint64_t seed = 0;
};

struct DecisionRequest {
    Persona persona;
    std::vector<PlanEvent> plan_excerpt; // remaining events of the current day
    PerceptionSnapshot snapshot;
    std::vector<BehaviorRecord> short_memory;
    std::vector<DayAggregate> long_memory;
    Minutes clock = 0;
    Minutes idle_minutes = 0; // until the next planned departure
};

struct DecisionResponse {
    Quintuple quintuple;
    std::string reason;
    bool operator==(const DecisionResponse&) const = default;
};

struct ReflectionRequest {
    Persona persona;
    std::int64_t day_index = 0;
    DailyPlan plan;
    std::vector<BehaviorRecord> day_records;
    double min_price_per_kwh = 0.0;
    double max_price_per_kwh = 0.0;
    bool stranded = false;
};

Json encode(const PersonaRequest& r);
Json encode(const PlanRequest& r);
Json encode(const DecisionRequest& r);
Json encode(const ReflectionRequest& r);
Json encode(const DecisionResponse& r);

PersonaRequest persona_request_from_json(const Json& j);
PlanRequest plan_request_from_json(const Json& j);
DecisionRequest decision_request_from_json(const Json& j);
ReflectionRequest reflection_request_from_json(const Json& j);

// Response parsers: strict JSON schema plus semantic checks against the
// request. All throw SchemaError.
Persona parse_persona_response(std::string_view text, const PersonaRequest& req);
DailyPlan parse_plan_response(std::string_view text, const PlanRequest& req);
DecisionResponse parse_decision_response(std::string_view text, const DecisionRequest& req);
/// Fills agent_id, day_index and timestamp from the request.
ReflectionReport parse_reflection_response(std::string_view text, const ReflectionRequest& req);

/// JSON Schema describing the expected response for `task`, for providers
/// that support constrained output.
Json response_schema(CognitionTask task);

// --- Baseline policy ---------------------------------------------------------

struct BaselineWeights {
    double distance = 0.5;
    double price = 0.3;
    double wait = 0.2;
};

struct StationOption {
    std::string station_id;
    double distance_km = 0.0;
    double price_per_kwh = 0.0;
    double wait_minutes = 0.0;
};

inline constexpr Minutes kOpportunisticIdleMinutes = 45;

/// Weighted argmin of distance, price and wait; ties go to the lower id.
std::optional<std::string> choose_station(std::span<const StationOption> options, const BaselineWeights& w);

/// The rule-based decision: charge below the range-anxiety threshold, or
/// opportunistically during a long off-peak idle window below the usual
/// target.
DecisionResponse baseline_decision(const DecisionRequest& req, const BaselineWeights& w);

/// Rule-based end-of-day evaluation.
ReflectionReport baseline_reflection(const ReflectionRequest& req);

// --- Providers ------------------------------------------------------------

struct RepairHint {
    std::string previous_output;
    std::string error;
};

/// The language-model seat. Implementations return raw response text;
/// Cognition validates it. Transport failures throw ProviderError.
class CognitionProvider {
public:
    virtual ~CognitionProvider() = default;
    virtual std::string complete(CognitionTask task, const Json& request, const RepairHint* repair) = 0;
};

struct RetryPolicy {
    int transport_retries = 2;
    int schema_repairs = 1;
    std::chrono::milliseconds initial_backoff{250};
};

/// Typed front end over a provider: serializes requests, retries transport
/// errors with exponential backoff, re-prompts once on schema failure.
class Cognition {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit Cognition(CognitionProvider& provider, RetryPolicy policy = {}, Sleeper sleeper = {});

    Persona generate_persona(const PersonaRequest& req);
    DailyPlan plan_day(const PlanRequest& req);
    DecisionResponse decide(const DecisionRequest& req);
    ReflectionReport reflect(const ReflectionRequest& req);

    int calls() const { return calls_; }
    int repairs() const { return repairs_; }

private:
    template <typename Parse>
    auto ask(CognitionTask task, const Json& request, Parse parse);

    std::string call_with_retries(CognitionTask task, const Json& request, const RepairHint* repair);

    CognitionProvider& provider_;
    RetryPolicy policy_;
    Sleeper sleeper_;
    int calls_ = 0;
    int repairs_ = 0;
};

} // namespace evsim
