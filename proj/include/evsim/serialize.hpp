#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "evsim/domain.hpp"

namespace evsim {

using Json = nlohmann::json;

/// Strict accessor over a JSON object: every read names its path in errors,
/// and finish() rejects keys that were never read. All failures throw
/// SchemaError.
class StrictObject {
public:
    StrictObject(const Json& j, std::string path);

    const Json& at(const std::string& key);
    bool has(const std::string& key) const;

    double number(const std::string& key);
    std::int64_t integer(const std::string& key);
    bool boolean(const std::string& key);
    std::string string(const std::string& key);
    std::optional<std::string> nullable_string(const std::string& key);
    StrictObject object(const std::string& key);

    std::string path_of(const std::string& key) const { return path_ + "." + key; }
    void finish() const;

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void to_json(Json& j, const GeoPoint& p);
void to_json(Json& j, const TimeWindow& w);
void to_json(Json& j, const Persona& p);
void to_json(Json& j, const Quintuple& q);
void to_json(Json& j, const BehaviorRecord& r);
void to_json(Json& j, const PlanEvent& e);
void to_json(Json& j, const DailyPlan& p);
void to_json(Json& j, const Assessment& a);
void to_json(Json& j, const ReflectionReport& r);

GeoPoint geo_point_from_json(const Json& j, const std::string& path = "$");
TimeWindow time_window_from_json(const Json& j, const std::string& path = "$");
Persona persona_from_json(const Json& j, const std::string& path = "$");
Quintuple quintuple_from_json(StrictObject& obj);
BehaviorRecord record_from_json(const Json& j, const std::string& path = "$");
PlanEvent plan_event_from_json(const Json& j, const std::string& path = "$");
DailyPlan plan_from_json(const Json& j, const std::string& path = "$");
Assessment assessment_from_json(const Json& j, const std::string& path = "$");
ReflectionReport reflection_from_json(const Json& j, const std::string& path = "$");

/// One-line JSON text with sorted keys; the canonical encoding for logs,
/// prompts and digests.
std::string canonical(const Json& j);

} // namespace evsim
