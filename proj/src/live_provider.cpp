#include "evsim/live_provider.hpp"

#include <fstream>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "evsim/errors.hpp"

namespace evsim {

std::string default_prompt(CognitionTask task) {
    switch (task) {
    case CognitionTask::persona:
        return "You generate realistic profiles of electric-vehicle taxi drivers in Shanghai for a charging "
               "behavior simulation. The user message is JSON with the agent_id to use and a seed. Reply with one "
               "JSON object describing the driver: home location (lat/lon inside the city), demographics (age, "
               "gender, occupation), economics (income_level, price_sensitivity in [0,1]), psychology "
               "(risk_aversion and patience in [0,1], range_anxiety_threshold as a state-of-charge fraction "
               "strictly between 0 and 1), vehicle (model, battery_capacity_kwh, consumption_kwh_per_km, "
               "max_charge_power_kw) and charging habits (preferred_window as minutes of day, preferred_scenario, "
               "typical_target_soc in (0,1]). Output JSON only.";
    case CognitionTask::plan:
        return "You plan one working day for the electric-vehicle taxi driver described in the user message. "
               "Produce the day's events in time order: fares (work_shift), positioning or commute trips (trip), "
               "meal breaks (break) and evening leisure trips (leisure). Each event has origin and destination "
               "coordinates, a start time in minutes after midnight, a duration in minutes and the expected "
               "driving distance in km (0 exactly when origin equals destination). Events must not overlap and "
               "must end by minute 1440. Use the given day_index. Output JSON only.";
    case CognitionTask::decide:
        return "You are the electric-vehicle driver described by the persona in the user message. You have just "
               "finished an event. Using your plan, your perception of the trip and of nearby charging stations "
               "(scenario, time, space, energy and price for each), and your recent charging memory, decide "
               "whether to charge now. If you charge, pick a station_id from the perceived stations, an amount in "
               "kWh no larger than the free battery capacity, a power no larger than that station's "
               "effective_power_kw, and the expected start time in simulation minutes. If you do not charge, set "
               "station_id to null and amount_kwh to 0. Explain the decision in one sentence in reason. Output "
               "JSON only.";
    case CognitionTask::reflect:
        return "It is midnight. Review the day of the electric-vehicle driver in the user message: the persona, "
               "the planned events and the behavior records. Assess (1) plan adherence: did the decisions meet "
               "the driver's needs and plan; (2) satisfaction with charging time, station choice, amount, power "
               "and price, including cost-effectiveness; (3) persona consistency: how well the decisions fit the "
               "driver's habits and psychology. Give each a score in [0,1] and a short text. Output JSON only.";
    }
    return {};
}

OpenAiCompatibleProvider::OpenAiCompatibleProvider(LiveProviderConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("llm base_url needs a scheme: " + config_.base_url);
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";
}

std::string OpenAiCompatibleProvider::system_prompt(CognitionTask task) const {
    if (!config_.prompts_dir.empty()) {
        const auto file = config_.prompts_dir / (std::string(to_string(task)) + ".txt");
        if (std::ifstream in(file); in) {
            std::ostringstream os;
            os << in.rdbuf();
            return os.str();
        }
    }
    return default_prompt(task);
}

Json OpenAiCompatibleProvider::build_body(CognitionTask task, const Json& request, const RepairHint* repair) const {
    Json messages = Json::array();
    messages.push_back({{"role", "system"}, {"content", system_prompt(task)}});
    messages.push_back({{"role", "user"}, {"content", canonical(request)}});
    if (repair) {
        messages.push_back({{"role", "assistant"}, {"content", repair->previous_output}});
        messages.push_back({{"role", "user"},
                            {"content", "That answer was rejected: " + repair->error +
                                            ". Reply again with only a corrected JSON object."}});
    }
    return Json{{"model", config_.model},
                {"temperature", config_.temperature},
                {"messages", messages},
                {"response_format",
                 {{"type", "json_schema"},
                  {"json_schema",
                   {{"name", std::string(to_string(task)) + "_response"},
                    {"strict", true},
                    {"schema", response_schema(task)}}}}}};
}

std::string OpenAiCompatibleProvider::complete(CognitionTask task, const Json& request, const RepairHint* repair) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto res = client.Post(path_, headers, build_body(task, request, repair).dump(), "application/json");
    if (!res) throw ProviderError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));

    Json envelope;
    try {
        envelope = Json::parse(res->body);
        const Json& content = envelope.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw ProviderError("message content is not a string");
        return content.get<std::string>();
    } catch (const Json::exception& e) {
        throw ProviderError(std::string("malformed chat-completions envelope: ") + e.what());
    }
}

} // namespace evsim
