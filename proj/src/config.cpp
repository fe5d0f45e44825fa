#include "evsim/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "evsim/errors.hpp"

namespace evsim {

namespace {

// Reader for optional-with-default config sections. Type errors and unknown
// keys are reported with their path.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!known_.contains(it.key())) throw ConfigError(path_ + "." + it.key() + ": unknown key");
    }

    const Json* find(const std::string& key) {
        known_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        const Json* v = find(key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v->is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v->is_number_integer()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v->is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v->is_string()) throw ConfigError("");
            }
            out = v->get<T>();
        } catch (const std::exception&) {
            throw ConfigError(path(key) + ": wrong type");
        }
    }

    void read_minutes(const std::string& key, Minutes& out) {
        if (const Json* v = find(key)) out = parse_minutes(*v, path(key));
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    static Minutes parse_minutes(const Json& v, const std::string& where) {
        if (v.is_number_integer()) return v.get<Minutes>();
        if (v.is_string()) {
            int h = -1, m = -1;
            char tail = 0;
            if (std::sscanf(v.get<std::string>().c_str(), "%d:%d%c", &h, &m, &tail) == 2 && h >= 0 && h <= 24 &&
                m >= 0 && m < 60)
                return h * 60 + m;
        }
        throw ConfigError(where + ": expected minutes or \"HH:MM\"");
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> known_;
};

template <typename T>
void read_list(Section& s, const std::string& key, std::vector<T>& out) {
    const Json* v = s.find(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(s.path(key) + ": expected an array");
    try {
        out = v->get<std::vector<T>>();
    } catch (const std::exception&) {
        throw ConfigError(s.path(key) + ": wrong element type");
    }
}

GeoPoint read_point(const Json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("lat") || !j.contains("lon") || !j["lat"].is_number() || !j["lon"].is_number())
        throw ConfigError(where + ": expected {lat, lon}");
    try {
        return GeoPoint(j["lat"].get<double>(), j["lon"].get<double>());
    } catch (const InvalidValue& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

} // namespace

std::string format_time_of_day(Minutes tod) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld", static_cast<long long>(tod / 60), static_cast<long long>(tod % 60));
    return buf;
}

ScenarioConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    ScenarioConfig c = default_config();
    Section root(j, "$");

    if (const Json* v = root.find("scenario")) {
        Section s(*v, "$.scenario");
        s.read("num_agents", c.num_agents);
        s.read("horizon_days", c.horizon_days);
        s.read("initial_soc_kwh", c.initial_soc_kwh);
        s.read("seed", c.seed);
        s.read("search_radius_km", c.search_radius_km);
        s.read("tow_soc_fraction", c.tow_soc_fraction);
        s.finish();
    }

    if (const Json* v = root.find("provider")) {
        Section s(*v, "$.provider");
        std::string kind = "mock";
        s.read("kind", kind);
        if (kind == "mock")
            c.provider = ProviderKind::mock;
        else if (kind == "live")
            c.provider = ProviderKind::live;
        else
            throw ConfigError("$.provider.kind: expected mock|live");
        if (const Json* l = s.find("llm")) {
            Section ls(*l, "$.provider.llm");
            ls.read("base_url", c.llm.base_url);
            ls.read("model", c.llm.model);
            ls.read("temperature", c.llm.temperature);
            ls.read("timeout_seconds", c.llm.timeout_seconds);
            std::string prompts;
            ls.read("prompts_dir", prompts);
            if (!prompts.empty()) {
                std::filesystem::path p(prompts);
                c.llm.prompts_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            }
            ls.finish();
        }
        if (const Json* r = s.find("retry")) {
            Section rs(*r, "$.provider.retry");
            rs.read("transport_retries", c.retry.transport_retries);
            rs.read("schema_repairs", c.retry.schema_repairs);
            std::int64_t ms = c.retry.initial_backoff.count();
            rs.read("initial_backoff_ms", ms);
            c.retry.initial_backoff = std::chrono::milliseconds(ms);
            rs.finish();
        }
        if (const Json* f = s.find("fault_injection")) {
            Section fs(*f, "$.provider.fault_injection");
            fs.read("malformed_rate", c.faults.malformed_rate);
            fs.read("transport_error_rate", c.faults.transport_error_rate);
            fs.finish();
        }
        s.finish();
    }

    if (const Json* v = root.find("routing")) {
        Section s(*v, "$.routing");
        s.read("detour_factor", c.routing.detour_factor);
        s.read("speed_kmh", c.routing.speed_kmh);
        if (const Json* cg = s.find("congestion")) {
            if (!cg->is_array() || cg->size() != 24) throw ConfigError("$.routing.congestion: expected 24 numbers");
            for (std::size_t h = 0; h < 24; ++h) {
                if (!(*cg)[h].is_number()) throw ConfigError("$.routing.congestion: expected 24 numbers");
                c.routing.congestion[h] = (*cg)[h].get<double>();
            }
        }
        s.finish();
    }

    if (const Json* v = root.find("baseline_weights")) {
        Section s(*v, "$.baseline_weights");
        s.read("distance", c.weights.distance);
        s.read("price", c.weights.price);
        s.read("wait", c.weights.wait);
        s.finish();
    }

    if (const Json* v = root.find("service_area")) {
        Section s(*v, "$.service_area");
        s.read("lat_min", c.area.lat_min);
        s.read("lat_max", c.area.lat_max);
        s.read("lon_min", c.area.lon_min);
        s.read("lon_max", c.area.lon_max);
        s.finish();
    }

    if (const Json* v = root.find("persona_template")) {
        Section s(*v, "$.persona_template");
        auto& t = c.persona_template;
        read_list(s, "occupations", t.occupations);
        read_list(s, "vehicle_models", t.vehicle_models);
        s.read("age_min", t.age_min);
        s.read("age_max", t.age_max);
        s.read("battery_capacity_kwh", t.battery_capacity_kwh);
        s.read("consumption_min", t.consumption_min);
        s.read("consumption_max", t.consumption_max);
        read_list(s, "charge_power_choices", t.charge_power_choices);
        s.read("anxiety_min", t.anxiety_min);
        s.read("anxiety_max", t.anxiety_max);
        s.read("target_soc_min", t.target_soc_min);
        s.read("target_soc_max", t.target_soc_max);
        s.finish();
    }

    if (const Json* v = root.find("plan_template")) {
        Section s(*v, "$.plan_template");
        auto& t = c.plan_template;
        s.read_minutes("morning_start", t.morning_start);
        s.read_minutes("morning_end", t.morning_end);
        s.read_minutes("afternoon_start", t.afternoon_start);
        s.read_minutes("afternoon_end", t.afternoon_end);
        s.read("gap_min", t.gap_min);
        s.read("gap_max", t.gap_max);
        s.read("leg_min_km", t.leg_min_km);
        s.read("leg_max_km", t.leg_max_km);
        s.read("leisure_probability", t.leisure_probability);
        s.read_minutes("leisure_start_min", t.leisure_start_min);
        s.read_minutes("leisure_start_max", t.leisure_start_max);
        s.read("leisure_stay_min", t.leisure_stay_min);
        s.read("leisure_stay_max", t.leisure_stay_max);
        s.finish();
    }

    if (const Json* v = root.find("tariffs")) {
        if (!v->is_object()) throw ConfigError("$.tariffs: expected an object of band lists");
        c.tariffs.clear();
        for (auto it = v->begin(); it != v->end(); ++it) {
            const std::string where = "$.tariffs." + it.key();
            if (!it->is_array()) throw ConfigError(where + ": expected an array of bands");
            std::vector<TariffBand> bands;
            for (std::size_t i = 0; i < it->size(); ++i) {
                Section b((*it)[i], where + "[" + std::to_string(i) + "]");
                TariffBand band;
                b.read_minutes("start", band.start);
                b.read_minutes("end", band.end);
                b.read("price_per_kwh", band.price_per_kwh);
                band.price_per_kwh = quantize_price(band.price_per_kwh);
                bands.push_back(band);
                b.finish();
            }
            c.tariffs[it.key()] = std::move(bands);
        }
    }

    if (const Json* v = root.find("stations")) {
        if (!v->is_array()) throw ConfigError("$.stations: expected an array");
        c.stations.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string where = "$.stations[" + std::to_string(i) + "]";
            Section s((*v)[i], where);
            StationSpec st;
            s.read("id", st.station_id);
            s.read("name", st.name);
            double lat = 0.0, lon = 0.0;
            if (!s.find("lat") || !s.find("lon")) throw ConfigError(where + ": lat and lon are required");
            s.read("lat", lat);
            s.read("lon", lon);
            st.location = read_point(Json{{"lat", lat}, {"lon", lon}}, where);
            s.read("piles", st.pile_count);
            s.read("pile_power_kw", st.pile_power_kw);
            s.read("tariff", st.tariff_id);
            c.stations.push_back(std::move(st));
            s.finish();
        }
    }
    root.finish();
    return c;
}

std::vector<std::string> validate_config(const ScenarioConfig& c) {
    std::vector<std::string> out;
    auto check = [&](bool ok, std::string msg) {
        if (!ok) out.push_back(std::move(msg));
    };
    check(c.num_agents >= 1, "scenario.num_agents must be >= 1");
    check(c.horizon_days >= 1, "scenario.horizon_days must be >= 1");
    check(c.initial_soc_kwh >= 0.0 && c.initial_soc_kwh <= c.persona_template.battery_capacity_kwh,
          "scenario.initial_soc_kwh must be within [0, battery capacity]");
    check(c.search_radius_km > 0.0, "scenario.search_radius_km must be > 0");
    check(c.tow_soc_fraction > 0.0 && c.tow_soc_fraction <= 1.0, "scenario.tow_soc_fraction must be in (0,1]");
    check(c.retry.transport_retries >= 0 && c.retry.schema_repairs >= 0, "provider.retry counts must be >= 0");
    check(c.faults.malformed_rate >= 0.0 && c.faults.malformed_rate <= 1.0 && c.faults.transport_error_rate >= 0.0 &&
              c.faults.transport_error_rate <= 1.0,
          "provider.fault_injection rates must be in [0,1]");
    check(c.routing.detour_factor >= 1.0, "routing.detour_factor must be >= 1");
    check(c.routing.speed_kmh > 0.0, "routing.speed_kmh must be > 0");
    check(std::all_of(c.routing.congestion.begin(), c.routing.congestion.end(), [](double m) { return m > 0.0; }),
          "routing.congestion multipliers must be > 0");
    check(c.weights.distance >= 0.0 && c.weights.price >= 0.0 && c.weights.wait >= 0.0,
          "baseline_weights must be >= 0");
    check(c.area.lat_min < c.area.lat_max && c.area.lon_min < c.area.lon_max && c.area.lat_min >= -90.0 &&
              c.area.lat_max <= 90.0 && c.area.lon_min >= -180.0 && c.area.lon_max <= 180.0,
          "service_area must be a non-empty lat/lon box");

    const auto& pt = c.persona_template;
    check(!pt.occupations.empty() && !pt.vehicle_models.empty() && !pt.charge_power_choices.empty(),
          "persona_template choice lists must be non-empty");
    check(pt.age_min >= 16 && pt.age_min <= pt.age_max && pt.age_max <= 100, "persona_template ages must be in [16,100]");
    check(pt.battery_capacity_kwh > 0.0, "persona_template.battery_capacity_kwh must be > 0");
    check(pt.consumption_min > 0.0 && pt.consumption_min <= pt.consumption_max,
          "persona_template consumption range must be positive");
    check(std::all_of(pt.charge_power_choices.begin(), pt.charge_power_choices.end(), [](double p) { return p > 0.0; }),
          "persona_template.charge_power_choices must be > 0");
    check(pt.anxiety_min > 0.0 && pt.anxiety_min <= pt.anxiety_max && pt.anxiety_max < 1.0,
          "persona_template anxiety range must lie in (0,1)");
    check(pt.target_soc_min > 0.0 && pt.target_soc_min <= pt.target_soc_max && pt.target_soc_max <= 1.0,
          "persona_template target soc range must lie in (0,1]");

    const auto& pl = c.plan_template;
    check(pl.morning_start >= 0 && pl.morning_start < pl.morning_end && pl.morning_end <= pl.afternoon_start &&
              pl.afternoon_start < pl.afternoon_end && pl.afternoon_end <= kMinutesPerDay,
          "plan_template shift times must be ordered within the day");
    check(pl.gap_min >= 0 && pl.gap_min <= pl.gap_max, "plan_template gap range invalid");
    check(pl.leg_min_km > 0.0 && pl.leg_min_km <= pl.leg_max_km, "plan_template leg range invalid");
    check(pl.leisure_probability >= 0.0 && pl.leisure_probability <= 1.0,
          "plan_template.leisure_probability must be in [0,1]");
    check(pl.leisure_start_min <= pl.leisure_start_max && pl.leisure_stay_min <= pl.leisure_stay_max &&
              pl.leisure_stay_min >= 0,
          "plan_template leisure ranges invalid");

    check(!c.tariffs.empty(), "at least one tariff is required");
    for (const auto& [id, bands] : c.tariffs) {
        try {
            TariffSchedule{bands};
        } catch (const InvalidValue& e) {
            out.push_back("tariff " + id + ": " + e.what());
        }
    }
    check(!c.stations.empty(), "at least one station is required");
    std::set<std::string> ids;
    for (const auto& s : c.stations) {
        check(!s.station_id.empty(), "station id must be non-empty");
        check(ids.insert(s.station_id).second, "duplicate station id " + s.station_id);
        check(s.pile_count >= 1, "station " + s.station_id + ": piles must be >= 1");
        check(s.pile_power_kw > 0.0, "station " + s.station_id + ": pile_power_kw must be > 0");
        check(c.tariffs.contains(s.tariff_id), "station " + s.station_id + ": unknown tariff '" + s.tariff_id + "'");
    }
    return out;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    Json j;
    try {
        j = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    ScenarioConfig c = config_from_json(j, path.parent_path());
    if (auto errors = validate_config(c); !errors.empty()) {
        std::string msg = path.string() + ": invalid configuration";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return c;
}

Json config_to_json(const ScenarioConfig& c) {
    Json tariffs = Json::object();
    for (const auto& [id, bands] : c.tariffs) {
        Json arr = Json::array();
        for (const auto& b : bands)
            arr.push_back({{"start", b.start}, {"end", b.end}, {"price_per_kwh", b.price_per_kwh}});
        tariffs[id] = arr;
    }
    Json stations = Json::array();
    for (const auto& s : c.stations)
        stations.push_back({{"id", s.station_id},
                            {"name", s.name},
                            {"lat", s.location.latitude()},
                            {"lon", s.location.longitude()},
                            {"piles", s.pile_count},
                            {"pile_power_kw", s.pile_power_kw},
                            {"tariff", s.tariff_id}});
    const auto& pt = c.persona_template;
    const auto& pl = c.plan_template;
    return Json{
        {"scenario",
         {{"num_agents", c.num_agents},
          {"horizon_days", c.horizon_days},
          {"initial_soc_kwh", c.initial_soc_kwh},
          {"seed", c.seed},
          {"search_radius_km", c.search_radius_km},
          {"tow_soc_fraction", c.tow_soc_fraction}}},
        {"provider",
         {{"kind", c.provider == ProviderKind::mock ? "mock" : "live"},
          {"llm",
           {{"base_url", c.llm.base_url},
            {"model", c.llm.model},
            {"temperature", c.llm.temperature},
            {"timeout_seconds", c.llm.timeout_seconds},
            {"prompts_dir", c.llm.prompts_dir.string()}}},
          {"retry",
           {{"transport_retries", c.retry.transport_retries},
            {"schema_repairs", c.retry.schema_repairs},
            {"initial_backoff_ms", c.retry.initial_backoff.count()}}},
          {"fault_injection",
           {{"malformed_rate", c.faults.malformed_rate}, {"transport_error_rate", c.faults.transport_error_rate}}}}},
        {"routing",
         {{"detour_factor", c.routing.detour_factor}, {"speed_kmh", c.routing.speed_kmh}, {"congestion", c.routing.congestion}}},
        {"baseline_weights", {{"distance", c.weights.distance}, {"price", c.weights.price}, {"wait", c.weights.wait}}},
        {"service_area",
         {{"lat_min", c.area.lat_min}, {"lat_max", c.area.lat_max}, {"lon_min", c.area.lon_min}, {"lon_max", c.area.lon_max}}},
        {"persona_template",
         {{"occupations", pt.occupations},
          {"vehicle_models", pt.vehicle_models},
          {"age_min", pt.age_min},
          {"age_max", pt.age_max},
          {"battery_capacity_kwh", pt.battery_capacity_kwh},
          {"consumption_min", pt.consumption_min},
          {"consumption_max", pt.consumption_max},
          {"charge_power_choices", pt.charge_power_choices},
          {"anxiety_min", pt.anxiety_min},
          {"anxiety_max", pt.anxiety_max},
          {"target_soc_min", pt.target_soc_min},
          {"target_soc_max", pt.target_soc_max}}},
        {"plan_template",
         {{"morning_start", pl.morning_start},
          {"morning_end", pl.morning_end},
          {"afternoon_start", pl.afternoon_start},
          {"afternoon_end", pl.afternoon_end},
          {"gap_min", pl.gap_min},
          {"gap_max", pl.gap_max},
          {"leg_min_km", pl.leg_min_km},
          {"leg_max_km", pl.leg_max_km},
          {"leisure_probability", pl.leisure_probability},
          {"leisure_start_min", pl.leisure_start_min},
          {"leisure_start_max", pl.leisure_start_max},
          {"leisure_stay_min", pl.leisure_stay_min},
          {"leisure_stay_max", pl.leisure_stay_max}}},
        {"tariffs", tariffs},
        {"stations", stations},
    };
}

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.routing.congestion = {1.2, 1.2, 1.2, 1.2, 1.2, 1.2, 1.0, 0.7, 0.7, 0.8, 0.9, 0.9,
                            0.9, 0.9, 0.9, 0.9, 0.9, 0.7, 0.7, 0.8, 1.0, 1.0, 1.1, 1.1};
    auto tou = [](double valley, double flat, double peak) {
        return std::vector<TariffBand>{{0, 6 * 60, valley},         {6 * 60, 8 * 60, flat},   {8 * 60, 11 * 60, peak},
                                       {11 * 60, 18 * 60, flat},     {18 * 60, 21 * 60, peak}, {21 * 60, 22 * 60, flat},
                                       {22 * 60, kMinutesPerDay, valley}};
    };
    c.tariffs["shanghai_tou"] = tou(0.80, 1.30, 1.85);
    c.tariffs["shanghai_tou_fast"] = tou(1.00, 1.60, 2.20);
    c.stations = {
        {"SH01", "People's Square", GeoPoint(31.2304, 121.4737), 6, 60.0, "shanghai_tou"},
        {"SH02", "Lujiazui", GeoPoint(31.2397, 121.4998), 4, 120.0, "shanghai_tou_fast"},
        {"SH03", "Hongqiao Hub", GeoPoint(31.1979, 121.3270), 8, 120.0, "shanghai_tou_fast"},
        {"SH04", "Xujiahui", GeoPoint(31.1950, 121.4365), 6, 60.0, "shanghai_tou"},
        {"SH05", "Jing'an Temple", GeoPoint(31.2237, 121.4453), 10, 7.0, "shanghai_tou"},
        {"SH06", "Wujiaochang", GeoPoint(31.3005, 121.5138), 4, 60.0, "shanghai_tou"},
        {"SH07", "Zhangjiang", GeoPoint(31.2040, 121.5900), 6, 120.0, "shanghai_tou_fast"},
        {"SH08", "Xinzhuang", GeoPoint(31.1120, 121.3850), 4, 60.0, "shanghai_tou"},
        {"SH09", "Century Park", GeoPoint(31.2165, 121.5510), 8, 7.0, "shanghai_tou"},
        {"SH10", "Zhongshan Park", GeoPoint(31.2190, 121.4170), 4, 60.0, "shanghai_tou"},
        {"SH11", "Qiantan", GeoPoint(31.1860, 121.4920), 4, 120.0, "shanghai_tou_fast"},
        {"SH12", "Dachang", GeoPoint(31.3300, 121.4200), 4, 60.0, "shanghai_tou"},
    };
    return c;
}

EnvironmentState build_environment(const ScenarioConfig& c) {
    EnvironmentState env;
    env.routing = c.routing;
    for (const auto& [id, bands] : c.tariffs) env.tariffs.emplace(id, TariffSchedule(bands));
    for (const auto& s : c.stations)
        env.stations.emplace_back(s.station_id, s.location, s.pile_count, s.pile_power_kw, s.tariff_id);
    std::sort(env.stations.begin(), env.stations.end(),
              [](const ChargingStation& a, const ChargingStation& b) { return a.station_id < b.station_id; });
    return env;
}

} // namespace evsim
