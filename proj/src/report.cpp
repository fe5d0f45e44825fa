#include "evsim/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "evsim/errors.hpp"

namespace evsim {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("missing run artifact: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

template <typename Parse>
auto read_lines(const std::filesystem::path& path, Parse parse) {
    std::vector<decltype(parse(Json{}, std::string{}))> out;
    std::istringstream lines(read_file(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        ++n;
        if (line.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(n);
        try {
            out.push_back(parse(Json::parse(line), where));
        } catch (const Json::exception& e) {
            throw ArtifactError(where + ": " + e.what());
        } catch (const SchemaError& e) {
            throw ArtifactError(e.what());
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + path.string());
    out << text;
}

std::string escape_html(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string hhmm(Minutes t) {
    const Minutes tod = t % kMinutesPerDay;
    return "d" + std::to_string(t / kMinutesPerDay) + " " + format_time_of_day(tod);
}

Json lonlat(const GeoPoint& p) { return Json::array({p.longitude(), p.latitude()}); }

} // namespace

std::string format_number(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

RunData load_run(const std::filesystem::path& run_dir) {
    if (!std::filesystem::is_directory(run_dir)) throw ArtifactError("no run directory at " + run_dir.string());
    RunData run;
    try {
        run.config = config_from_json(Json::parse(read_file(run_dir / "config.json")), run_dir);
    } catch (const Json::exception& e) {
        throw ArtifactError("config.json: " + std::string(e.what()));
    } catch (const ConfigError& e) {
        throw ArtifactError("config.json: " + std::string(e.what()));
    }
    try {
        for (const auto& p : Json::parse(read_file(run_dir / "personas.json"))) run.personas.push_back(persona_from_json(p));
    } catch (const Json::exception& e) {
        throw ArtifactError("personas.json: " + std::string(e.what()));
    } catch (const SchemaError& e) {
        throw ArtifactError("personas.json: " + std::string(e.what()));
    }
    run.behavior = read_lines(run_dir / "behavior.log",
                              [](const Json& j, const std::string& where) { return record_from_json(j, where); });
    run.reflections = read_lines(run_dir / "reflections.log", [](const Json& j, const std::string& where) {
        return reflection_from_json(j, where);
    });
    return run;
}

RunSummary summarize(const std::vector<BehaviorRecord>& behavior, const std::vector<ReflectionReport>& reflections,
                     int horizon_days) {
    std::map<std::string, AgentSummary> agents;
    std::array<double, kHoursPerWeek> energy_by_hour{};
    for (const auto& r : behavior) {
        AgentSummary& a = agents[r.agent_id];
        a.agent_id = r.agent_id;
        switch (r.action) {
        case BehaviorAction::travel: a.total_km += r.distance_km; break;
        case BehaviorAction::stop_charging: {
            a.total_kwh_charged += r.quintuple.amount_kwh;
            a.total_cost += r.cost;
            ++a.charge_count;
            const Minutes start = r.quintuple.time_minutes, end = r.timestamp;
            if (end <= start) {
                energy_by_hour[static_cast<std::size_t>((start / 60) % kHoursPerWeek)] += r.quintuple.amount_kwh;
                break;
            }
            const double per_minute = r.quintuple.amount_kwh / static_cast<double>(end - start);
            for (Minutes t = start; t < end;) {
                const Minutes next = std::min(end, (t / 60 + 1) * 60);
                energy_by_hour[static_cast<std::size_t>((t / 60) % kHoursPerWeek)] +=
                    per_minute * static_cast<double>(next - t);
                t = next;
            }
            break;
        }
        case BehaviorAction::idle:
            if (r.object_id == "stranded") ++a.strandings;
            break;
        default: break;
        }
        if (r.fallback && (r.action == BehaviorAction::start_charging || r.action == BehaviorAction::skip_charging))
            ++a.fallback_decisions;
    }

    std::map<std::string, std::pair<double, int>> satisfaction;
    for (const auto& r : reflections) {
        auto& [sum, n] = satisfaction[r.agent_id];
        sum += r.satisfaction.score;
        ++n;
        agents[r.agent_id].agent_id = r.agent_id;
    }

    RunSummary s;
    s.fleet.agent_id = "fleet";
    double mean_sum = 0.0;
    for (auto& [id, a] : agents) {
        if (const auto it = satisfaction.find(id); it != satisfaction.end())
            a.mean_satisfaction = it->second.first / it->second.second;
        s.fleet.total_km += a.total_km;
        s.fleet.total_kwh_charged += a.total_kwh_charged;
        s.fleet.total_cost += a.total_cost;
        s.fleet.charge_count += a.charge_count;
        s.fleet.strandings += a.strandings;
        s.fleet.fallback_decisions += a.fallback_decisions;
        mean_sum += a.mean_satisfaction;
        s.agents.push_back(a);
    }
    if (!s.agents.empty()) s.fleet.mean_satisfaction = mean_sum / static_cast<double>(s.agents.size());

    // Average over the number of times each hour of week occurs.
    const int hours = std::max(0, horizon_days) * 24;
    for (int h = 0; h < kHoursPerWeek; ++h) {
        const int occurrences = hours / kHoursPerWeek + (h < hours % kHoursPerWeek ? 1 : 0);
        s.load_kw[static_cast<std::size_t>(h)] = occurrences ? energy_by_hour[static_cast<std::size_t>(h)] / occurrences : 0.0;
    }
    return s;
}

namespace {

Json agent_json(const AgentSummary& a) {
    return Json{{"agent_id", a.agent_id},
                {"total_km", a.total_km},
                {"total_kwh_charged", a.total_kwh_charged},
                {"total_cost", a.total_cost},
                {"charge_count", a.charge_count},
                {"mean_satisfaction", a.mean_satisfaction},
                {"strandings", a.strandings},
                {"fallback_decisions", a.fallback_decisions}};
}

std::string agent_csv_row(const AgentSummary& a) {
    return a.agent_id + "," + format_number(a.total_km) + "," + format_number(a.total_kwh_charged) + "," +
           format_number(a.total_cost) + "," + std::to_string(a.charge_count) + "," +
           format_number(a.mean_satisfaction) + "," + std::to_string(a.strandings) + "," +
           std::to_string(a.fallback_decisions) + "\n";
}

} // namespace

Json summary_to_json(const RunSummary& s) {
    Json agents = Json::array();
    for (const auto& a : s.agents) agents.push_back(agent_json(a));
    return Json{{"agents", agents}, {"fleet", agent_json(s.fleet)}, {"load_kw_by_hour_of_week", s.load_kw}};
}

std::string summary_csv(const RunSummary& s) {
    std::string out =
        "agent_id,total_km,total_kwh_charged,total_cost,charge_count,mean_satisfaction,strandings,fallback_decisions\n";
    for (const auto& a : s.agents) out += agent_csv_row(a);
    out += agent_csv_row(s.fleet);
    return out;
}

std::string load_csv(const RunSummary& s) {
    std::string out = "hour_of_week,day,hour,load_kw\n";
    for (int h = 0; h < kHoursPerWeek; ++h)
        out += std::to_string(h) + "," + std::to_string(h / 24) + "," + std::to_string(h % 24) + "," +
               format_number(s.load_kw[static_cast<std::size_t>(h)]) + "\n";
    return out;
}

Json build_geojson(const RunData& run) {
    std::map<std::string, const StationSpec*> stations;
    for (const auto& s : run.config.stations) stations[s.station_id] = &s;

    Json features = Json::array();
    for (const auto& s : run.config.stations) {
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", lonlat(s.location)}}},
                            {"properties",
                             {{"kind", "station"},
                              {"station_id", s.station_id},
                              {"name", s.name},
                              {"piles", s.pile_count},
                              {"pile_power_kw", s.pile_power_kw},
                              {"tariff", s.tariff_id}}}});
    }

    std::map<std::string, std::vector<const BehaviorRecord*>> by_agent;
    for (const auto& r : run.behavior) by_agent[r.agent_id].push_back(&r);

    for (const auto& [agent, records] : by_agent) {
        Json coords = Json::array();
        const GeoPoint* last = nullptr;
        for (const auto* r : records) {
            if (last && *last == r->location) continue;
            coords.push_back(lonlat(r->location));
            last = &r->location;
        }
        if (coords.size() == 1) coords.push_back(coords.front());
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                            {"properties", {{"kind", "trajectory"}, {"agent_id", agent}}}});
        const BehaviorRecord& first = *records.front();
        const BehaviorRecord& final = *records.back();
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", lonlat(first.location)}}},
                            {"properties", {{"kind", "start"}, {"agent_id", agent}, {"time", first.timestamp}}}});
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", lonlat(final.location)}}},
                            {"properties", {{"kind", "end"}, {"agent_id", agent}, {"time", final.timestamp}}}});

        for (const auto* r : records) {
            if (r->action != BehaviorAction::start_charging || !r->quintuple.station_id) continue;
            const auto it = stations.find(*r->quintuple.station_id);
            const GeoPoint at = it != stations.end() ? it->second->location : r->location;
            features.push_back({{"type", "Feature"},
                                {"geometry", {{"type", "Point"}, {"coordinates", lonlat(at)}}},
                                {"properties",
                                 {{"kind", "charge"},
                                  {"agent_id", agent},
                                  {"time", r->timestamp},
                                  {"station_id", *r->quintuple.station_id},
                                  {"amount_kwh", r->quintuple.amount_kwh},
                                  {"scenario", to_string(r->quintuple.scenario)},
                                  {"reason", r->reason},
                                  {"fallback", r->fallback}}}});
        }
    }
    return Json{{"type", "FeatureCollection"}, {"features", features}};
}

std::string build_html(const RunData& run) {
    const Json geo = build_geojson(run);

    // Bounding box over everything drawn.
    double lat_lo = 90, lat_hi = -90, lon_lo = 180, lon_hi = -180;
    auto grow = [&](const GeoPoint& p) {
        lat_lo = std::min(lat_lo, p.latitude());
        lat_hi = std::max(lat_hi, p.latitude());
        lon_lo = std::min(lon_lo, p.longitude());
        lon_hi = std::max(lon_hi, p.longitude());
    };
    for (const auto& s : run.config.stations) grow(s.location);
    for (const auto& r : run.behavior) grow(r.location);
    if (lat_hi <= lat_lo) lat_hi = lat_lo + 0.01;
    if (lon_hi <= lon_lo) lon_hi = lon_lo + 0.01;

    constexpr double W = 900, H = 640, pad = 20;
    const double kx = std::cos((lat_lo + lat_hi) / 2 * M_PI / 180.0);
    const double scale = std::min((W - 2 * pad) / ((lon_hi - lon_lo) * kx), (H - 2 * pad) / (lat_hi - lat_lo));
    auto px = [&](const GeoPoint& p) {
        return std::pair{pad + (p.longitude() - lon_lo) * kx * scale, H - pad - (p.latitude() - lat_lo) * scale};
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        return std::string(buf);
    };

    std::map<std::string, std::vector<const BehaviorRecord*>> by_agent;
    for (const auto& r : run.behavior) by_agent[r.agent_id].push_back(&r);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
        << ' ' << H << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#f7f7f2\"/>\n";
    int hue = 0;
    for (const auto& [agent, records] : by_agent) {
        svg << "<polyline class=\"trajectory\" fill=\"none\" stroke-width=\"1.2\" stroke-opacity=\"0.7\" stroke=\"hsl("
            << hue << ",65%,42%)\" points=\"";
        for (const auto* r : records) {
            const auto [x, y] = px(r->location);
            svg << fmt(x) << ',' << fmt(y) << ' ';
        }
        svg << "\"><title>" << escape_html(agent) << "</title></polyline>\n";
        hue = (hue + 137) % 360;
    }
    for (const auto& s : run.config.stations) {
        const auto [x, y] = px(s.location);
        svg << "<rect class=\"station\" x=\"" << fmt(x - 5) << "\" y=\"" << fmt(y - 5)
            << "\" width=\"10\" height=\"10\" fill=\"#1f3a93\"><title>" << escape_html(s.station_id + " " + s.name)
            << " (" << s.pile_count << " piles)</title></rect>\n";
    }
    std::map<std::string, const StationSpec*> stations;
    for (const auto& s : run.config.stations) stations[s.station_id] = &s;
    for (const auto& r : run.behavior) {
        if (r.action != BehaviorAction::start_charging || !r.quintuple.station_id) continue;
        const auto it = stations.find(*r.quintuple.station_id);
        const auto [x, y] = px(it != stations.end() ? it->second->location : r.location);
        svg << "<circle class=\"charge\" cx=\"" << fmt(x) << "\" cy=\"" << fmt(y)
            << "\" r=\"3\" fill=\"#d35400\" fill-opacity=\"0.6\"><title>" << escape_html(r.agent_id) << ' '
            << hhmm(r.timestamp) << ": " << escape_html(r.reason) << "</title></circle>\n";
    }
    svg << "</svg>\n";

    std::ostringstream table;
    table << "<table>\n<thead><tr><th>agent</th><th>time</th><th>decision</th><th>station</th><th>kWh</th>"
             "<th>scenario</th><th>reason</th></tr></thead>\n<tbody>\n";
    for (const auto& r : run.behavior) {
        if (r.action != BehaviorAction::start_charging && r.action != BehaviorAction::skip_charging) continue;
        char kwh[32];
        std::snprintf(kwh, sizeof kwh, "%.1f", r.quintuple.amount_kwh);
        table << "<tr><td>" << escape_html(r.agent_id) << "</td><td>" << hhmm(r.timestamp) << "</td><td>"
              << (r.quintuple.decision ? "charge" : "skip") << (r.fallback ? " (fallback)" : "") << "</td><td>"
              << escape_html(r.quintuple.station_id.value_or("")) << "</td><td>" << kwh << "</td><td>"
              << to_string(r.quintuple.scenario) << "</td><td>" << escape_html(r.reason) << "</td></tr>\n";
    }
    table << "</tbody>\n</table>\n";

    // Keep the embedded JSON from closing the script element early.
    std::string embedded = geo.dump();
    for (std::size_t pos = 0; (pos = embedded.find("</", pos)) != std::string::npos; pos += 3)
        embedded.replace(pos, 2, "<\\/");

    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>EV charging run</title>\n"
            "<style>body{font-family:sans-serif;margin:1.5em}table{border-collapse:collapse;font-size:12px}"
            "td,th{border:1px solid #ccc;padding:2px 6px;text-align:left}</style>\n</head>\n<body>\n"
         << "<h1>EV charging run</h1>\n<p>" << by_agent.size() << " agents, " << run.config.horizon_days
         << " days, seed " << run.config.seed << ".</p>\n"
         << svg.str() << "<h2>Charging decisions</h2>\n"
         << table.str() << "<script type=\"application/geo+json\" id=\"run-geojson\">" << embedded
         << "</script>\n</body>\n</html>\n";
    return html.str();
}

std::vector<std::filesystem::path> export_run(const std::filesystem::path& run_dir, ExportFormat format) {
    const RunData run = load_run(run_dir);
    std::vector<std::filesystem::path> written;
    switch (format) {
    case ExportFormat::geojson:
        written.push_back(run_dir / "map.geojson");
        write_file(written.back(), build_geojson(run).dump(1) + "\n");
        break;
    case ExportFormat::html:
        written.push_back(run_dir / "map.html");
        write_file(written.back(), build_html(run));
        break;
    case ExportFormat::csv: {
        const RunSummary s = summarize(run.behavior, run.reflections, run.config.horizon_days);
        written.push_back(run_dir / "summary.csv");
        write_file(written.back(), summary_csv(s));
        written.push_back(run_dir / "load.csv");
        write_file(written.back(), load_csv(s));
        break;
    }
    }
    return written;
}

std::filesystem::path write_summary(const std::filesystem::path& run_dir) {
    const RunData run = load_run(run_dir);
    const RunSummary s = summarize(run.behavior, run.reflections, run.config.horizon_days);
    const auto path = run_dir / "summary.json";
    write_file(path, summary_to_json(s).dump(2) + "\n");
    return path;
}

} // namespace evsim
