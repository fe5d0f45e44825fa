#include "evsim/memory.hpp"

#include <fstream>
#include <iterator>
#include <map>

#include "evsim/errors.hpp"
#include "evsim/serialize.hpp"

namespace evsim {

MemoryStore MemoryStore::replay(const std::filesystem::path& path) {
    MemoryStore store;
    store.load(path);
    return store;
}

MemoryStore MemoryStore::open(const std::filesystem::path& path) {
    MemoryStore store;
    if (std::filesystem::exists(path)) {
        store.load(path);
        // Cut a torn trailing line so new appends start on a fresh line.
        std::ifstream in(path, std::ios::binary);
        const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!content.empty() && content.back() != '\n') {
            const auto keep = content.rfind('\n');
            std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    store.log_.reset(std::fopen(path.c_str(), "ab"));
    if (!store.log_) throw ArtifactError("cannot open memory log " + path.string());
    return store;
}

void MemoryStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot read memory log " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error&) {
            // A torn final line is what a crash mid-write leaves behind.
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw SchemaError(where + ": unparseable line");
        }
        StrictObject o(j, where);
        const std::string kind = o.string("kind");
        if (kind == "record") {
            auto r = record_from_json(o.at("data"), where + ".data");
            if (!records_.empty() && r.timestamp < records_.back().timestamp)
                throw OutOfOrderError(where + ": timestamp regression");
            records_.push_back(std::move(r));
        } else if (kind == "reflection") {
            reflections_.push_back(reflection_from_json(o.at("data"), where + ".data"));
        } else {
            throw SchemaError(where + ": unknown kind '" + kind + "'");
        }
        o.finish();
    }
}

void MemoryStore::write_line(const std::string& line) {
    if (!log_) return;
    if (std::fputs(line.c_str(), log_.get()) < 0 || std::fputc('\n', log_.get()) == EOF ||
        std::fflush(log_.get()) != 0)
        throw ArtifactError("memory log write failed");
}

void MemoryStore::append(const BehaviorRecord& record) {
    if (!records_.empty() && record.timestamp < records_.back().timestamp)
        throw OutOfOrderError("record at t=" + std::to_string(record.timestamp) + " after t=" +
                              std::to_string(records_.back().timestamp));
    write_line(canonical(Json{{"kind", "record"}, {"data", record}}));
    records_.push_back(record);
}

void MemoryStore::append_reflection(const ReflectionReport& report) {
    if (!reflections_.empty() && report.timestamp < reflections_.back().timestamp)
        throw OutOfOrderError("reflection at t=" + std::to_string(report.timestamp) + " after t=" +
                              std::to_string(reflections_.back().timestamp));
    write_line(canonical(Json{{"kind", "reflection"}, {"data", report}}));
    reflections_.push_back(report);
}

std::vector<BehaviorRecord> MemoryStore::retrieve(SimClock now, MemoryHorizon horizon) const {
    const Minutes window = (horizon == MemoryHorizon::short_term ? kShortWindowDays : kLongWindowDays) * kMinutesPerDay;
    const Minutes t = now.sim_time();
    std::vector<BehaviorRecord> out;
    for (const auto& r : records_)
        if (r.timestamp > t - window && r.timestamp <= t) out.push_back(r);
    return out;
}

std::vector<DayAggregate> MemoryStore::long_term_aggregates(SimClock now) const {
    std::map<std::int64_t, std::pair<DayAggregate, double>> days;
    for (const auto& r : retrieve(now, MemoryHorizon::long_term)) {
        auto& [agg, cost] = days[r.timestamp / kMinutesPerDay];
        agg.day_index = r.timestamp / kMinutesPerDay;
        if (r.action != BehaviorAction::stop_charging) continue;
        ++agg.charge_count;
        agg.energy_kwh += r.quintuple.amount_kwh;
        cost += r.cost;
    }
    std::vector<DayAggregate> out;
    for (auto& [day, entry] : days) {
        auto& [agg, cost] = entry;
        agg.mean_price_per_kwh = agg.energy_kwh > 0.0 ? cost / agg.energy_kwh : 0.0;
        out.push_back(agg);
    }
    return out;
}

} // namespace evsim
