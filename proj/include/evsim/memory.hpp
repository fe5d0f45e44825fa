#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "evsim/domain.hpp"

namespace evsim {

enum class MemoryHorizon { short_term, long_term };

/// Per-day charging totals derived from long-term memory.
struct DayAggregate {
    std::int64_t day_index = 0;
    int charge_count = 0;
    double energy_kwh = 0.0;
    double mean_price_per_kwh = 0.0; // cost-weighted, 0 when nothing charged
    bool operator==(const DayAggregate&) const = default;
};

/// Append-only behavior and reflection memory of one agent. When attached
/// to a log file every append is written and flushed before returning, and
/// replaying that file rebuilds the same store.
class MemoryStore {
public:
    static constexpr int kShortWindowDays = 3;
    static constexpr int kLongWindowDays = 7;

    MemoryStore() = default;

    /// Opens (creating if needed) the log at `path`, replaying any existing
    /// content, and attaches it for subsequent appends.
    static MemoryStore open(const std::filesystem::path& path);

    /// Reads a log without attaching to it.
    static MemoryStore replay(const std::filesystem::path& path);

    /// Throws OutOfOrderError if record.timestamp precedes the last record.
    void append(const BehaviorRecord& record);
    void append_reflection(const ReflectionReport& report);

    /// Records with timestamp in (now - window, now], in insertion order.
    std::vector<BehaviorRecord> retrieve(SimClock now, MemoryHorizon horizon) const;

    std::vector<DayAggregate> long_term_aggregates(SimClock now) const;

    const std::vector<BehaviorRecord>& records() const { return records_; }
    const std::vector<ReflectionReport>& reflections() const { return reflections_; }

    bool operator==(const MemoryStore& other) const {
        return records_ == other.records_ && reflections_ == other.reflections_;
    }

private:
    struct FileCloser {
        void operator()(std::FILE* f) const { std::fclose(f); }
    };

    void load(const std::filesystem::path& path);
    void write_line(const std::string& line);

    std::vector<BehaviorRecord> records_;
    std::vector<ReflectionReport> reflections_;
    std::unique_ptr<std::FILE, FileCloser> log_;
};

} // namespace evsim
