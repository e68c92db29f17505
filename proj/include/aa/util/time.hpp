#pragma once

#include <atomic>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace aa {

/// UTC instant with one-second resolution. All persisted and wire timestamps use this.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;
using Minutes = std::chrono::minutes;

/// Parses ISO-8601 UTC ("2013-05-27T02:48:00Z"). A numeric offset ("+02:00") is
/// accepted and converted; fractional seconds are truncated.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp ts);

/// "DD/MM/YYYY HH:MM" in UTC, the layout of the public feed.
std::string format_feed_display(Timestamp ts);

inline Timestamp from_unix(std::int64_t secs) { return Timestamp{Seconds{secs}}; }
inline std::int64_t to_unix(Timestamp ts) { return ts.time_since_epoch().count(); }

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override {
        return std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
    }
};

/// Test clock; safe to advance from one thread while others read it.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start) : now_(to_unix(start)) {}
    Timestamp now() const override { return from_unix(now_.load()); }
    void set(Timestamp ts) { now_.store(to_unix(ts)); }
    void advance(Seconds by) { now_.fetch_add(by.count()); }

private:
    std::atomic<std::int64_t> now_;
};

}  // namespace aa
