#pragma once

#include "aa/core/model.hpp"
#include "aa/store/session_catalog.hpp"
#include "aa/store/store.hpp"

#include <json.hpp>

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace aa {

/// Closed interval over client_ts; an unset bound is open.
struct StatsWindow {
    std::optional<Timestamp> from;
    std::optional<Timestamp> to;
};

/// Inter-shout gap buckets in minutes: [0,5) [5,10) [10,15) [15,30) [30,60] and >60.
/// The last one only fills when the session gap is configured above an hour.
inline constexpr std::array<int, 5> kGapBucketUpperMinutes{5, 10, 15, 30, 60};
inline constexpr std::size_t kGapBucketCount = kGapBucketUpperMinutes.size() + 1;
std::size_t gap_bucket(Seconds gap);
std::string gap_bucket_label(std::size_t bucket);

struct ValidationCounts {
    std::size_t validated = 0;
    std::size_t valid = 0;
    std::size_t invalid = 0;
    std::size_t pending = 0;  // unassigned or awaiting a verdict
};

struct DeveloperStats {
    NickName nick;
    StatsWindow window;
    std::size_t sessions_count = 0;
    std::int64_t total_session_seconds = 0;
    std::size_t shouts_count = 0;
    double mean_session_duration_s = 0;
    double mean_shouts_per_session = 0;
    std::array<std::size_t, kGapBucketCount> intershout_gap_histogram{};
    std::size_t days_with_sessions = 0;
    ValidationCounts validation;
};

/// Throws Error(UnknownDeveloper), or Error(InvalidConfig) when from > to.
DeveloperStats compute_stats(const Store& store, SessionCatalog& catalog, const NickName& nick, StatsWindow window);

struct ComplianceDay {
    NickName nick;
    std::chrono::sys_days day;
    std::int64_t longest_session_s = 0;
    std::int64_t total_session_s = 0;
    /// At least one single session reached the threshold.
    bool single_session_rule = false;
    /// Sessions of the day add up to the threshold.
    bool cumulative_rule = false;
};

struct TeamReport {
    StatsWindow window;
    Seconds compliance_threshold{7200};
    std::vector<DeveloperStats> developers;
    std::size_t sessions_count = 0;
    std::size_t shouts_count = 0;
    std::int64_t total_session_seconds = 0;
    double mean_session_duration_s = 0;
    double mean_sessions_per_developer = 0;
    std::vector<ComplianceDay> days;
};

/// Per-developer stats for every registered developer plus daily compliance
/// flags under both readings of the "one 2h session per day" rule. Days are
/// UTC calendar days of the window; an open window spans the days that have sessions.
TeamReport team_report(const Store& store, SessionCatalog& catalog, StatsWindow window,
                       Seconds compliance_threshold = std::chrono::hours(2));

nlohmann::json to_json(const DeveloperStats& stats);
nlohmann::json to_json(const TeamReport& report);
/// Plain-text tables for the report command.
std::string format_report(const TeamReport& report);

}  // namespace aa
