#include "aa/analytics/stats.hpp"

#include "aa/core/error.hpp"

#include <fmt/format.h>

#include <map>
#include <set>

namespace aa {
namespace {

using std::chrono::floor;
using std::chrono::sys_days;
using std::chrono::days;

std::string day_string(sys_days day) { return format_iso8601(Timestamp{day}).substr(0, 10); }

nlohmann::json window_json(const StatsWindow& w) {
    return {{"from", w.from ? nlohmann::json(format_iso8601(*w.from)) : nlohmann::json(nullptr)},
            {"to", w.to ? nlohmann::json(format_iso8601(*w.to)) : nlohmann::json(nullptr)}};
}

}  // namespace

std::size_t gap_bucket(Seconds gap) {
    for (std::size_t i = 0; i + 1 < kGapBucketUpperMinutes.size(); ++i) {
        if (gap < Minutes{kGapBucketUpperMinutes[i]}) return i;
    }
    return gap <= Minutes{kGapBucketUpperMinutes.back()} ? kGapBucketUpperMinutes.size() - 1 : kGapBucketUpperMinutes.size();
}

std::string gap_bucket_label(std::size_t bucket) {
    if (bucket >= kGapBucketUpperMinutes.size()) return fmt::format(">{}m", kGapBucketUpperMinutes.back());
    const int lo = bucket == 0 ? 0 : kGapBucketUpperMinutes[bucket - 1];
    return fmt::format("{}-{}m", lo, kGapBucketUpperMinutes[bucket]);
}

DeveloperStats compute_stats(const Store& store, SessionCatalog& catalog, const NickName& nick, StatsWindow window) {
    if (window.from && window.to && *window.from > *window.to) {
        throw Error(ErrorCode::InvalidConfig, "window start is after its end");
    }
    if (!store.developer(nick)) throw Error(ErrorCode::UnknownDeveloper, "unknown developer " + nick.str());

    DeveloperStats stats;
    stats.nick = nick;
    stats.window = window;
    const auto sessions = catalog.window(nick, window.from, window.to);

    std::set<sys_days> days_seen;
    for (const auto& session : sessions) {
        ++stats.sessions_count;
        stats.total_session_seconds += session.duration.count();
        stats.shouts_count += session.shout_ids.size();
        days_seen.insert(floor<days>(session.started_at));

        Timestamp prev{};
        bool first = true;
        for (auto id : session.shout_ids) {
            const auto s = store.shout(id);
            if (!first) ++stats.intershout_gap_histogram[gap_bucket(s->client_ts - prev)];
            prev = s->client_ts;
            first = false;
        }

        switch (session.validation_state) {
            case ValidationState::valid: ++stats.validation.valid; break;
            case ValidationState::invalid: ++stats.validation.invalid; break;
            default: ++stats.validation.pending; break;
        }
    }
    stats.validation.validated = stats.validation.valid + stats.validation.invalid;
    stats.days_with_sessions = days_seen.size();
    if (stats.sessions_count > 0) {
        const auto n = static_cast<double>(stats.sessions_count);
        stats.mean_session_duration_s = static_cast<double>(stats.total_session_seconds) / n;
        stats.mean_shouts_per_session = static_cast<double>(stats.shouts_count) / n;
    }
    return stats;
}

TeamReport team_report(const Store& store, SessionCatalog& catalog, StatsWindow window, Seconds compliance_threshold) {
    TeamReport report;
    report.window = window;
    report.compliance_threshold = compliance_threshold;

    // (nick, day) -> durations of sessions started that day
    std::map<std::pair<NickName, sys_days>, std::vector<std::int64_t>> per_day;
    std::set<sys_days> all_days;
    const auto devs = store.developers();
    for (const auto& dev : devs) {
        report.developers.push_back(compute_stats(store, catalog, dev.nick, window));
        for (const auto& s : catalog.window(dev.nick, window.from, window.to)) {
            const auto day = floor<days>(s.started_at);
            per_day[{dev.nick, day}].push_back(s.duration.count());
            all_days.insert(day);
        }
    }
    for (const auto& d : report.developers) {
        report.sessions_count += d.sessions_count;
        report.shouts_count += d.shouts_count;
        report.total_session_seconds += d.total_session_seconds;
    }
    if (report.sessions_count > 0) {
        report.mean_session_duration_s =
            static_cast<double>(report.total_session_seconds) / static_cast<double>(report.sessions_count);
    }
    if (!report.developers.empty()) {
        report.mean_sessions_per_developer =
            static_cast<double>(report.sessions_count) / static_cast<double>(report.developers.size());
    }

    std::vector<sys_days> day_range;
    if (window.from && window.to) {
        for (auto d = floor<days>(*window.from); d <= floor<days>(*window.to); d += days{1}) day_range.push_back(d);
    } else if (!all_days.empty()) {
        for (auto d = *all_days.begin(); d <= *all_days.rbegin(); d += days{1}) day_range.push_back(d);
    }
    for (const auto& dev : devs) {
        for (auto day : day_range) {
            ComplianceDay cd;
            cd.nick = dev.nick;
            cd.day = day;
            if (auto it = per_day.find({dev.nick, day}); it != per_day.end()) {
                for (auto secs : it->second) {
                    cd.longest_session_s = std::max(cd.longest_session_s, secs);
                    cd.total_session_s += secs;
                }
            }
            cd.single_session_rule = Seconds{cd.longest_session_s} >= compliance_threshold;
            cd.cumulative_rule = Seconds{cd.total_session_s} >= compliance_threshold;
            report.days.push_back(cd);
        }
    }
    return report;
}

nlohmann::json to_json(const DeveloperStats& s) {
    nlohmann::json hist = nlohmann::json::object();
    for (std::size_t i = 0; i < kGapBucketCount; ++i) hist[gap_bucket_label(i)] = s.intershout_gap_histogram[i];
    return {{"nick", s.nick.str()},
            {"window", window_json(s.window)},
            {"sessions_count", s.sessions_count},
            {"total_session_seconds", s.total_session_seconds},
            {"shouts_count", s.shouts_count},
            {"mean_session_duration_s", s.mean_session_duration_s},
            {"mean_shouts_per_session", s.mean_shouts_per_session},
            {"intershout_gap_histogram", hist},
            {"days_with_sessions", s.days_with_sessions},
            {"validation",
             {{"validated", s.validation.validated},
              {"valid", s.validation.valid},
              {"invalid", s.validation.invalid},
              {"pending", s.validation.pending}}}};
}

nlohmann::json to_json(const TeamReport& r) {
    nlohmann::json devs = nlohmann::json::array();
    for (const auto& d : r.developers) devs.push_back(to_json(d));
    nlohmann::json days = nlohmann::json::array();
    for (const auto& d : r.days) {
        days.push_back({{"nick", d.nick.str()},
                        {"day", day_string(d.day)},
                        {"longest_session_s", d.longest_session_s},
                        {"total_session_s", d.total_session_s},
                        {"single_session_rule", d.single_session_rule},
                        {"cumulative_rule", d.cumulative_rule}});
    }
    return {{"window", window_json(r.window)},
            {"compliance_threshold_s", r.compliance_threshold.count()},
            {"developers", devs},
            {"team",
             {{"developers", r.developers.size()},
              {"sessions_count", r.sessions_count},
              {"shouts_count", r.shouts_count},
              {"total_session_seconds", r.total_session_seconds},
              {"mean_session_duration_s", r.mean_session_duration_s},
              {"mean_sessions_per_developer", r.mean_sessions_per_developer}}},
            {"compliance", days}};
}

std::string format_report(const TeamReport& r) {
    std::string out;
    out += fmt::format("{:<12} {:>8} {:>7} {:>10} {:>10} {:>5} {:>6} {:>8} {:>8}\n", "nick", "sessions", "shouts",
                       "total_h", "mean_min", "days", "valid", "invalid", "pending");
    for (const auto& d : r.developers) {
        out += fmt::format("{:<12} {:>8} {:>7} {:>10.2f} {:>10.1f} {:>5} {:>6} {:>8} {:>8}\n", d.nick.str(),
                           d.sessions_count, d.shouts_count, static_cast<double>(d.total_session_seconds) / 3600.0,
                           d.mean_session_duration_s / 60.0, d.days_with_sessions, d.validation.valid,
                           d.validation.invalid, d.validation.pending);
    }
    out += fmt::format("{:<12} {:>8} {:>7} {:>10.2f} {:>10.1f}\n", "TEAM", r.sessions_count, r.shouts_count,
                       static_cast<double>(r.total_session_seconds) / 3600.0, r.mean_session_duration_s / 60.0);
    if (!r.days.empty()) {
        out += fmt::format("\ncompliance (threshold {} min)\n", r.compliance_threshold.count() / 60);
        out += fmt::format("{:<12} {:<10} {:>11} {:>9} {:>7} {:>10}\n", "nick", "day", "longest_min", "total_min",
                           "single", "cumulative");
        for (const auto& d : r.days) {
            out += fmt::format("{:<12} {:<10} {:>11} {:>9} {:>7} {:>10}\n", d.nick.str(), day_string(d.day),
                               d.longest_session_s / 60, d.total_session_s / 60, d.single_session_rule ? "yes" : "NO",
                               d.cumulative_rule ? "yes" : "NO");
        }
    }
    return out;
}

}  // namespace aa
