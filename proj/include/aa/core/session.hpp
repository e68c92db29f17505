#pragma once

#include "aa/core/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace aa {

/// Strips and collapses ASCII whitespace, drops control characters.
/// Throws Error(EmptyShout | TooLong | InvalidText); never truncates.
std::string normalize_shout_text(std::string_view raw);

/// Deterministic id of the session whose first shout is `first`.
std::string session_id_for(const NickName& author, ShoutId first);

/// Canonical order inside a session: client_ts, then server_ts, then id.
bool shout_order_less(const Shout& a, const Shout& b);

/// Groups one author's shouts into sessions. A session breaks where the gap to
/// the previous shout exceeds cfg.session_gap(), before a "session: start"
/// marker, and after a "session: stop" marker. Throws Error(MixedAuthors).
std::vector<Session> group_sessions(std::span<const Shout> shouts, const TimeslotConfig& cfg);

/// Next reminder boundary strictly after `now`, on the grid last_activity + k*timeslot.
Timestamp next_alert(Timestamp last_activity, const TimeslotConfig& cfg, Timestamp now);

SessionSummary summarize_session(const Session& session);

inline bool is_session_marker(std::string_view text) {
    return text == kSessionStartMarker || text == kSessionStopMarker;
}

}  // namespace aa
