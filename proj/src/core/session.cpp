#include "aa/core/session.hpp"

#include "aa/core/error.hpp"
#include "aa/util/crypto.hpp"

#include <algorithm>

namespace aa {
namespace {

// Decodes one UTF-8 sequence at `pos`; returns false on malformed input.
bool decode_utf8(std::string_view s, std::size_t& pos, char32_t& cp) {
    const auto lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = 0;
    if (lead < 0x80) {
        cp = lead;
        len = 1;
    } else if ((lead & 0xE0) == 0xC0) {
        cp = lead & 0x1F;
        len = 2;
    } else if ((lead & 0xF0) == 0xE0) {
        cp = lead & 0x0F;
        len = 3;
    } else if ((lead & 0xF8) == 0xF0) {
        cp = lead & 0x07;
        len = 4;
    } else {
        return false;
    }
    if (pos + len > s.size()) return false;
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) return false;
        cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMinForLen[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLen[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    pos += len;
    return true;
}

bool is_ascii_space(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f';
}

bool is_control(char32_t cp) { return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F); }

bool breaks_before(const Shout& prev, const Shout& cur, Seconds gap) {
    return cur.client_ts - prev.client_ts > gap || cur.text == kSessionStartMarker || prev.text == kSessionStopMarker;
}

}  // namespace

std::string normalize_shout_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t chars = 0;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t start = pos;
        char32_t cp = 0;
        if (!decode_utf8(raw, pos, cp)) throw Error(ErrorCode::InvalidText, "shout text is not valid UTF-8");
        if (is_ascii_space(cp)) {
            pending_space = true;
            continue;
        }
        if (is_control(cp)) continue;
        if (pending_space && !out.empty()) {
            out.push_back(' ');
            ++chars;
        }
        pending_space = false;
        out.append(raw.substr(start, pos - start));
        ++chars;
    }
    if (out.empty()) throw Error(ErrorCode::EmptyShout, "shout text is empty");
    if (chars > kMaxShoutChars) {
        throw Error(ErrorCode::TooLong, "shout text has " + std::to_string(chars) + " characters (max " +
                                            std::to_string(kMaxShoutChars) + ")");
    }
    return out;
}

std::string session_id_for(const NickName& author, ShoutId first) {
    return "s" + sha256_hex(author.str() + ":" + std::to_string(first)).substr(0, 16);
}

bool shout_order_less(const Shout& a, const Shout& b) {
    if (a.client_ts != b.client_ts) return a.client_ts < b.client_ts;
    if (a.server_ts != b.server_ts) return a.server_ts < b.server_ts;
    return a.id < b.id;
}

std::vector<Session> group_sessions(std::span<const Shout> shouts, const TimeslotConfig& cfg) {
    std::vector<Session> sessions;
    if (shouts.empty()) return sessions;

    const NickName& author = shouts.front().author;
    std::vector<const Shout*> ordered;
    ordered.reserve(shouts.size());
    for (const Shout& s : shouts) {
        if (s.author != author) throw Error(ErrorCode::MixedAuthors, "group_sessions requires a single author");
        ordered.push_back(&s);
    }
    std::sort(ordered.begin(), ordered.end(), [](const Shout* a, const Shout* b) { return shout_order_less(*a, *b); });

    const Seconds gap = cfg.session_gap();
    auto close = [&](Session& s, const Shout& last) {
        s.ended_at = last.client_ts;
        s.duration = s.ended_at - s.started_at;
        s.stopped_explicitly = last.text == kSessionStopMarker;
        sessions.push_back(std::move(s));
    };

    Session current;
    const Shout* prev = nullptr;
    for (const Shout* s : ordered) {
        if (prev != nullptr && breaks_before(*prev, *s, gap)) close(current, *prev);
        if (prev == nullptr || breaks_before(*prev, *s, gap)) {
            current = Session{};
            current.author = author;
            current.session_id = session_id_for(author, s->id);
            current.started_at = s->client_ts;
        }
        current.shout_ids.push_back(s->id);
        prev = s;
    }
    close(current, *prev);
    return sessions;
}

Timestamp next_alert(Timestamp last_activity, const TimeslotConfig& cfg, Timestamp now) {
    const Seconds slot = cfg.timeslot();
    const Timestamp first = last_activity + slot;
    if (first > now) return first;
    const auto elapsed_slots = (now - last_activity) / slot;
    return last_activity + (elapsed_slots + 1) * slot;
}

SessionSummary summarize_session(const Session& session) {
    SessionSummary summary;
    summary.shout_count = session.shout_ids.size();
    summary.duration = session.duration;
    summary.has_screencast = session.screencast_url.has_value();
    if (summary.shout_count >= 2) {
        summary.mean_intershout_gap_s =
            static_cast<double>(session.duration.count()) / static_cast<double>(summary.shout_count - 1);
    }
    return summary;
}

}  // namespace aa
