#include "aa/client/app.hpp"

#include "aa/core/error.hpp"
#include "aa/core/session.hpp"

#include <json.hpp>

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <iostream>

namespace aa {

std::optional<std::string> StdinWaiter::wait_until(Timestamp deadline) {
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        const auto now = clock_.now();
        if (now >= deadline) return std::nullopt;
        const auto wait_ms = std::min<std::int64_t>((deadline - now).count() * 1000, 1000);
        if (eof_) {
            ::usleep(static_cast<useconds_t>(wait_ms * 1000));
            return std::nullopt;
        }
        pollfd fd{STDIN_FILENO, POLLIN, 0};
        const int ready = ::poll(&fd, 1, static_cast<int>(wait_ms));
        if (ready <= 0) return std::nullopt;
        char chunk[512];
        const auto n = ::read(STDIN_FILENO, chunk, sizeof chunk);
        if (n <= 0) {
            eof_ = true;
            continue;
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

ClientApp::ClientApp(ClientEnv env) : env_(std::move(env)) {}

bool ClientApp::configured() {
    if (env_.config.complete()) return true;
    *env_.err << "aa: not configured; run `aa init --server URL --token TOKEN` or set AA_SERVER and AA_TOKEN\n";
    return false;
}

EntryState ClientApp::emit(ClientQueue& queue, const std::string& normalized, std::string* why_not_sent) {
    const auto seq = queue.enqueue(normalized, env_.clock->now()).seq;
    auto transport = env_.make_transport(env_.config.server);
    const auto summary = push_queue(queue, *transport, [&](const QueueEntry&) { return env_.config.token; });
    const auto& entry = queue.entries()[seq - 1];
    if (why_not_sent != nullptr) {
        if (entry.state == EntryState::rejected) {
            *why_not_sent = entry.error.value_or("rejected");
        } else if (!summary.stopped_because.empty()) {
            *why_not_sent = summary.stopped_because;
        }
    }
    return entry.state;
}

int ClientApp::shout(const std::string& text) {
    if (!configured()) return exit_code::missing_config;
    std::string normalized;
    try {
        normalized = normalize_shout_text(text);
    } catch (const Error& e) {
        *env_.err << "aa: " << e.what() << '\n';
        return e.code() == ErrorCode::EmptyShout ? exit_code::empty_text : exit_code::failure;
    }
    ClientQueue queue(queue_path(), *env_.clock);
    std::string why;
    switch (emit(queue, normalized, &why)) {
        case EntryState::pushed: *env_.out << "sent\n"; return exit_code::ok;
        case EntryState::queued: *env_.out << "queued (offline)\n"; return exit_code::ok;
        case EntryState::rejected: *env_.err << "aa: server rejected the shout: " << why << '\n'; return exit_code::failure;
    }
    return exit_code::failure;
}

int ClientApp::push() {
    if (!configured()) return exit_code::missing_config;
    ClientQueue queue(queue_path(), *env_.clock);
    auto transport = env_.make_transport(env_.config.server);
    const auto summary = push_queue(queue, *transport, [&](const QueueEntry&) { return env_.config.token; });
    *env_.out << nlohmann::json{{"sent", summary.sent}, {"remaining", summary.remaining}}.dump() << '\n';
    if (summary.rejected > 0) *env_.err << "aa: " << summary.rejected << " shout(s) rejected by the server (see `aa log`)\n";
    if (!summary.stopped_because.empty()) *env_.err << "aa: push stopped: " << summary.stopped_because << '\n';
    return summary.remaining == 0 ? exit_code::ok : exit_code::failure;
}

int ClientApp::session_start(std::optional<int> timeslot_minutes, bool foreground) {
    if (!configured()) return exit_code::missing_config;
    const int minutes = timeslot_minutes.value_or(env_.config.timeslot_minutes);
    std::optional<TimeslotConfig> cfg;
    try {
        // The session gap is a server setting; the client only needs the period.
        cfg.emplace(Minutes{minutes}, std::max(TimeslotConfig::kDefaultSessionGap, Minutes{minutes + 1}));
    } catch (const Error& e) {
        *env_.err << "aa: " << e.what() << '\n';
        return exit_code::failure;
    }
    if (cfg->outside_proposed_band()) *env_.err << "aa: note: timeslots of 5 to 15 minutes are recommended\n";

    Timestamp started_at;
    {
        ClientQueue queue(queue_path(), *env_.clock);
        if (queue.session()) {
            *env_.err << "aa: a session is already active since " << format_iso8601(queue.session()->started_at) << '\n';
            return exit_code::session_active;
        }
        started_at = env_.clock->now();
        queue.start_session(started_at, Minutes{minutes});
        std::string why;
        const auto state = emit(queue, std::string(kSessionStartMarker), &why);
        *env_.out << "session started (" << (state == EntryState::pushed ? "sent" : "queued (offline)") << "), alerts every "
                  << minutes << " min\n";
    }
    if (!foreground) return exit_code::ok;
    *env_.out << "type a shout and press enter, or `stop` to end the session\n" << std::flush;
    return alert_loop(started_at, *cfg);
}

int ClientApp::alert_loop(Timestamp started_at, const TimeslotConfig& cfg) {
    Timestamp due = next_alert(started_at, cfg, started_at);
    for (;;) {
        auto line = env_.waiter->wait_until(due);
        if (line) {
            const auto text = *line;
            if (text == "stop") return session_stop();
            if (text.find_first_not_of(" \t") == std::string::npos) continue;
            shout(text);
            continue;
        }
        std::optional<Timestamp> last;
        {
            ClientQueue queue(queue_path(), *env_.clock);
            if (!queue.session()) {
                *env_.out << "session ended\n";
                return exit_code::ok;
            }
            last = queue.last_activity();
        }
        const auto now = env_.clock->now();
        if (now < due) continue;
        *env_.out << '\a' << "[aa " << format_iso8601(now).substr(11, 5)
                  << "] timeslot is up: what are you working on?\n> " << std::flush;
        if (env_.on_alert) env_.on_alert(now);
        due = next_alert(std::min(last.value_or(started_at), now), cfg, now);
    }
}

int ClientApp::session_stop() {
    if (!configured()) return exit_code::missing_config;
    ClientQueue queue(queue_path(), *env_.clock);
    if (!queue.session()) {
        *env_.err << "aa: no active session\n";
        return exit_code::no_session;
    }
    queue.stop_session(env_.clock->now());
    std::string why;
    const auto state = emit(queue, std::string(kSessionStopMarker), &why);
    *env_.out << "session stopped (" << (state == EntryState::pushed ? "sent" : "queued (offline)") << ")\n";
    return exit_code::ok;
}

int ClientApp::status() {
    ClientQueue queue(queue_path(), *env_.clock);
    const auto depth = queue.depth();
    if (const auto& s = queue.session()) {
        *env_.out << "session active since " << format_iso8601(s->started_at) << " (alerts every " << s->timeslot.count()
                  << " min)";
    } else {
        *env_.out << "no session";
    }
    *env_.out << ", ";
    if (depth == 0) {
        *env_.out << "queue empty\n";
    } else {
        *env_.out << "queue depth " << depth << '\n';
    }
    if (env_.config.server.empty()) {
        *env_.out << "server: not configured\n";
    } else {
        const bool up = env_.make_transport(env_.config.server)->reachable();
        *env_.out << "server: " << env_.config.server << (up ? " (reachable)" : " (unreachable)") << '\n';
    }
    return exit_code::ok;
}

int ClientApp::log(std::size_t n) {
    ClientQueue queue(queue_path(), *env_.clock);
    const auto& entries = queue.entries();
    const auto begin = entries.size() > n ? entries.size() - n : 0;
    for (auto i = begin; i < entries.size(); ++i) {
        const auto& e = entries[i];
        *env_.out << e.seq << "  " << format_iso8601(e.client_ts) << "  " << to_string(e.state) << "  " << e.text;
        if (e.error) *env_.out << "  [" << *e.error << "]";
        *env_.out << '\n';
    }
    return exit_code::ok;
}

}  // namespace aa
