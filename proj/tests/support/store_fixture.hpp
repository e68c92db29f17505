#pragma once

#include "aa/core/session.hpp"
#include "aa/store/store.hpp"
#include "aa/util/crypto.hpp"
#include "support/panel_feed.hpp"

#include <string>

namespace aa::fixture {

/// Token for a fixture developer: deterministic so tests can authenticate.
inline std::string token_for(std::string_view nick) { return "token-" + std::string(nick); }

inline Developer developer(std::string_view nick, std::string notify = "") {
    Developer d;
    d.nick = NickName::from(nick);
    d.auth_token_hash = sha256_hex(token_for(nick));
    d.notify_address = notify.empty() ? "mailto:" + std::string(nick) + "@example.org" : std::move(notify);
    return d;
}

inline void register_panel_team(Store& store) {
    for (auto nick : kPanelNicks) store.upsert_developer(developer(nick));
}

/// Registers the team, then appends every panel feed row oldest first with the
/// clock pinned to the row's time, so server_ts equals the printed time.
inline void load_panel(Store& store, ManualClock& clock) {
    register_panel_team(store);
    for (const auto& s : panel_shouts()) {
        clock.set(s.client_ts);
        store.append_shout(ShoutDraft{s.author, s.text, s.client_ts, s.origin, s.idem_key});
    }
}

}  // namespace aa::fixture
