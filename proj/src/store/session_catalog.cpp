#include "aa/store/session_catalog.hpp"

#include "aa/core/session.hpp"

#include <algorithm>

namespace aa {
namespace {

std::vector<Shout> all_by(const Store& store, const NickName& author) {
    ShoutFilter filter;
    filter.author = author;
    filter.order = Order::oldest_first;
    return store.query_shouts(filter);
}

}  // namespace

const SessionCatalog::Entry& SessionCatalog::entry_locked(const NickName& author) {
    const auto version = store_.author_shout_count(author);
    auto& entry = cache_[author];
    if (entry.version == version) return entry;

    std::vector<Shout> shouts = all_by(store_, author);
    entry.version = shouts.size();
    entry.sessions = group_sessions(shouts, cfg_);
    entry.index_of_shout.clear();
    for (std::size_t i = 0; i < entry.sessions.size(); ++i) {
        for (auto id : entry.sessions[i].shout_ids) entry.index_of_shout[id] = i;
    }
    return entry;
}

void SessionCatalog::decorate(Session& session) {
    std::string canonical_id = session.session_id;
    if (!session.shout_ids.empty()) {
        const auto& entry = entry_locked(session.author);
        if (auto it = entry.index_of_shout.find(session.shout_ids.front()); it != entry.index_of_shout.end()) {
            canonical_id = entry.sessions[it->second].session_id;
        }
    }
    session.screencast_url = store_.screencast(session.session_id);
    if (!session.screencast_url && canonical_id != session.session_id) {
        session.screencast_url = store_.screencast(canonical_id);
    }
    auto assignment = store_.assignment_for_session(session.session_id);
    if (!assignment && canonical_id != session.session_id) assignment = store_.assignment_for_session(canonical_id);
    if (!assignment) {
        session.validation_state = ValidationState::pending;
    } else if (!assignment->verdict) {
        session.validation_state = ValidationState::assigned;
    } else {
        session.validation_state = *assignment->verdict == Verdict::valid ? ValidationState::valid : ValidationState::invalid;
    }
}

std::vector<Session> SessionCatalog::canonical(const NickName& author) {
    std::lock_guard lock(mutex_);
    std::vector<Session> out = entry_locked(author).sessions;
    for (auto& s : out) decorate(s);
    return out;
}

std::vector<Session> SessionCatalog::window(const NickName& author, std::optional<Timestamp> from,
                                            std::optional<Timestamp> to) {
    ShoutFilter filter;
    filter.author = author;
    filter.since = from;
    filter.until = to;
    filter.order = Order::oldest_first;
    const auto shouts = store_.query_shouts(filter);
    std::vector<Session> out = group_sessions(shouts, cfg_);
    std::lock_guard lock(mutex_);
    for (auto& s : out) decorate(s);
    return out;
}

std::optional<Session> SessionCatalog::find(const std::string& session_id) {
    const auto start_id = store_.session_start(session_id);
    if (!start_id) return std::nullopt;
    const auto start = store_.shout(*start_id);
    if (!start) return std::nullopt;

    std::vector<Shout> shouts = all_by(store_, start->author);
    std::erase_if(shouts, [&](const Shout& s) { return shout_order_less(s, *start); });
    auto sessions = group_sessions(shouts, cfg_);
    if (sessions.empty()) return std::nullopt;
    Session session = std::move(sessions.front());
    std::lock_guard lock(mutex_);
    decorate(session);
    return session;
}

std::optional<std::string> SessionCatalog::session_of(const Shout& shout) {
    std::lock_guard lock(mutex_);
    const auto& entry = entry_locked(shout.author);
    auto it = entry.index_of_shout.find(shout.id);
    if (it == entry.index_of_shout.end()) return std::nullopt;
    return entry.sessions[it->second].session_id;
}

}  // namespace aa
