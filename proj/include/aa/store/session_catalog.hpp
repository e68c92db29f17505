#pragma once

#include "aa/core/model.hpp"
#include "aa/store/store.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace aa {

/// Sessions derived from stored shouts. The whole-history grouping of each
/// author is cached and recomputed when that author's shout count changes.
class SessionCatalog {
public:
    SessionCatalog(const Store& store, TimeslotConfig cfg) : store_(store), cfg_(cfg) {}

    const TimeslotConfig& config() const noexcept { return cfg_; }

    /// Whole-history sessions of `author`, oldest first, with screencast and validation state filled in.
    std::vector<Session> canonical(const NickName& author);

    /// group_sessions over the author's shouts whose client_ts lies in [from, to].
    std::vector<Session> window(const NickName& author, std::optional<Timestamp> from, std::optional<Timestamp> to);

    /// Resolves any session id: the session that starts at the shout the id names.
    std::optional<Session> find(const std::string& session_id);

    /// Canonical session containing the shout, if the shout exists.
    std::optional<std::string> session_of(const Shout& shout);

private:
    struct Entry {
        std::size_t version = 0;
        std::vector<Session> sessions;
        std::map<ShoutId, std::size_t> index_of_shout;
    };

    const Entry& entry_locked(const NickName& author);
    void decorate(Session& session);

    const Store& store_;
    TimeslotConfig cfg_;
    std::mutex mutex_;
    std::map<NickName, Entry> cache_;
};

}  // namespace aa
