#pragma once

#include "aa/core/model.hpp"
#include "aa/store/journal.hpp"
#include "aa/util/time.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace aa {

enum class RecordKind { shout, developer_upsert, screencast_attach, validation_assign, validation_verdict };
std::string_view to_string(RecordKind kind);
std::optional<RecordKind> parse_record_kind(std::string_view text);

/// A typed journal record. `seq` and `written_at` are assigned by Store::append.
struct JournalRecord {
    RecordKind kind = RecordKind::shout;
    nlohmann::json payload = nlohmann::json::object();
    Timestamp written_at{};
    std::uint64_t seq = 0;
};

enum class Verdict { valid, invalid };
std::string_view to_string(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view text);

struct Assignment {
    std::string session_id;
    NickName author;
    NickName validator;
    std::string token_hash;
    Timestamp assigned_at{};
    std::optional<Verdict> verdict;
    std::optional<std::string> comment;
    std::optional<Timestamp> decided_at;
};

enum class CredentialScope { cli, relay };

struct Credential {
    NickName nick;
    CredentialScope scope = CredentialScope::cli;
    std::optional<ChatAlias> alias;
};

/// What the server knows about a shout before it is accepted.
struct ShoutDraft {
    NickName author;
    std::string text;  // normalized
    Timestamp client_ts{};
    Origin origin = Origin::http;
    IdemKey idem_key;
};

enum class Order { newest_first, oldest_first };

struct ShoutFilter {
    std::optional<NickName> author;
    std::optional<Timestamp> since;  // client_ts >= since
    std::optional<Timestamp> until;  // client_ts <= until
    std::optional<std::size_t> limit;
    Order order = Order::newest_first;
    /// Keyset pagination: only shouts with id < before_id (newest_first) or > after (oldest_first).
    std::optional<ShoutId> before_id;
    std::optional<ShoutId> after_id;
};

struct StoreOptions {
    /// Empty keeps everything in memory.
    std::filesystem::path journal_path;
    bool fsync = true;
    /// Drop a torn final line instead of failing.
    bool recover = false;
};

/// State folded from the journal. Applying the same records always yields the
/// same state; Store keeps one of these behind a shared mutex.
class StoreState {
public:
    void validate(const JournalRecord& record) const;
    void apply(const JournalRecord& record);

    /// Canonical, deterministic serialization of every index.
    std::string dump() const;

    std::uint64_t last_seq = 0;
    Timestamp last_server_ts{};
    std::vector<Shout> shouts;  // index = id - 1
    std::map<NickName, std::vector<ShoutId>> by_author;
    std::map<IdemKey, ShoutId> idem;
    std::map<std::string, ShoutId> session_starts;  // session_id_for(author, id) -> id
    std::map<NickName, Developer> developers;
    std::map<std::string, Credential> credentials;  // token hash -> owner
    std::map<std::string, std::string> screencasts;  // session id -> url
    std::map<std::string, Assignment> assignments;   // session id -> assignment
    std::map<std::string, std::string> assignment_tokens;  // token hash -> session id
};

class Store {
public:
    /// Replays the journal. Throws CorruptJournal; a torn final record is
    /// dropped (with the file truncated) only when options.recover is set.
    Store(const Clock& clock, StoreOptions options = {});

    /// Validates, durably writes, then applies. Returns the assigned seq.
    std::uint64_t append(JournalRecord record);

    /// Throws Error(DuplicateIdemKey) when the key was already accepted.
    Shout append_shout(const ShoutDraft& draft);
    void upsert_developer(const Developer& dev);
    void attach_screencast(const std::string& session_id, const NickName& author, const std::string& url);
    Assignment record_assignment(const std::string& session_id, const NickName& author, const NickName& validator,
                                 const std::string& token_hash);
    Assignment record_verdict(const std::string& token_hash, Verdict verdict, std::optional<std::string> comment);

    std::vector<Shout> query_shouts(const ShoutFilter& filter) const;
    std::optional<Shout> shout(ShoutId id) const;
    std::optional<ShoutId> find_idem(const IdemKey& key) const;
    std::optional<ShoutId> session_start(const std::string& session_id) const;
    std::optional<Developer> developer(const NickName& nick) const;
    std::vector<Developer> developers() const;
    std::optional<Credential> resolve_token(const std::string& token) const;
    std::optional<std::string> screencast(const std::string& session_id) const;
    std::optional<Assignment> assignment_for_session(const std::string& session_id) const;
    std::optional<Assignment> assignment_by_token(const std::string& token) const;
    std::vector<Assignment> assignments() const;

    std::vector<NickName> authors() const;
    /// Grows with every accepted shout by `author`; used as a cache version.
    std::size_t author_shout_count(const NickName& author) const;

    std::uint64_t last_seq() const;
    std::size_t shout_count() const;
    std::string dump_state() const;
    /// Number of torn bytes dropped while opening (0 when the journal was clean).
    std::uint64_t recovered_bytes() const noexcept { return recovered_bytes_; }

    /// Rebuilds indexes from a journal file without opening it for writing.
    static StoreState rebuild(const std::filesystem::path& journal_path);

private:
    std::uint64_t append_locked(JournalRecord& record);

    const Clock& clock_;
    StoreOptions options_;
    std::optional<JournalWriter> writer_;
    std::uint64_t recovered_bytes_ = 0;
    mutable std::shared_mutex mutex_;
    StoreState state_;
};

/// http:// or https:// with a non-empty host.
bool is_http_url(std::string_view url);

}  // namespace aa
