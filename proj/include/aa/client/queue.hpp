#pragma once

#include "aa/store/journal.hpp"
#include "aa/util/time.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace aa {

enum class EntryState { queued, pushed, rejected };
std::string_view to_string(EntryState state);

struct QueueEntry {
    std::uint64_t seq = 0;
    std::string text;
    Timestamp client_ts{};
    EntryState state = EntryState::queued;
    std::optional<std::uint64_t> server_id;
    std::optional<std::string> error;
    /// Chat nick the bot relays for; empty for CLI entries.
    std::string on_behalf;
};

struct LocalSession {
    Timestamp started_at{};
    Minutes timeslot{15};
};

/// The local shout queue: an append-only journal in the server's line format
/// plus an exclusive lock held for the lifetime of the object, so concurrent
/// invocations serialize. A torn final line is dropped on open.
class ClientQueue {
public:
    /// Throws Error(StorageFailure) if the lock cannot be taken within `lock_timeout`,
    /// CorruptJournal on mid-file damage.
    explicit ClientQueue(const std::filesystem::path& path, const Clock& clock,
                         std::chrono::milliseconds lock_timeout = std::chrono::seconds{10});
    ~ClientQueue();
    ClientQueue(const ClientQueue&) = delete;
    ClientQueue& operator=(const ClientQueue&) = delete;

    const std::string& client_id() const noexcept { return client_id_; }

    /// `text` must already be normalized.
    const QueueEntry& enqueue(std::string text, Timestamp client_ts, std::string on_behalf = {});
    void mark_pushed(std::uint64_t seq, std::uint64_t server_id);
    void mark_rejected(std::uint64_t seq, std::string error);

    const std::vector<QueueEntry>& entries() const noexcept { return entries_; }
    std::vector<QueueEntry> pending() const;
    std::size_t depth() const;
    /// client_ts of the newest entry, if any.
    std::optional<Timestamp> last_activity() const;

    const std::optional<LocalSession>& session() const noexcept { return session_; }
    void start_session(Timestamp at, Minutes timeslot);
    void stop_session(Timestamp at);

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void write(std::string kind, nlohmann::json data);
    void apply(const JournalLine& line);
    QueueEntry& entry(std::uint64_t seq);

    std::filesystem::path path_;
    const Clock& clock_;
    int lock_fd_ = -1;
    std::optional<JournalWriter> writer_;
    std::uint64_t line_seq_ = 0;
    std::string client_id_;
    std::vector<QueueEntry> entries_;
    std::optional<LocalSession> session_;
};

}  // namespace aa
