#pragma once

#include "aa/util/time.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace aa {

/// One line of an append-only journal: {"v":1,"seq":N,"kind":...,"at":...,"data":{...}}.
/// The server store and the client queue share this envelope.
struct JournalLine {
    static constexpr int kSchemaVersion = 1;

    std::uint64_t seq = 0;
    std::string kind;
    Timestamp written_at{};
    nlohmann::json data = nlohmann::json::object();
};

std::string encode_line(const JournalLine& line);
/// Throws Error(InvalidRecord) on malformed input or an unknown schema version.
JournalLine decode_line(std::string_view text);

struct JournalReadResult {
    std::vector<JournalLine> lines;
    /// Byte length of the intact prefix (everything up to the last LF of a valid line).
    std::uint64_t valid_bytes = 0;
    /// Bytes after valid_bytes: a torn final write.
    std::uint64_t torn_bytes = 0;
};

/// Reads every complete line. A trailing fragment without LF is reported in
/// torn_bytes. A malformed LF-terminated line or a non-increasing seq throws
/// CorruptJournal naming the last good seq.
JournalReadResult read_journal(const std::filesystem::path& path);

/// Append-only file writer. Each append is written with a single write(2) and,
/// unless disabled, fsync'd before returning.
class JournalWriter {
public:
    JournalWriter(const std::filesystem::path& path, bool fsync_each_append);
    ~JournalWriter();
    JournalWriter(const JournalWriter&) = delete;
    JournalWriter& operator=(const JournalWriter&) = delete;
    JournalWriter(JournalWriter&& other) noexcept;
    JournalWriter& operator=(JournalWriter&& other) noexcept;

    /// Throws Error(StorageFailure).
    void append(const JournalLine& line);
    /// Drops everything past `size` bytes (torn-tail recovery).
    void truncate(std::uint64_t size);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    bool fsync_ = true;
};

}  // namespace aa
