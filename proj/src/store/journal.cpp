#include "aa/store/journal.hpp"

#include "aa/core/error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

namespace aa {

std::string encode_line(const JournalLine& line) {
    nlohmann::ordered_json out;
    out["v"] = JournalLine::kSchemaVersion;
    out["seq"] = line.seq;
    out["kind"] = line.kind;
    out["at"] = format_iso8601(line.written_at);
    out["data"] = line.data;
    return out.dump();
}

JournalLine decode_line(std::string_view text) {
    nlohmann::json parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) throw Error(ErrorCode::InvalidRecord, "journal line is not a JSON object");
    try {
        if (parsed.at("v").get<int>() != JournalLine::kSchemaVersion) {
            throw Error(ErrorCode::InvalidRecord, "unsupported journal schema version");
        }
        JournalLine line;
        line.seq = parsed.at("seq").get<std::uint64_t>();
        line.kind = parsed.at("kind").get<std::string>();
        auto at = parse_iso8601(parsed.at("at").get<std::string>());
        if (!at) throw Error(ErrorCode::InvalidRecord, "bad journal timestamp");
        line.written_at = *at;
        line.data = parsed.at("data");
        if (!line.data.is_object()) throw Error(ErrorCode::InvalidRecord, "journal data must be an object");
        return line;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidRecord, std::string("malformed journal line: ") + e.what());
    }
}

JournalReadResult read_journal(const std::filesystem::path& path) {
    JournalReadResult result;
    std::ifstream in(path, std::ios::binary);
    if (!in) return result;  // missing file is an empty journal
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    std::size_t pos = 0;
    std::uint64_t last_seq = 0;
    while (pos < content.size()) {
        const std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) break;
        const std::string_view text(content.data() + pos, eol - pos);
        JournalLine line;
        try {
            line = decode_line(text);
        } catch (const Error& e) {
            throw CorruptJournal(last_seq,
                                 "corrupt journal record after seq " + std::to_string(last_seq) + ": " + e.what(), false);
        }
        if (line.seq <= last_seq) {
            throw CorruptJournal(last_seq, "journal seq " + std::to_string(line.seq) + " does not increase", false);
        }
        last_seq = line.seq;
        result.lines.push_back(std::move(line));
        pos = eol + 1;
    }
    result.valid_bytes = pos;
    result.torn_bytes = content.size() - pos;
    return result;
}

JournalWriter::JournalWriter(const std::filesystem::path& path, bool fsync_each_append) : path_(path), fsync_(fsync_each_append) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error(ErrorCode::StorageFailure, "cannot open journal " + path.string() + ": " + std::strerror(errno));
    }
}

JournalWriter::~JournalWriter() {
    if (fd_ >= 0) ::close(fd_);
}

JournalWriter::JournalWriter(JournalWriter&& other) noexcept
    : path_(std::move(other.path_)), fd_(std::exchange(other.fd_, -1)), fsync_(other.fsync_) {}

JournalWriter& JournalWriter::operator=(JournalWriter&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        fd_ = std::exchange(other.fd_, -1);
        fsync_ = other.fsync_;
    }
    return *this;
}

void JournalWriter::append(const JournalLine& line) {
    std::string bytes = encode_line(line);
    bytes.push_back('\n');
    const off_t start = ::lseek(fd_, 0, SEEK_END);
    const char* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        const ssize_t n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            // keep the file line-aligned so the next append is not glued to a fragment
            if (start >= 0) (void)::ftruncate(fd_, start);
            throw Error(ErrorCode::StorageFailure, std::string("journal write failed: ") + std::strerror(err));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (fsync_ && ::fdatasync(fd_) != 0) {
        throw Error(ErrorCode::StorageFailure, std::string("journal fsync failed: ") + std::strerror(errno));
    }
}

void JournalWriter::truncate(std::uint64_t size) {
    if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) {
        throw Error(ErrorCode::StorageFailure, std::string("journal truncate failed: ") + std::strerror(errno));
    }
    if (fsync_) ::fsync(fd_);
}

}  // namespace aa
