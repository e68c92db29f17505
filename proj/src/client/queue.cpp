#include "aa/client/queue.hpp"

#include "aa/core/error.hpp"
#include "aa/util/crypto.hpp"

#include <spdlog/spdlog.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace aa {

using nlohmann::json;

std::string_view to_string(EntryState state) {
    switch (state) {
        case EntryState::queued: return "queued";
        case EntryState::pushed: return "pushed";
        case EntryState::rejected: return "rejected";
    }
    return "queued";
}

namespace {

int take_lock(const std::filesystem::path& lock_path, std::chrono::milliseconds timeout) {
    const int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
    if (fd < 0) throw Error(ErrorCode::StorageFailure, "cannot open " + lock_path.string() + ": " + std::strerror(errno));
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        if (errno != EWOULDBLOCK && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            ::close(fd);
            throw Error(ErrorCode::StorageFailure, "queue is locked by another aa process");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds{20});
    }
    return fd;
}

}  // namespace

ClientQueue::ClientQueue(const std::filesystem::path& path, const Clock& clock, std::chrono::milliseconds lock_timeout)
    : path_(path), clock_(clock) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    auto lock_path = path_;
    lock_path += ".lock";
    lock_fd_ = take_lock(lock_path, lock_timeout);
    try {
        auto read = read_journal(path_);
        for (const auto& line : read.lines) apply(line);
        writer_.emplace(path_, true);
        if (read.torn_bytes > 0) {
            spdlog::warn("queue {}: dropping {} byte(s) of an interrupted write", path_.string(), read.torn_bytes);
            writer_->truncate(read.valid_bytes);
        }
        if (client_id_.empty()) write("client_init", json{{"client_id", random_token()}});
    } catch (...) {
        ::close(lock_fd_);
        throw;
    }
}

ClientQueue::~ClientQueue() {
    writer_.reset();
    if (lock_fd_ >= 0) ::close(lock_fd_);
}

void ClientQueue::write(std::string kind, json data) {
    JournalLine line{line_seq_ + 1, std::move(kind), clock_.now(), std::move(data)};
    writer_->append(line);
    apply(line);
}

QueueEntry& ClientQueue::entry(std::uint64_t seq) {
    if (seq == 0 || seq > entries_.size()) {
        throw Error(ErrorCode::InvalidRecord, "unknown queue entry " + std::to_string(seq));
    }
    return entries_[seq - 1];
}

void ClientQueue::apply(const JournalLine& line) {
    line_seq_ = line.seq;
    const auto& d = line.data;
    if (line.kind == "client_init") {
        client_id_ = d.at("client_id").get<std::string>();
    } else if (line.kind == "enqueue") {
        QueueEntry e;
        e.seq = d.at("seq").get<std::uint64_t>();
        if (e.seq != entries_.size() + 1) throw Error(ErrorCode::InvalidRecord, "queue seq out of order");
        e.text = d.at("text").get<std::string>();
        e.client_ts = *parse_iso8601(d.at("client_ts").get<std::string>());
        e.on_behalf = d.value("on_behalf", "");
        entries_.push_back(std::move(e));
    } else if (line.kind == "pushed") {
        auto& e = entry(d.at("seq").get<std::uint64_t>());
        e.state = EntryState::pushed;
        e.server_id = d.at("server_id").get<std::uint64_t>();
    } else if (line.kind == "rejected") {
        auto& e = entry(d.at("seq").get<std::uint64_t>());
        e.state = EntryState::rejected;
        e.error = d.at("error").get<std::string>();
    } else if (line.kind == "session_start") {
        session_ = LocalSession{*parse_iso8601(d.at("at").get<std::string>()), Minutes{d.at("timeslot_min").get<int>()}};
    } else if (line.kind == "session_stop") {
        session_.reset();
    } else {
        throw Error(ErrorCode::InvalidRecord, "unknown queue record kind " + line.kind);
    }
}

const QueueEntry& ClientQueue::enqueue(std::string text, Timestamp client_ts, std::string on_behalf) {
    json data{{"seq", entries_.size() + 1}, {"text", std::move(text)}, {"client_ts", format_iso8601(client_ts)}};
    if (!on_behalf.empty()) data["on_behalf"] = std::move(on_behalf);
    write("enqueue", std::move(data));
    return entries_.back();
}

void ClientQueue::mark_pushed(std::uint64_t seq, std::uint64_t server_id) {
    if (entry(seq).state != EntryState::queued) return;
    write("pushed", json{{"seq", seq}, {"server_id", server_id}});
}

void ClientQueue::mark_rejected(std::uint64_t seq, std::string error) {
    if (entry(seq).state != EntryState::queued) return;
    write("rejected", json{{"seq", seq}, {"error", std::move(error)}});
}

std::vector<QueueEntry> ClientQueue::pending() const {
    std::vector<QueueEntry> out;
    for (const auto& e : entries_) {
        if (e.state == EntryState::queued) out.push_back(e);
    }
    return out;
}

std::size_t ClientQueue::depth() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.state == EntryState::queued;
    return n;
}

std::optional<Timestamp> ClientQueue::last_activity() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.back().client_ts;
}

void ClientQueue::start_session(Timestamp at, Minutes timeslot) {
    write("session_start", json{{"at", format_iso8601(at)}, {"timeslot_min", timeslot.count()}});
}

void ClientQueue::stop_session(Timestamp at) { write("session_stop", json{{"at", format_iso8601(at)}}); }

}  // namespace aa
