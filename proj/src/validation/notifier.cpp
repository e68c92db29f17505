#include "aa/validation/notifier.hpp"

#include "aa/net/tcp.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

namespace aa {
namespace {

std::string strip_mailto(const std::string& address) {
    return address.starts_with("mailto:") ? address.substr(7) : address;
}

// Reads a (possibly multi-line) SMTP reply and returns its status code, or 0.
int read_reply(net::TcpStream& stream, std::chrono::milliseconds timeout) {
    while (true) {
        auto r = stream.read_line(timeout);
        if (r.status != net::ReadStatus::line || r.line.size() < 3) return 0;
        if (r.line.size() > 3 && r.line[3] == '-') continue;
        return std::atoi(r.line.substr(0, 3).c_str());
    }
}

// Lines starting with "." must be doubled inside DATA.
std::string dot_stuff(const std::string& body) {
    std::string out;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto eol = body.find('\n', pos);
        std::string line = body.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        if (line.starts_with(".")) line.insert(0, ".");
        out += line + "\r\n";
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    return out;
}

}  // namespace

AddressKind classify_address(const std::string& address) {
    if (address.starts_with("http://") || address.starts_with("https://")) return AddressKind::webhook;
    const auto mail = strip_mailto(address);
    const auto at = mail.find('@');
    if (at != std::string::npos && at > 0 && at + 1 < mail.size() && mail.find_first_of(" \r\n<>") == std::string::npos) {
        return AddressKind::email;
    }
    return AddressKind::invalid;
}

std::string compose_email_body(const Notification& note) {
    return "Hi " + note.validator + ",\n\nyou were randomly picked to validate the AA session " + note.session_id +
           " by " + note.author + ".\nRead its shouts and mark it valid or invalid here:\n\n" + note.url + "\n";
}

DeliveryResult SmtpNotifier::deliver(const Notification& note) {
    const auto rcpt = strip_mailto(note.address);
    auto stream = net::TcpStream::connect(cfg_.host, cfg_.port, cfg_.timeout);
    if (!stream.valid()) return {false, "cannot connect to " + cfg_.host + ":" + std::to_string(cfg_.port)};

    auto step = [&](const std::string& command, int expected) -> bool {
        if (!command.empty() && !stream.send_all(command + "\r\n")) return false;
        return read_reply(stream, cfg_.timeout) == expected;
    };
    if (!step("", 220)) return {false, "no SMTP greeting"};
    if (!step("HELO " + cfg_.helo, 250)) return {false, "HELO rejected"};
    if (!step("MAIL FROM:<" + cfg_.from + ">", 250)) return {false, "MAIL FROM rejected"};
    if (!step("RCPT TO:<" + rcpt + ">", 250)) return {false, "RCPT TO rejected"};
    if (!step("DATA", 354)) return {false, "DATA rejected"};
    const std::string message = "From: " + cfg_.from + "\r\nTo: " + rcpt + "\r\nSubject: AA session " + note.session_id +
                                " awaits your validation\r\n\r\n" + dot_stuff(compose_email_body(note)) + ".";
    if (!step(message, 250)) return {false, "message rejected"};
    step("QUIT", 221);
    return {true, {}};
}

DeliveryResult WebhookNotifier::deliver(const Notification& note) {
    // split scheme://host[:port] from the path
    const auto scheme_end = note.address.find("://");
    const auto path_start = note.address.find('/', scheme_end + 3);
    const std::string origin = note.address.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : note.address.substr(path_start);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    const nlohmann::json body{{"session_id", note.session_id}, {"url", note.url}, {"validator", note.validator}};
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) return {false, "webhook transport error: " + httplib::to_string(res.error())};
    if (res->status < 200 || res->status >= 300) return {false, "webhook returned HTTP " + std::to_string(res->status)};
    return {true, {}};
}

DeliveryResult RoutingNotifier::deliver(const Notification& note) {
    switch (classify_address(note.address)) {
        case AddressKind::email:
            if (email_) return email_->deliver(note);
            return {false, "no email transport configured", false};
        case AddressKind::webhook:
            if (webhook_) return webhook_->deliver(note);
            return {false, "no webhook transport configured", false};
        case AddressKind::invalid: break;
    }
    return {false, "unusable notify address '" + note.address + "'", false};
}

NotificationDispatcher::NotificationDispatcher(std::shared_ptr<Notifier> notifier, RetryPolicy policy)
    : notifier_(std::move(notifier)), policy_(policy), worker_([this] { run(); }) {}

NotificationDispatcher::~NotificationDispatcher() { stop(); }

void NotificationDispatcher::enqueue(Notification note) {
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(note));
    }
    cv_.notify_all();
}

void NotificationDispatcher::wait_idle() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return (queue_.empty() && !busy_) || stopping_; });
}

void NotificationDispatcher::stop() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ && !worker_.joinable()) return;
        stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

std::size_t NotificationDispatcher::delivered() const {
    std::lock_guard lock(mutex_);
    return delivered_;
}

std::size_t NotificationDispatcher::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

std::size_t NotificationDispatcher::abandoned() const {
    std::lock_guard lock(mutex_);
    return abandoned_;
}

void NotificationDispatcher::run() {
    std::unique_lock lock(mutex_);
    while (true) {
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        Notification note = std::move(queue_.front());
        queue_.pop_front();
        busy_ = true;

        auto backoff = policy_.initial_backoff;
        bool ok = false;
        for (int attempt = 1; attempt <= policy_.max_attempts && !stopping_; ++attempt) {
            lock.unlock();
            const DeliveryResult result = notifier_->deliver(note);
            lock.lock();
            if (result.ok) {
                ok = true;
                break;
            }
            spdlog::warn("notify {} about {} failed (attempt {}/{}): {}", note.validator, note.session_id, attempt,
                         policy_.max_attempts, result.error);
            if (!result.retryable) break;
            if (attempt < policy_.max_attempts) {
                cv_.wait_for(lock, backoff, [&] { return stopping_; });
                backoff *= 2;
            }
        }
        if (ok) {
            ++delivered_;
        } else {
            ++abandoned_;
            spdlog::error("giving up notifying {} about session {}", note.validator, note.session_id);
        }
        busy_ = false;
        cv_.notify_all();
    }
}

}  // namespace aa
