#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace aa {

/// What a validator receives: which session to review and where.
struct Notification {
    std::string session_id;
    std::string author;
    std::string validator;
    std::string address;  // "mailto:..." / "user@host" or an http(s) webhook URL
    std::string url;      // <base>/validate/<token>
};

struct DeliveryResult {
    bool ok = false;
    std::string error;
    /// False when retrying cannot help (no transport for the address, unusable address).
    bool retryable = true;
};

enum class AddressKind { email, webhook, invalid };
AddressKind classify_address(const std::string& address);

/// Delivery transport. Implementations report failure instead of throwing.
class Notifier {
public:
    virtual ~Notifier() = default;
    virtual DeliveryResult deliver(const Notification& note) = 0;
};

std::string compose_email_body(const Notification& note);

struct SmtpConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 25;
    std::string from = "aa@localhost";
    std::string helo = "localhost";
    std::chrono::milliseconds timeout{5000};
};

/// Minimal SMTP submission (HELO, MAIL FROM, RCPT TO, DATA, QUIT), no auth or TLS.
class SmtpNotifier final : public Notifier {
public:
    explicit SmtpNotifier(SmtpConfig cfg) : cfg_(std::move(cfg)) {}
    DeliveryResult deliver(const Notification& note) override;

private:
    SmtpConfig cfg_;
};

/// POSTs {"session_id", "url", "validator"} as JSON to the address.
class WebhookNotifier final : public Notifier {
public:
    explicit WebhookNotifier(std::chrono::milliseconds timeout = std::chrono::seconds(5)) : timeout_(timeout) {}
    DeliveryResult deliver(const Notification& note) override;

private:
    std::chrono::milliseconds timeout_;
};

/// Chooses email or webhook delivery from the address.
class RoutingNotifier final : public Notifier {
public:
    RoutingNotifier(std::shared_ptr<Notifier> email, std::shared_ptr<Notifier> webhook)
        : email_(std::move(email)), webhook_(std::move(webhook)) {}
    DeliveryResult deliver(const Notification& note) override;

private:
    std::shared_ptr<Notifier> email_;
    std::shared_ptr<Notifier> webhook_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_backoff{1000};
};

/// Delivers notifications on a background thread, retrying failures with
/// exponential backoff. Delivery never blocks the caller.
class NotificationDispatcher {
public:
    NotificationDispatcher(std::shared_ptr<Notifier> notifier, RetryPolicy policy = {});
    ~NotificationDispatcher();
    NotificationDispatcher(const NotificationDispatcher&) = delete;
    NotificationDispatcher& operator=(const NotificationDispatcher&) = delete;

    void enqueue(Notification note);
    /// Blocks until every queued notification is delivered or abandoned.
    void wait_idle();
    void stop();

    std::size_t delivered() const;
    /// Queued and not yet attempted.
    std::size_t pending() const;
    std::size_t abandoned() const;

private:
    void run();

    std::shared_ptr<Notifier> notifier_;
    RetryPolicy policy_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Notification> queue_;
    bool busy_ = false;
    bool stopping_ = false;
    std::size_t delivered_ = 0;
    std::size_t abandoned_ = 0;
    std::thread worker_;
};

}  // namespace aa
