#pragma once

#include "aa/core/model.hpp"
#include "aa/store/session_catalog.hpp"
#include "aa/store/store.hpp"
#include "aa/validation/notifier.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace aa {

/// An assignment as created, with the plaintext token that only the validator receives.
struct IssuedAssignment {
    Assignment assignment;
    std::string token;
    std::string url;
};

struct ValidationOptions {
    /// Prefix of the links sent to validators: <base_url>/validate/<token>.
    std::string base_url = "http://localhost:8080";
    /// Seed for validator selection; unset draws one from std::random_device.
    std::optional<std::uint64_t> seed;
    /// Token generator; defaults to 128-bit CSPRNG tokens.
    std::function<std::string()> token_source;
};

/// Uniform pick among `pool` minus `author`. Throws Error(NoEligibleValidator).
NickName choose_validator(std::mt19937_64& rng, std::span<const NickName> pool, const NickName& author);

/// Peer validation: assigns a random teammate to each closed session and
/// records their verdict.
class ValidationEngine {
public:
    ValidationEngine(Store& store, SessionCatalog& catalog, ValidationOptions options,
                     NotificationDispatcher* dispatcher = nullptr);

    /// Assigns every closed, unassigned session. A session is closed when its
    /// last shout is older than the session gap or is an explicit stop marker.
    /// Sessions whose author is the only active developer stay pending.
    std::vector<IssuedAssignment> close_and_assign(Timestamp now);

    /// Throws Error(UnknownToken | AlreadyDecided | InvalidRecord).
    Assignment record_verdict(const std::string& token, std::string_view verdict, std::optional<std::string> comment);

    std::vector<Assignment> pending_for(const NickName& validator) const;

    std::string validation_url(const std::string& token) const;

private:
    Store& store_;
    SessionCatalog& catalog_;
    ValidationOptions options_;
    NotificationDispatcher* dispatcher_;
    std::mutex scan_mutex_;
    std::mt19937_64 rng_;
};

/// Runs close_and_assign on a fixed interval in a background thread.
class AssignmentScanner {
public:
    AssignmentScanner(ValidationEngine& engine, const Clock& clock,
                      std::chrono::milliseconds interval = std::chrono::seconds{60});
    ~AssignmentScanner();
    AssignmentScanner(const AssignmentScanner&) = delete;
    AssignmentScanner& operator=(const AssignmentScanner&) = delete;

    void start();
    void stop();
    std::size_t scans() const noexcept { return scans_; }

private:
    void run();

    ValidationEngine& engine_;
    const Clock& clock_;
    std::chrono::milliseconds interval_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_ = false;
    std::atomic<std::size_t> scans_{0};
    std::thread thread_;
};

}  // namespace aa
