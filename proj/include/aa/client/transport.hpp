#pragma once

#include "aa/client/queue.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

namespace aa {

struct PushRequest {
    std::string text;
    Timestamp client_ts{};
    std::string client_id;
    std::uint64_t seq = 0;
    std::string origin = "cli";
};

struct PushResponse {
    enum class Outcome {
        accepted,         // 201
        duplicate,        // 200: the server already had this key
        rejected,         // 400/409/422: resending cannot help
        retry_later,      // 401/429/5xx
        transport_error,  // no HTTP response
    };
    Outcome outcome = Outcome::transport_error;
    int status = 0;
    std::uint64_t id = 0;
    std::string error;
};

class ShoutTransport {
public:
    virtual ~ShoutTransport() = default;
    virtual PushResponse send(const PushRequest& request, const std::string& token) = 0;
    virtual bool reachable() = 0;
};

/// POSTs to <base_url>/api/shouts.
class HttpTransport : public ShoutTransport {
public:
    explicit HttpTransport(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds{5});
    PushResponse send(const PushRequest& request, const std::string& token) override;
    bool reachable() override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

struct PushSummary {
    std::size_t sent = 0;
    std::size_t remaining = 0;
    std::size_t rejected = 0;
    /// Why the push stopped early, if it did.
    std::string stopped_because;
};

/// Sends queued entries in seq order with their original client_ts and
/// (client_id, seq) keys. Stops at the first transport failure or
/// retry-later answer; entries the server refuses outright are marked
/// rejected and skipped. `token_for` maps an entry to its credential.
PushSummary push_queue(ClientQueue& queue, ShoutTransport& transport,
                       const std::function<std::string(const QueueEntry&)>& token_for, std::string origin = "cli");

}  // namespace aa
