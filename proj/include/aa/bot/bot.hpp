#pragma once

#include "aa/bot/relay.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace aa {

struct BotConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 6667;
    std::string nick = "aabot";
    std::string user = "aabot";
    std::string realname = "AA log bot";
    std::vector<std::string> channels;
    std::chrono::milliseconds initial_backoff{1000};
    std::chrono::milliseconds max_backoff{300'000};
    std::chrono::milliseconds connect_timeout{10'000};
    /// How often the loop wakes to retry queued shouts and check for stop().
    std::chrono::milliseconds tick{1000};
};

/// initial * 2^attempt, capped.
std::chrono::milliseconds reconnect_delay(unsigned attempt, std::chrono::milliseconds initial,
                                          std::chrono::milliseconds cap);

/// The IRC side: registration, channel joins, PING/PONG, reconnects with
/// exponential backoff. Messages go to a Relay; everything runs on the
/// thread that calls run().
class IrcBot {
public:
    IrcBot(BotConfig config, Relay& relay);

    /// Returns after stop(), having flushed the relay queue and sent QUIT.
    void run();
    void stop();

    std::size_t connections() const noexcept { return connections_; }
    /// Observes each backoff delay before it is waited out.
    std::function<void(std::chrono::milliseconds)> on_backoff;

private:
    /// One connection's lifetime. Returns true if registration completed.
    bool serve_connection();
    bool wait_backoff(std::chrono::milliseconds delay);

    BotConfig config_;
    Relay& relay_;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> connections_{0};
    std::mutex mutex_;
    std::condition_variable cv_;
};

}  // namespace aa
