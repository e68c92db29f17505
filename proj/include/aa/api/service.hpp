#pragma once

#include "aa/api/rate_limiter.hpp"
#include "aa/store/session_catalog.hpp"
#include "aa/store/store.hpp"
#include "aa/validation/engine.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace aa {

struct ServiceOptions {
    int rate_limit_per_minute = 60;
    Seconds max_future_skew{24 * 3600};
    std::size_t default_feed_limit = 50;
    std::size_t max_feed_limit = 500;
    std::chrono::milliseconds stream_keepalive{15000};
    /// Optional static dashboard bundle served under "/".
    std::filesystem::path ui_dir;
};

/// The AA web server: shout ingestion, the public feed, sessions,
/// screencast links, peer validation and statistics over HTTP/JSON.
class ApiService {
public:
    ApiService(Store& store, SessionCatalog& catalog, ValidationEngine& engine, const Clock& clock,
               ServiceOptions options = {});

    void mount(httplib::Server& server);
    /// Ends open event streams.
    void shutdown();

    nlohmann::json shout_json(const Shout& shout);
    nlohmann::json session_json(const Session& session, bool with_shouts);

private:
    void notify_feed();

    Store& store_;
    SessionCatalog& catalog_;
    ValidationEngine& engine_;
    const Clock& clock_;
    ServiceOptions options_;
    RateLimiter limiter_;
    std::chrono::steady_clock::time_point started_ = std::chrono::steady_clock::now();

    std::mutex feed_mutex_;
    std::condition_variable feed_cv_;
    std::atomic<bool> stopping_{false};
};

/// Owns the listening socket and the accept thread.
class ApiServer {
public:
    explicit ApiServer(ApiService& service);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds and starts serving in the background; port 0 picks a free port. Returns the port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();
    int port() const noexcept { return port_; }

private:
    ApiService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

/// "2013-05-27T00:00:00Z", or a bare date "2013-05-27" meaning the start of the
/// day (or its last second when `end_of_day`).
std::optional<Timestamp> parse_time_bound(std::string_view text, bool end_of_day);

/// Opaque feed cursor wrapping the last shout id of a page.
std::string encode_cursor(ShoutId last_id);
std::optional<ShoutId> decode_cursor(std::string_view cursor);

}  // namespace aa
