#pragma once

#include "aa/client/config.hpp"
#include "aa/client/queue.hpp"
#include "aa/client/transport.hpp"
#include "aa/core/model.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace aa {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int empty_text = 2;
inline constexpr int missing_config = 3;
inline constexpr int session_active = 4;
inline constexpr int no_session = 5;
}  // namespace exit_code

/// Blocks until `deadline` or until the user types a line, whichever comes
/// first. May also return early with nothing so the caller can re-check state.
class LineWaiter {
public:
    virtual ~LineWaiter() = default;
    virtual std::optional<std::string> wait_until(Timestamp deadline) = 0;
};

/// poll(2) on stdin against the system clock, waking at least once a second.
class StdinWaiter : public LineWaiter {
public:
    explicit StdinWaiter(const Clock& clock) : clock_(clock) {}
    std::optional<std::string> wait_until(Timestamp deadline) override;

private:
    const Clock& clock_;
    bool eof_ = false;
    std::string buffer_;
};

struct ClientEnv {
    std::filesystem::path config_dir;
    ClientConfig config;
    const Clock* clock = nullptr;
    std::function<std::unique_ptr<ShoutTransport>(const std::string& server)> make_transport;
    LineWaiter* waiter = nullptr;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    /// Called each time an alert rings.
    std::function<void(Timestamp)> on_alert;
};

/// The `aa` commands. Each returns a process exit code.
class ClientApp {
public:
    explicit ClientApp(ClientEnv env);

    int shout(const std::string& text);
    int push();
    int session_start(std::optional<int> timeslot_minutes, bool foreground);
    int session_stop();
    int status();
    int log(std::size_t n);

    std::filesystem::path queue_path() const { return env_.config_dir / "queue.jsonl"; }

private:
    /// Appends, then pushes everything queued. Returns the pushed state of the new entry.
    EntryState emit(ClientQueue& queue, const std::string& normalized, std::string* why_not_sent);
    int alert_loop(Timestamp started_at, const TimeslotConfig& cfg);
    bool configured();

    ClientEnv env_;
};

}  // namespace aa
