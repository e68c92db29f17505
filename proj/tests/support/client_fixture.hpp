#pragma once

#include "aa/client/app.hpp"

#include <deque>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace aa::testing {

/// Wraps another transport. After `fail_after` successful sends every call
/// fails; with `lose_response` the request still reaches the server but the
/// caller sees a transport error (the "server died before replying" case).
class FaultyTransport : public ShoutTransport {
public:
    explicit FaultyTransport(ShoutTransport& inner) : inner_(inner) {}

    PushResponse send(const PushRequest& request, const std::string& token) override {
        ++calls;
        if (fail_after && delivered >= *fail_after) {
            if (lose_response) inner_.send(request, token);
            return PushResponse{PushResponse::Outcome::transport_error, 0, 0, "injected fault"};
        }
        auto res = inner_.send(request, token);
        if (res.outcome == PushResponse::Outcome::accepted || res.outcome == PushResponse::Outcome::duplicate) {
            ++delivered;
        }
        return res;
    }
    bool reachable() override { return !fail_after || delivered < *fail_after; }

    std::optional<std::size_t> fail_after;
    bool lose_response = false;
    std::size_t delivered = 0;
    std::size_t calls = 0;

private:
    ShoutTransport& inner_;
};

/// Forwards to a transport owned elsewhere, so ClientEnv's factory can hand out a shared one.
class TransportRef : public ShoutTransport {
public:
    explicit TransportRef(ShoutTransport& target) : target_(target) {}
    PushResponse send(const PushRequest& r, const std::string& t) override { return target_.send(r, t); }
    bool reachable() override { return target_.reachable(); }

private:
    ShoutTransport& target_;
};

/// Replays typed lines at fixed times against a ManualClock.
class ScriptedWaiter : public LineWaiter {
public:
    ScriptedWaiter(ManualClock& clock, Timestamp give_up) : clock_(clock), give_up_(give_up) {}

    void type_at(Timestamp at, std::string line) {
        script_.push_back(Step{at, std::move(line), nullptr});
    }
    /// Runs `action` at `at` (e.g. another process stopping the session) and wakes the loop.
    void run_at(Timestamp at, std::function<void()> action) { script_.push_back(Step{at, {}, std::move(action)}); }

    std::optional<std::string> wait_until(Timestamp deadline) override {
        if (!script_.empty() && script_.front().at <= deadline) {
            auto step = std::move(script_.front());
            script_.pop_front();
            clock_.set(step.at);
            if (step.action) {
                step.action();
                return std::nullopt;
            }
            return step.line;
        }
        if (deadline > give_up_) throw std::runtime_error("alert loop did not finish");
        clock_.set(deadline);
        return std::nullopt;
    }

private:
    ManualClock& clock_;
    Timestamp give_up_;
    struct Step {
        Timestamp at;
        std::string line;
        std::function<void()> action;
    };
    std::deque<Step> script_;
};

/// A ClientApp wired to in-memory streams.
struct ClientRig {
    ClientRig(std::filesystem::path dir, ManualClock& clock, ShoutTransport& transport, ClientConfig config)
        : clock(clock), transport(transport) {
        env.config_dir = std::move(dir);
        env.config = std::move(config);
        env.clock = &clock;
        env.make_transport = [this](const std::string&) { return std::make_unique<TransportRef>(this->transport); };
        env.out = &out;
        env.err = &err;
    }

    ClientApp app() { return ClientApp(env); }
    std::string take_out() {
        auto s = out.str();
        out.str({});
        return s;
    }

    ManualClock& clock;
    ShoutTransport& transport;
    ClientEnv env;
    std::ostringstream out;
    std::ostringstream err;
};

}  // namespace aa::testing
