#include "aa/bot/bot.hpp"

#include "aa/bot/irc.hpp"
#include "aa/net/tcp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace aa {

std::chrono::milliseconds reconnect_delay(unsigned attempt, std::chrono::milliseconds initial,
                                          std::chrono::milliseconds cap) {
    auto delay = initial;
    for (unsigned i = 0; i < attempt && delay < cap; ++i) delay *= 2;
    return std::min(delay, cap);
}

IrcBot::IrcBot(BotConfig config, Relay& relay) : config_(std::move(config)), relay_(relay) {}

void IrcBot::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
}

bool IrcBot::wait_backoff(std::chrono::milliseconds delay) {
    if (on_backoff) on_backoff(delay);
    std::unique_lock lock(mutex_);
    return !cv_.wait_for(lock, delay, [this] { return stopping_.load(); });
}

void IrcBot::run() {
    unsigned attempt = 0;
    while (!stopping_) {
        if (serve_connection()) attempt = 0;
        if (stopping_) break;
        const auto delay = reconnect_delay(attempt++, config_.initial_backoff, config_.max_backoff);
        spdlog::info("irc: reconnecting to {}:{} in {} ms", config_.host, config_.port, delay.count());
        if (!wait_backoff(delay)) break;
    }
    relay_.flush();
}

bool IrcBot::serve_connection() {
    auto stream = net::TcpStream::connect(config_.host, config_.port, config_.connect_timeout);
    if (!stream.valid()) {
        spdlog::warn("irc: cannot connect to {}:{}", config_.host, config_.port);
        return false;
    }
    ++connections_;
    auto send = [&stream](irc::Message m) { return stream.send_all(irc::format(m)); };

    std::string nick = config_.nick;
    send({{}, "NICK", {nick}});
    send({{}, "USER", {config_.user, "0", "*", config_.realname}});

    bool registered = false;
    while (!stopping_) {
        auto read = stream.read_line(config_.tick);
        if (read.status == net::ReadStatus::closed) {
            spdlog::warn("irc: connection closed");
            return registered;
        }
        if (read.status == net::ReadStatus::timeout) {
            if (relay_.has_pending()) relay_.flush();
            continue;
        }
        auto msg = irc::parse(read.line);
        if (!msg) continue;
        if (msg->command == "PING") {
            send({{}, "PONG", msg->params});
        } else if (msg->command == "001") {
            registered = true;
            if (!msg->params.empty()) nick = msg->params[0];
            relay_.set_bot_nick(nick);
            for (const auto& channel : config_.channels) send({{}, "JOIN", {channel}});
            spdlog::info("irc: registered as {}", nick);
        } else if (msg->command == "433" && !registered) {
            nick += "_";
            send({{}, "NICK", {nick}});
        } else if (msg->command == "PRIVMSG" && msg->params.size() >= 2) {
            const auto& text = msg->params[1];
            if (text.starts_with('\x01')) continue;  // CTCP
            if (auto reply = relay_.handle_message(msg->nick(), msg->params[0], text)) {
                send({{}, "PRIVMSG", {reply->to, reply->text}});
            }
        }
    }
    relay_.flush();
    send({{}, "QUIT", {"shutting down"}});
    return registered;
}

}  // namespace aa
