#pragma once

#include "aa/client/queue.hpp"
#include "aa/client/transport.hpp"
#include "aa/core/model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace aa {

struct AliasTarget {
    NickName developer;
    std::string relay_token;
};

/// (network, chat nick) -> developer for one network. Nicks compare under IRC
/// case folding; no two nicks may map to the same developer.
class AliasMap {
public:
    explicit AliasMap(std::string network = "irc") : network_(std::move(network)) {}

    /// Throws Error(InvalidConfig) if the developer is already mapped from another nick.
    void add(std::string_view chat_nick, NickName developer, std::string relay_token);
    const AliasTarget* find(std::string_view chat_nick) const;
    const std::string& network() const noexcept { return network_; }
    std::size_t size() const noexcept { return by_nick_.size(); }

    /// {"network": "...", "aliases": {"<chat nick>": {"developer": "...", "relay_token": "..."}}}
    static AliasMap load(const std::filesystem::path& file);

private:
    std::string network_;
    std::map<std::string, AliasTarget> by_nick_;
};

struct Reply {
    std::string to;
    std::string text;
};

/// Protocol-independent relay logic: recognizes shout commands, queues them
/// under the sender's alias and pushes to the server with that alias's
/// relay credential.
class Relay {
public:
    Relay(AliasMap aliases, ClientQueue& queue, ShoutTransport& transport, const Clock& clock);

    void set_bot_nick(std::string nick) { bot_nick_ = std::move(nick); }
    const std::string& bot_nick() const noexcept { return bot_nick_; }

    /// `target` is the channel or, for a private message, the bot's own nick.
    /// Returns the reply to send (always to the sender), or nothing for unrelated traffic.
    std::optional<Reply> handle_message(const std::string& from_nick, const std::string& target, const std::string& text);

    /// Pushes whatever is queued. Returns the number still pending.
    std::size_t flush();
    bool has_pending() const { return queue_.depth() > 0; }

    /// Extracts the shout text from a command addressed to `bot_nick`, if it is one.
    static std::optional<std::string> command_text(std::string_view bot_nick, std::string_view target,
                                                   std::string_view text);

private:
    AliasMap aliases_;
    ClientQueue& queue_;
    ShoutTransport& transport_;
    const Clock& clock_;
    std::string bot_nick_ = "aabot";
};

}  // namespace aa
