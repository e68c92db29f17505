#include "aa/bot/relay.hpp"

#include "aa/bot/irc.hpp"
#include "aa/core/error.hpp"
#include "aa/core/session.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cctype>
#include <fstream>

namespace aa {

void AliasMap::add(std::string_view chat_nick, NickName developer, std::string relay_token) {
    const auto key = irc::fold(chat_nick);
    for (const auto& [nick, target] : by_nick_) {
        if (nick != key && target.developer == developer) {
            throw Error(ErrorCode::InvalidConfig,
                        "developer " + developer.str() + " is already mapped from " + nick + " on " + network_);
        }
    }
    by_nick_[key] = AliasTarget{std::move(developer), std::move(relay_token)};
}

const AliasTarget* AliasMap::find(std::string_view chat_nick) const {
    auto it = by_nick_.find(irc::fold(chat_nick));
    return it == by_nick_.end() ? nullptr : &it->second;
}

AliasMap AliasMap::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read alias map " + file.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("aliases") || !j["aliases"].is_object()) {
        throw Error(ErrorCode::InvalidConfig, file.string() + ": expected {\"network\":..., \"aliases\":{...}}");
    }
    AliasMap map(j.value("network", "irc"));
    for (const auto& [nick, entry] : j["aliases"].items()) {
        if (!entry.is_object() || !entry.contains("developer") || !entry.contains("relay_token")) {
            throw Error(ErrorCode::InvalidConfig, file.string() + ": alias " + nick + " needs developer and relay_token");
        }
        auto dev = NickName::parse(entry["developer"].get<std::string>());
        if (!dev) throw Error(ErrorCode::InvalidNick, file.string() + ": bad developer for alias " + nick);
        map.add(nick, *dev, entry["relay_token"].get<std::string>());
    }
    return map;
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
    }
    return true;
}

std::string_view skip_spaces(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

// "shout" followed by end of text or whitespace; returns the rest.
std::optional<std::string> after_keyword(std::string_view text) {
    constexpr std::string_view kKeyword = "shout";
    text = skip_spaces(text);
    if (text.size() < kKeyword.size() || !iequals(text.substr(0, kKeyword.size()), kKeyword)) return std::nullopt;
    text.remove_prefix(kKeyword.size());
    if (!text.empty() && text.front() != ' ' && text.front() != '\t') return std::nullopt;
    return std::string(skip_spaces(text));
}

// A relay credential the server no longer accepts will never work again,
// so a 401 here retires the entry instead of blocking the whole queue.
class RelayTransport : public ShoutTransport {
public:
    explicit RelayTransport(ShoutTransport& inner) : inner_(inner) {}
    PushResponse send(const PushRequest& request, const std::string& token) override {
        auto res = inner_.send(request, token);
        if (res.status == 401) res.outcome = PushResponse::Outcome::rejected;
        return res;
    }
    bool reachable() override { return inner_.reachable(); }

private:
    ShoutTransport& inner_;
};

}  // namespace

Relay::Relay(AliasMap aliases, ClientQueue& queue, ShoutTransport& transport, const Clock& clock)
    : aliases_(std::move(aliases)), queue_(queue), transport_(transport), clock_(clock) {}

std::optional<std::string> Relay::command_text(std::string_view bot_nick, std::string_view target, std::string_view text) {
    if (!irc::is_channel(target)) return after_keyword(text);
    text = skip_spaces(text);
    if (text.size() <= bot_nick.size() || irc::fold(text.substr(0, bot_nick.size())) != irc::fold(bot_nick)) {
        return std::nullopt;
    }
    text.remove_prefix(bot_nick.size());
    if (text.front() != ':' && text.front() != ',') return std::nullopt;
    text.remove_prefix(1);
    return after_keyword(text);
}

std::optional<Reply> Relay::handle_message(const std::string& from_nick, const std::string& target,
                                           const std::string& text) {
    const auto command = command_text(bot_nick_, target, text);
    if (!command) return std::nullopt;

    const auto* alias = aliases_.find(from_nick);
    if (alias == nullptr) {
        return Reply{from_nick, "sorry, " + from_nick + " is not linked to an AA developer, nothing was relayed"};
    }
    std::string normalized;
    try {
        normalized = normalize_shout_text(*command);
    } catch (const Error& e) {
        return Reply{from_nick, std::string("error: ") + std::string(to_string(e.code())) + ", nothing was relayed"};
    }

    const auto seq = queue_.enqueue(normalized, clock_.now(), irc::fold(from_nick)).seq;
    flush();
    const auto& entry = queue_.entries()[seq - 1];
    switch (entry.state) {
        case EntryState::pushed:
            return Reply{from_nick, "shout #" + std::to_string(entry.server_id.value_or(0)) + " recorded for " +
                                        alias->developer.str()};
        case EntryState::queued:
            return Reply{from_nick, "got it, the AA server is unreachable right now; will retry"};
        case EntryState::rejected:
            return Reply{from_nick, "error: " + entry.error.value_or("rejected by the server")};
    }
    return std::nullopt;
}

std::size_t Relay::flush() {
    for (const auto& entry : queue_.pending()) {
        if (aliases_.find(entry.on_behalf) == nullptr) {
            queue_.mark_rejected(entry.seq, "alias " + entry.on_behalf + " is no longer mapped");
        }
    }
    RelayTransport transport(transport_);
    const auto summary = push_queue(
        queue_, transport,
        [this](const QueueEntry& e) {
            const auto* alias = aliases_.find(e.on_behalf);
            return alias == nullptr ? std::string{} : alias->relay_token;
        },
        "bot");
    if (!summary.stopped_because.empty()) {
        spdlog::warn("relay push stopped with {} pending: {}", summary.remaining, summary.stopped_because);
    }
    return summary.remaining;
}

}  // namespace aa
