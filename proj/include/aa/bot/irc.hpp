#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aa::irc {

/// One IRC protocol line: [":" prefix " "] command {" " param} [" :" trailing].
struct Message {
    std::string prefix;
    std::string command;
    std::vector<std::string> params;

    /// Nick part of a "nick!user@host" prefix.
    std::string nick() const;
};

std::optional<Message> parse(std::string_view line);
/// Serializes with CRLF; the last param becomes a trailing param when needed.
std::string format(const Message& message);

/// RFC 1459 case folding: ASCII lowercase plus []\~ -> {}|^.
std::string fold(std::string_view nick);

bool is_channel(std::string_view target);

}  // namespace aa::irc
