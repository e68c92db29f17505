#include "aa/bot/irc.hpp"

namespace aa::irc {

std::string Message::nick() const {
    const auto bang = prefix.find('!');
    return prefix.substr(0, bang);
}

std::optional<Message> parse(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
    Message m;
    auto next_token = [&line]() {
        const auto space = line.find(' ');
        std::string token(line.substr(0, space));
        line = space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        return token;
    };
    if (line.starts_with(':')) {
        line.remove_prefix(1);
        m.prefix = next_token();
    }
    m.command = next_token();
    if (m.command.empty()) return std::nullopt;
    while (!line.empty()) {
        if (line.front() == ':') {
            m.params.emplace_back(line.substr(1));
            break;
        }
        m.params.push_back(next_token());
    }
    return m;
}

std::string format(const Message& message) {
    std::string out;
    if (!message.prefix.empty()) out += ":" + message.prefix + " ";
    out += message.command;
    for (std::size_t i = 0; i < message.params.size(); ++i) {
        const auto& p = message.params[i];
        const bool last = i + 1 == message.params.size();
        out += ' ';
        if (last && (p.empty() || p.find(' ') != std::string::npos || p.front() == ':')) out += ':';
        out += p;
    }
    return out + "\r\n";
}

std::string fold(std::string_view nick) {
    std::string out(nick);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        else if (c == '[') c = '{';
        else if (c == ']') c = '}';
        else if (c == '\\') c = '|';
        else if (c == '~') c = '^';
    }
    return out;
}

bool is_channel(std::string_view target) { return !target.empty() && (target.front() == '#' || target.front() == '&'); }

}  // namespace aa::irc
