#pragma once

#include "aa/util/time.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace aa {

using ShoutId = std::uint64_t;

inline constexpr std::size_t kMaxShoutChars = 512;
inline constexpr std::size_t kMaxCommentChars = 2000;
inline constexpr std::string_view kSessionStartMarker = "session: start";
inline constexpr std::string_view kSessionStopMarker = "session: stop";

/// Lowercase pseudonym, [a-z0-9_]{2,32}.
class NickName {
public:
    NickName() = default;
    static std::optional<NickName> parse(std::string_view raw);
    /// Throws Error(InvalidNick).
    static NickName from(std::string_view raw);

    const std::string& str() const noexcept { return value_; }
    auto operator<=>(const NickName&) const = default;

private:
    explicit NickName(std::string v) : value_(std::move(v)) {}
    std::string value_;
};

enum class Origin { cli, bot, http, ui };
std::string_view to_string(Origin origin);
std::optional<Origin> parse_origin(std::string_view text);

struct IdemKey {
    std::string client_id;
    std::uint64_t seq = 0;
    auto operator<=>(const IdemKey&) const = default;
};

struct Shout {
    ShoutId id = 0;
    NickName author;
    std::string text;
    Timestamp client_ts{};
    Timestamp server_ts{};
    Origin origin = Origin::http;
    IdemKey idem_key;
};

enum class ValidationState { pending, assigned, valid, invalid };
std::string_view to_string(ValidationState state);

struct Session {
    std::string session_id;
    NickName author;
    std::vector<ShoutId> shout_ids;
    Timestamp started_at{};
    Timestamp ended_at{};
    Seconds duration{0};
    std::optional<std::string> screencast_url;
    ValidationState validation_state = ValidationState::pending;
    /// The last shout is an explicit "session: stop" marker.
    bool stopped_explicitly = false;
};

class TimeslotConfig {
public:
    static constexpr Minutes kDefaultTimeslot{15};
    static constexpr Minutes kDefaultSessionGap{60};

    TimeslotConfig() = default;
    /// Throws Error(InvalidConfig) unless timeslot is in [1, 120] and session_gap > timeslot.
    TimeslotConfig(Minutes timeslot, Minutes session_gap);

    Minutes timeslot() const noexcept { return timeslot_; }
    Minutes session_gap() const noexcept { return session_gap_; }
    /// Outside the 5-15 minute band the methodology proposes. Accepted, but worth a warning.
    bool outside_proposed_band() const noexcept { return timeslot_ < Minutes{5} || timeslot_ > Minutes{15}; }

private:
    Minutes timeslot_ = kDefaultTimeslot;
    Minutes session_gap_ = kDefaultSessionGap;
};

struct ChatAlias {
    std::string network;
    std::string alias;
    auto operator<=>(const ChatAlias&) const = default;
};

struct Developer {
    NickName nick;
    std::string auth_token_hash;
    /// Relay credential per chat alias, so one alias can be revoked without touching CLI access.
    std::map<ChatAlias, std::string> relay_token_hashes;
    std::string notify_address;
    bool active = true;

    std::set<ChatAlias> chat_aliases() const;
};

struct SessionSummary {
    std::size_t shout_count = 0;
    Seconds duration{0};
    double mean_intershout_gap_s = 0.0;
    bool has_screencast = false;
};

}  // namespace aa
