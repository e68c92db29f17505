#include "aa/core/error.hpp"
#include "aa/core/model.hpp"

namespace aa {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyShout: return "EmptyShout";
        case ErrorCode::TooLong: return "TooLong";
        case ErrorCode::InvalidText: return "InvalidText";
        case ErrorCode::InvalidNick: return "InvalidNick";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::MixedAuthors: return "MixedAuthors";
        case ErrorCode::DuplicateIdemKey: return "DuplicateIdemKey";
        case ErrorCode::DuplicateAssignment: return "DuplicateAssignment";
        case ErrorCode::AlreadyDecided: return "AlreadyDecided";
        case ErrorCode::UnknownDeveloper: return "UnknownDeveloper";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::UnknownToken: return "UnknownToken";
        case ErrorCode::InvalidRecord: return "InvalidRecord";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::CorruptJournal: return "CorruptJournal";
        case ErrorCode::NoEligibleValidator: return "NoEligibleValidator";
    }
    return "Unknown";
}

std::optional<NickName> NickName::parse(std::string_view raw) {
    if (raw.size() < 2 || raw.size() > 32) return std::nullopt;
    for (char c : raw) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return std::nullopt;
    }
    return NickName(std::string(raw));
}

NickName NickName::from(std::string_view raw) {
    auto nick = parse(raw);
    if (!nick) throw Error(ErrorCode::InvalidNick, "invalid nickname '" + std::string(raw) + "'");
    return *nick;
}

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::cli: return "cli";
        case Origin::bot: return "bot";
        case Origin::http: return "http";
        case Origin::ui: return "ui";
    }
    return "http";
}

std::optional<Origin> parse_origin(std::string_view text) {
    if (text == "cli") return Origin::cli;
    if (text == "bot") return Origin::bot;
    if (text == "http") return Origin::http;
    if (text == "ui") return Origin::ui;
    return std::nullopt;
}

std::string_view to_string(ValidationState state) {
    switch (state) {
        case ValidationState::pending: return "pending";
        case ValidationState::assigned: return "assigned";
        case ValidationState::valid: return "valid";
        case ValidationState::invalid: return "invalid";
    }
    return "pending";
}

TimeslotConfig::TimeslotConfig(Minutes timeslot, Minutes session_gap) : timeslot_(timeslot), session_gap_(session_gap) {
    if (timeslot < Minutes{1} || timeslot > Minutes{120}) {
        throw Error(ErrorCode::InvalidConfig, "timeslot must be within 1..120 minutes");
    }
    if (session_gap <= timeslot) {
        throw Error(ErrorCode::InvalidConfig, "session gap must exceed the timeslot");
    }
}

std::set<ChatAlias> Developer::chat_aliases() const {
    std::set<ChatAlias> out;
    for (const auto& [alias, _] : relay_token_hashes) out.insert(alias);
    return out;
}

}  // namespace aa
