#include "aa/store/store.hpp"

#include "aa/core/error.hpp"
#include "aa/core/session.hpp"
#include "aa/util/crypto.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <mutex>

namespace aa {
namespace {

using nlohmann::json;

Timestamp ts_field(const json& j, const char* key) {
    auto parsed = parse_iso8601(j.at(key).get<std::string>());
    if (!parsed) throw Error(ErrorCode::InvalidRecord, std::string("bad timestamp in field ") + key);
    return *parsed;
}

NickName nick_field(const json& j, const char* key) {
    auto nick = NickName::parse(j.at(key).get<std::string>());
    if (!nick) throw Error(ErrorCode::InvalidRecord, std::string("bad nickname in field ") + key);
    return *nick;
}

json shout_to_json(const Shout& s) {
    return json{{"id", s.id},
                {"author", s.author.str()},
                {"text", s.text},
                {"client_ts", format_iso8601(s.client_ts)},
                {"server_ts", format_iso8601(s.server_ts)},
                {"origin", std::string(to_string(s.origin))},
                {"client_id", s.idem_key.client_id},
                {"client_seq", s.idem_key.seq}};
}

Shout shout_from_json(const json& j) {
    Shout s;
    s.id = j.at("id").get<ShoutId>();
    s.author = nick_field(j, "author");
    s.text = j.at("text").get<std::string>();
    s.client_ts = ts_field(j, "client_ts");
    s.server_ts = ts_field(j, "server_ts");
    auto origin = parse_origin(j.at("origin").get<std::string>());
    if (!origin) throw Error(ErrorCode::InvalidRecord, "bad shout origin");
    s.origin = *origin;
    s.idem_key = {j.at("client_id").get<std::string>(), j.at("client_seq").get<std::uint64_t>()};
    return s;
}

json developer_to_json(const Developer& d) {
    json relay = json::array();
    for (const auto& [alias, hash] : d.relay_token_hashes) {
        relay.push_back({{"network", alias.network}, {"alias", alias.alias}, {"token_hash", hash}});
    }
    return json{{"nick", d.nick.str()},
                {"auth_token_hash", d.auth_token_hash},
                {"relay", relay},
                {"notify", d.notify_address},
                {"active", d.active}};
}

Developer developer_from_json(const json& j) {
    Developer d;
    d.nick = nick_field(j, "nick");
    d.auth_token_hash = j.at("auth_token_hash").get<std::string>();
    for (const auto& r : j.at("relay")) {
        d.relay_token_hashes[{r.at("network").get<std::string>(), r.at("alias").get<std::string>()}] =
            r.at("token_hash").get<std::string>();
    }
    d.notify_address = j.at("notify").get<std::string>();
    d.active = j.at("active").get<bool>();
    return d;
}

json assignment_to_json(const Assignment& a) {
    json out{{"session_id", a.session_id},
             {"author", a.author.str()},
             {"validator", a.validator.str()},
             {"token_hash", a.token_hash},
             {"assigned_at", format_iso8601(a.assigned_at)}};
    if (a.verdict) out["verdict"] = std::string(to_string(*a.verdict));
    if (a.comment) out["comment"] = *a.comment;
    if (a.decided_at) out["decided_at"] = format_iso8601(*a.decided_at);
    return out;
}

std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

template <typename Fn>
auto guarded(const JournalRecord& record, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRecord,
                    std::string("malformed ") + std::string(to_string(record.kind)) + " payload: " + e.what());
    }
}

}  // namespace

std::string_view to_string(RecordKind kind) {
    switch (kind) {
        case RecordKind::shout: return "shout";
        case RecordKind::developer_upsert: return "developer_upsert";
        case RecordKind::screencast_attach: return "screencast_attach";
        case RecordKind::validation_assign: return "validation_assign";
        case RecordKind::validation_verdict: return "validation_verdict";
    }
    return "shout";
}

std::optional<RecordKind> parse_record_kind(std::string_view text) {
    for (auto kind : {RecordKind::shout, RecordKind::developer_upsert, RecordKind::screencast_attach,
                      RecordKind::validation_assign, RecordKind::validation_verdict}) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

std::string_view to_string(Verdict verdict) { return verdict == Verdict::valid ? "valid" : "invalid"; }

std::optional<Verdict> parse_verdict(std::string_view text) {
    if (text == "valid") return Verdict::valid;
    if (text == "invalid") return Verdict::invalid;
    return std::nullopt;
}

bool is_http_url(std::string_view url) {
    std::string_view rest;
    if (url.starts_with("http://")) {
        rest = url.substr(7);
    } else if (url.starts_with("https://")) {
        rest = url.substr(8);
    } else {
        return false;
    }
    const auto host_end = rest.find_first_of("/?#");
    const auto host = rest.substr(0, host_end);
    if (host.empty() || host.front() == ':') return false;
    return std::none_of(url.begin(), url.end(), [](char c) {
        return static_cast<unsigned char>(c) <= 0x20 || c == '"' || c == '<' || c == '>' || c == '\\';
    });
}

// ---------------------------------------------------------------------------

void StoreState::validate(const JournalRecord& record) const {
    const json& p = record.payload;
    guarded(record, [&] {
        switch (record.kind) {
            case RecordKind::shout: {
                const Shout s = shout_from_json(p);
                if (s.id != shouts.size() + 1) throw Error(ErrorCode::InvalidRecord, "shout ids must be consecutive");
                if (s.server_ts < last_server_ts) throw Error(ErrorCode::InvalidRecord, "server_ts went backwards");
                if (normalize_shout_text(s.text) != s.text) {
                    throw Error(ErrorCode::InvalidRecord, "shout text is not normalized");
                }
                if (idem.contains(s.idem_key)) {
                    throw Error(ErrorCode::DuplicateIdemKey, "idempotency key (" + s.idem_key.client_id + ", " +
                                                                 std::to_string(s.idem_key.seq) + ") already accepted");
                }
                break;
            }
            case RecordKind::developer_upsert: {
                const Developer d = developer_from_json(p);
                if (d.auth_token_hash.empty()) throw Error(ErrorCode::InvalidRecord, "developer needs a token");
                auto owned_by_other = [&](const std::string& hash) {
                    auto it = credentials.find(hash);
                    return it != credentials.end() && it->second.nick != d.nick;
                };
                if (owned_by_other(d.auth_token_hash)) throw Error(ErrorCode::InvalidRecord, "token already in use");
                for (const auto& [alias, hash] : d.relay_token_hashes) {
                    if (owned_by_other(hash) || hash == d.auth_token_hash) {
                        throw Error(ErrorCode::InvalidRecord, "relay token already in use");
                    }
                    for (const auto& [nick, other] : developers) {
                        if (nick != d.nick && other.relay_token_hashes.contains(alias)) {
                            throw Error(ErrorCode::InvalidRecord,
                                        "alias " + alias.network + "/" + alias.alias + " belongs to " + nick.str());
                        }
                    }
                }
                break;
            }
            case RecordKind::screencast_attach: {
                const auto sid = p.at("session_id").get<std::string>();
                const auto author = nick_field(p, "author");
                const auto url = p.at("url").get<std::string>();
                auto start = session_starts.find(sid);
                if (start == session_starts.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + sid);
                if (shouts[start->second - 1].author != author) {
                    throw Error(ErrorCode::InvalidRecord, "screencast author does not own the session");
                }
                if (!is_http_url(url)) throw Error(ErrorCode::InvalidRecord, "screencast url must be http(s)");
                break;
            }
            case RecordKind::validation_assign: {
                const auto sid = p.at("session_id").get<std::string>();
                const auto author = nick_field(p, "author");
                const auto validator = nick_field(p, "validator");
                const auto hash = p.at("token_hash").get<std::string>();
                ts_field(p, "assigned_at");
                auto start = session_starts.find(sid);
                if (start == session_starts.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + sid);
                if (shouts[start->second - 1].author != author) {
                    throw Error(ErrorCode::InvalidRecord, "assignment author does not own the session");
                }
                if (validator == author) throw Error(ErrorCode::InvalidRecord, "a developer cannot validate own session");
                if (!developers.contains(validator)) throw Error(ErrorCode::UnknownDeveloper, "unknown validator");
                if (assignments.contains(sid)) {
                    throw Error(ErrorCode::DuplicateAssignment, "session " + sid + " is already assigned");
                }
                if (hash.empty() || assignment_tokens.contains(hash)) {
                    throw Error(ErrorCode::InvalidRecord, "validation token already in use");
                }
                break;
            }
            case RecordKind::validation_verdict: {
                const auto hash = p.at("token_hash").get<std::string>();
                auto it = assignment_tokens.find(hash);
                if (it == assignment_tokens.end()) throw Error(ErrorCode::UnknownToken, "unknown validation token");
                if (assignments.at(it->second).verdict) {
                    throw Error(ErrorCode::AlreadyDecided, "session " + it->second + " already has a verdict");
                }
                if (!parse_verdict(p.at("verdict").get<std::string>())) {
                    throw Error(ErrorCode::InvalidRecord, "verdict must be valid or invalid");
                }
                if (p.contains("comment") && utf8_length(p.at("comment").get<std::string>()) > kMaxCommentChars) {
                    throw Error(ErrorCode::InvalidRecord, "comment exceeds 2000 characters");
                }
                ts_field(p, "decided_at");
                break;
            }
        }
        return 0;
    });
}

void StoreState::apply(const JournalRecord& record) {
    const json& p = record.payload;
    switch (record.kind) {
        case RecordKind::shout: {
            Shout s = shout_from_json(p);
            by_author[s.author].push_back(s.id);
            idem.emplace(s.idem_key, s.id);
            session_starts.emplace(session_id_for(s.author, s.id), s.id);
            last_server_ts = s.server_ts;
            shouts.push_back(std::move(s));
            break;
        }
        case RecordKind::developer_upsert: {
            Developer d = developer_from_json(p);
            if (auto old = developers.find(d.nick); old != developers.end()) {
                credentials.erase(old->second.auth_token_hash);
                for (const auto& [_, hash] : old->second.relay_token_hashes) credentials.erase(hash);
            }
            credentials[d.auth_token_hash] = Credential{d.nick, CredentialScope::cli, std::nullopt};
            for (const auto& [alias, hash] : d.relay_token_hashes) {
                credentials[hash] = Credential{d.nick, CredentialScope::relay, alias};
            }
            developers[d.nick] = std::move(d);
            break;
        }
        case RecordKind::screencast_attach:
            screencasts[p.at("session_id").get<std::string>()] = p.at("url").get<std::string>();
            break;
        case RecordKind::validation_assign: {
            Assignment a;
            a.session_id = p.at("session_id").get<std::string>();
            a.author = nick_field(p, "author");
            a.validator = nick_field(p, "validator");
            a.token_hash = p.at("token_hash").get<std::string>();
            a.assigned_at = ts_field(p, "assigned_at");
            assignment_tokens[a.token_hash] = a.session_id;
            assignments[a.session_id] = std::move(a);
            break;
        }
        case RecordKind::validation_verdict: {
            auto& a = assignments.at(assignment_tokens.at(p.at("token_hash").get<std::string>()));
            a.verdict = parse_verdict(p.at("verdict").get<std::string>());
            if (p.contains("comment")) a.comment = p.at("comment").get<std::string>();
            a.decided_at = ts_field(p, "decided_at");
            break;
        }
    }
    last_seq = record.seq;
}

std::string StoreState::dump() const {
    json out;
    out["last_seq"] = last_seq;
    out["last_server_ts"] = format_iso8601(last_server_ts);
    json js = json::array();
    for (const auto& s : shouts) js.push_back(shout_to_json(s));
    out["shouts"] = std::move(js);
    json authors = json::object();
    for (const auto& [nick, ids] : by_author) authors[nick.str()] = ids;
    out["by_author"] = std::move(authors);
    json keys = json::array();
    for (const auto& [key, id] : idem) keys.push_back({key.client_id, key.seq, id});
    out["idem"] = std::move(keys);
    out["session_starts"] = session_starts;
    json devs = json::object();
    for (const auto& [nick, d] : developers) devs[nick.str()] = developer_to_json(d);
    out["developers"] = std::move(devs);
    json creds = json::object();
    for (const auto& [hash, c] : credentials) {
        creds[hash] = {{"nick", c.nick.str()},
                       {"scope", c.scope == CredentialScope::cli ? "cli" : "relay"},
                       {"alias", c.alias ? c.alias->network + "/" + c.alias->alias : ""}};
    }
    out["credentials"] = std::move(creds);
    out["screencasts"] = screencasts;
    json asg = json::object();
    for (const auto& [sid, a] : assignments) asg[sid] = assignment_to_json(a);
    out["assignments"] = std::move(asg);
    out["assignment_tokens"] = assignment_tokens;
    return out.dump();
}

// ---------------------------------------------------------------------------

namespace {

JournalRecord to_record(const JournalLine& line) {
    auto kind = parse_record_kind(line.kind);
    if (!kind) throw Error(ErrorCode::InvalidRecord, "unknown record kind '" + line.kind + "'");
    return JournalRecord{*kind, line.data, line.written_at, line.seq};
}

StoreState fold(const std::vector<JournalLine>& lines) {
    StoreState state;
    for (const auto& line : lines) {
        try {
            const JournalRecord record = to_record(line);
            state.validate(record);
            state.apply(record);
        } catch (const Error& e) {
            throw CorruptJournal(state.last_seq,
                                 "journal record seq " + std::to_string(line.seq) + " rejected: " + e.what(), false);
        }
    }
    return state;
}

}  // namespace

StoreState Store::rebuild(const std::filesystem::path& journal_path) {
    const auto read = read_journal(journal_path);
    StoreState state = fold(read.lines);
    if (read.torn_bytes > 0) {
        throw CorruptJournal(state.last_seq,
                             "torn final record after seq " + std::to_string(state.last_seq) + " (" +
                                 std::to_string(read.torn_bytes) + " bytes)",
                             true);
    }
    return state;
}

Store::Store(const Clock& clock, StoreOptions options) : clock_(clock), options_(std::move(options)) {
    if (options_.journal_path.empty()) return;

    const auto read = read_journal(options_.journal_path);
    state_ = fold(read.lines);
    if (read.torn_bytes > 0) {
        if (!options_.recover) {
            throw CorruptJournal(state_.last_seq,
                                 "torn final record after seq " + std::to_string(state_.last_seq) + " (" +
                                     std::to_string(read.torn_bytes) + " bytes)",
                                 true);
        }
        spdlog::warn("journal {}: dropping {} bytes of a torn record after seq {}", options_.journal_path.string(),
                     read.torn_bytes, state_.last_seq);
        recovered_bytes_ = read.torn_bytes;
    }
    writer_.emplace(options_.journal_path, options_.fsync);
    if (read.torn_bytes > 0) writer_->truncate(read.valid_bytes);
}

std::uint64_t Store::append_locked(JournalRecord& record) {
    record.seq = state_.last_seq + 1;
    record.written_at = clock_.now();
    state_.validate(record);
    if (writer_) {
        writer_->append(JournalLine{record.seq, std::string(to_string(record.kind)), record.written_at, record.payload});
    }
    state_.apply(record);
    return record.seq;
}

std::uint64_t Store::append(JournalRecord record) {
    std::unique_lock lock(mutex_);
    return append_locked(record);
}

Shout Store::append_shout(const ShoutDraft& draft) {
    std::unique_lock lock(mutex_);
    Shout s;
    s.id = state_.shouts.size() + 1;
    s.author = draft.author;
    s.text = draft.text;
    s.client_ts = draft.client_ts;
    s.server_ts = std::max(clock_.now(), state_.last_server_ts);
    s.origin = draft.origin;
    s.idem_key = draft.idem_key;
    JournalRecord record{RecordKind::shout, shout_to_json(s)};
    append_locked(record);
    return s;
}

void Store::upsert_developer(const Developer& dev) {
    std::unique_lock lock(mutex_);
    JournalRecord record{RecordKind::developer_upsert, developer_to_json(dev)};
    append_locked(record);
}

void Store::attach_screencast(const std::string& session_id, const NickName& author, const std::string& url) {
    std::unique_lock lock(mutex_);
    JournalRecord record{RecordKind::screencast_attach,
                         json{{"session_id", session_id}, {"author", author.str()}, {"url", url}}};
    append_locked(record);
}

Assignment Store::record_assignment(const std::string& session_id, const NickName& author, const NickName& validator,
                                    const std::string& token_hash) {
    std::unique_lock lock(mutex_);
    Assignment a;
    a.session_id = session_id;
    a.author = author;
    a.validator = validator;
    a.token_hash = token_hash;
    a.assigned_at = clock_.now();
    JournalRecord record{RecordKind::validation_assign, assignment_to_json(a)};
    append_locked(record);
    return a;
}

Assignment Store::record_verdict(const std::string& token_hash, Verdict verdict, std::optional<std::string> comment) {
    std::unique_lock lock(mutex_);
    json payload{{"token_hash", token_hash}, {"verdict", std::string(to_string(verdict))},
                 {"decided_at", format_iso8601(clock_.now())}};
    if (auto it = state_.assignment_tokens.find(token_hash); it != state_.assignment_tokens.end()) {
        payload["session_id"] = it->second;
    }
    if (comment) payload["comment"] = *comment;
    JournalRecord record{RecordKind::validation_verdict, std::move(payload)};
    append_locked(record);
    return state_.assignments.at(state_.assignment_tokens.at(token_hash));
}

std::vector<Shout> Store::query_shouts(const ShoutFilter& filter) const {
    std::shared_lock lock(mutex_);
    std::vector<Shout> out;
    auto matches = [&](const Shout& s) {
        if (filter.since && s.client_ts < *filter.since) return false;
        if (filter.until && s.client_ts > *filter.until) return false;
        if (filter.before_id && s.id >= *filter.before_id) return false;
        if (filter.after_id && s.id <= *filter.after_id) return false;
        return true;
    };
    auto full = [&] { return filter.limit && out.size() >= *filter.limit; };
    auto visit = [&](auto begin, auto end, auto&& get) {
        for (auto it = begin; it != end && !full(); ++it) {
            const Shout& s = get(*it);
            if (matches(s)) out.push_back(s);
        }
    };

    // ids follow (server_ts, id) order, so walking ids is walking receipt order
    if (filter.author) {
        auto it = state_.by_author.find(*filter.author);
        if (it == state_.by_author.end()) return out;
        const auto& ids = it->second;
        auto get = [&](ShoutId id) -> const Shout& { return state_.shouts[id - 1]; };
        if (filter.order == Order::newest_first) {
            visit(ids.rbegin(), ids.rend(), get);
        } else {
            visit(ids.begin(), ids.end(), get);
        }
    } else {
        auto get = [](const Shout& s) -> const Shout& { return s; };
        if (filter.order == Order::newest_first) {
            visit(state_.shouts.rbegin(), state_.shouts.rend(), get);
        } else {
            visit(state_.shouts.begin(), state_.shouts.end(), get);
        }
    }
    return out;
}

std::optional<Shout> Store::shout(ShoutId id) const {
    std::shared_lock lock(mutex_);
    if (id == 0 || id > state_.shouts.size()) return std::nullopt;
    return state_.shouts[id - 1];
}

std::optional<ShoutId> Store::find_idem(const IdemKey& key) const {
    std::shared_lock lock(mutex_);
    auto it = state_.idem.find(key);
    if (it == state_.idem.end()) return std::nullopt;
    return it->second;
}

std::optional<ShoutId> Store::session_start(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.session_starts.find(session_id);
    if (it == state_.session_starts.end()) return std::nullopt;
    return it->second;
}

std::optional<Developer> Store::developer(const NickName& nick) const {
    std::shared_lock lock(mutex_);
    auto it = state_.developers.find(nick);
    if (it == state_.developers.end()) return std::nullopt;
    return it->second;
}

std::vector<Developer> Store::developers() const {
    std::shared_lock lock(mutex_);
    std::vector<Developer> out;
    for (const auto& [_, d] : state_.developers) out.push_back(d);
    return out;
}

std::optional<Credential> Store::resolve_token(const std::string& token) const {
    if (token.empty()) return std::nullopt;
    const auto hash = sha256_hex(token);
    std::shared_lock lock(mutex_);
    auto it = state_.credentials.find(hash);
    if (it == state_.credentials.end()) return std::nullopt;
    const auto dev = state_.developers.find(it->second.nick);
    if (dev == state_.developers.end() || !dev->second.active) return std::nullopt;
    return it->second;
}

std::optional<std::string> Store::screencast(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.screencasts.find(session_id);
    if (it == state_.screencasts.end()) return std::nullopt;
    return it->second;
}

std::optional<Assignment> Store::assignment_for_session(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.assignments.find(session_id);
    if (it == state_.assignments.end()) return std::nullopt;
    return it->second;
}

std::optional<Assignment> Store::assignment_by_token(const std::string& token) const {
    const auto hash = sha256_hex(token);
    std::shared_lock lock(mutex_);
    auto it = state_.assignment_tokens.find(hash);
    if (it == state_.assignment_tokens.end()) return std::nullopt;
    return state_.assignments.at(it->second);
}

std::vector<Assignment> Store::assignments() const {
    std::shared_lock lock(mutex_);
    std::vector<Assignment> out;
    for (const auto& [_, a] : state_.assignments) out.push_back(a);
    return out;
}

std::vector<NickName> Store::authors() const {
    std::shared_lock lock(mutex_);
    std::vector<NickName> out;
    for (const auto& [nick, _] : state_.by_author) out.push_back(nick);
    return out;
}

std::size_t Store::author_shout_count(const NickName& author) const {
    std::shared_lock lock(mutex_);
    auto it = state_.by_author.find(author);
    return it == state_.by_author.end() ? 0 : it->second.size();
}

std::uint64_t Store::last_seq() const {
    std::shared_lock lock(mutex_);
    return state_.last_seq;
}

std::size_t Store::shout_count() const {
    std::shared_lock lock(mutex_);
    return state_.shouts.size();
}

std::string Store::dump_state() const {
    std::shared_lock lock(mutex_);
    return state_.dump();
}

}  // namespace aa
