#include "aa/api/service.hpp"

#include "aa/analytics/stats.hpp"
#include "aa/core/error.hpp"
#include "aa/core/session.hpp"
#include "aa/util/crypto.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

namespace aa {
namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    reply(res, status, json{{"error", code}, {"message", message}});
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyShout:
        case ErrorCode::TooLong:
        case ErrorCode::InvalidText:
        case ErrorCode::InvalidRecord: return 422;
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownToken:
        case ErrorCode::UnknownDeveloper: return 404;
        case ErrorCode::AlreadyDecided:
        case ErrorCode::DuplicateAssignment:
        case ErrorCode::DuplicateIdemKey: return 409;
        case ErrorCode::InvalidNick:
        case ErrorCode::InvalidConfig: return 400;
        default: return 500;
    }
}

void fail(httplib::Response& res, const Error& e) { fail(res, status_for(e.code()), to_string(e.code()), e.what()); }

std::optional<json> parse_body(const httplib::Request& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return std::nullopt;
    return body;
}

std::string bearer_token(const httplib::Request& req, const json* body) {
    if (body != nullptr) {
        if (auto it = body->find("auth_token"); it != body->end() && it->is_string()) return it->get<std::string>();
    }
    const auto header = req.get_header_value("Authorization");
    if (header.starts_with("Bearer ")) return header.substr(7);
    if (req.has_param("auth_token")) return req.get_param_value("auth_token");
    return {};
}

std::optional<std::size_t> parse_size(const std::string& text) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

json time_or_null(const std::optional<Timestamp>& ts) { return ts ? json(format_iso8601(*ts)) : json(nullptr); }

// Optional ISO/date query parameter; sets `bad` when present but unparsable.
std::optional<Timestamp> time_param(const httplib::Request& req, const char* name, bool end_of_day, bool& bad) {
    if (!req.has_param(name) || req.get_param_value(name).empty()) return std::nullopt;
    auto ts = parse_time_bound(req.get_param_value(name), end_of_day);
    if (!ts) bad = true;
    return ts;
}

}  // namespace

std::optional<Timestamp> parse_time_bound(std::string_view text, bool end_of_day) {
    if (text.size() == 10) {
        auto day = parse_iso8601(std::string(text) + "T00:00:00Z");
        if (!day) return std::nullopt;
        return end_of_day ? *day + Seconds{86399} : *day;
    }
    return parse_iso8601(text);
}

std::string encode_cursor(ShoutId last_id) { return base64url_encode("before:" + std::to_string(last_id)); }

std::optional<ShoutId> decode_cursor(std::string_view cursor) {
    auto raw = base64url_decode(cursor);
    if (!raw || !raw->starts_with("before:")) return std::nullopt;
    auto id = parse_size(raw->substr(7));
    if (!id || *id == 0) return std::nullopt;
    return static_cast<ShoutId>(*id);
}

ApiService::ApiService(Store& store, SessionCatalog& catalog, ValidationEngine& engine, const Clock& clock,
                       ServiceOptions options)
    : store_(store), catalog_(catalog), engine_(engine), clock_(clock), options_(std::move(options)),
      limiter_(options_.rate_limit_per_minute) {}

void ApiService::shutdown() {
    stopping_ = true;
    feed_cv_.notify_all();
}

void ApiService::notify_feed() {
    { std::lock_guard lock(feed_mutex_); }
    feed_cv_.notify_all();
}

json ApiService::shout_json(const Shout& s) {
    const auto sid = catalog_.session_of(s);
    return json{{"id", s.id},
                {"author", s.author.str()},
                {"text", s.text},
                {"client_ts", format_iso8601(s.client_ts)},
                {"server_ts", format_iso8601(s.server_ts)},
                {"origin", std::string(to_string(s.origin))},
                {"session_id", sid ? json(*sid) : json(nullptr)}};
}

json ApiService::session_json(const Session& s, bool with_shouts) {
    const auto summary = summarize_session(s);
    json out{{"session_id", s.session_id},
             {"author", s.author.str()},
             {"started_at", format_iso8601(s.started_at)},
             {"ended_at", format_iso8601(s.ended_at)},
             {"duration_s", s.duration.count()},
             {"shout_count", summary.shout_count},
             {"mean_intershout_gap_s", summary.mean_intershout_gap_s},
             {"screencast_url", s.screencast_url ? json(*s.screencast_url) : json(nullptr)},
             {"validation_state", std::string(to_string(s.validation_state))}};
    if (!with_shouts) return out;

    json shouts = json::array();
    for (auto id : s.shout_ids) {
        if (auto shout = store_.shout(id)) {
            shouts.push_back({{"id", shout->id},
                              {"text", shout->text},
                              {"client_ts", format_iso8601(shout->client_ts)},
                              {"server_ts", format_iso8601(shout->server_ts)}});
        }
    }
    out["shouts"] = std::move(shouts);

    auto assignment = store_.assignment_for_session(s.session_id);
    if (!assignment && !s.shout_ids.empty()) {
        if (auto first = store_.shout(s.shout_ids.front())) {
            if (auto canonical = catalog_.session_of(*first)) assignment = store_.assignment_for_session(*canonical);
        }
    }
    if (assignment) {
        out["validation"] = {{"validator", assignment->validator.str()},
                             {"assigned_at", format_iso8601(assignment->assigned_at)},
                             {"verdict", assignment->verdict ? json(std::string(to_string(*assignment->verdict)))
                                                             : json(nullptr)},
                             {"comment", assignment->comment ? json(*assignment->comment) : json(nullptr)},
                             {"decided_at", time_or_null(assignment->decided_at)}};
    } else {
        out["validation"] = nullptr;
    }
    return out;
}

void ApiService::mount(httplib::Server& server) {
    // --- ingestion -------------------------------------------------------
    server.Post("/api/shouts", [this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body) return fail(res, 400, "MalformedBody", "request body must be a JSON object");
        const auto cred = store_.resolve_token(bearer_token(req, &*body));
        if (!cred) return fail(res, 401, "Unauthorized", "unknown or revoked token");

        const json& b = *body;
        if (!b.contains("text") || !b["text"].is_string() || !b.contains("client_ts") || !b["client_ts"].is_string() ||
            !b.contains("client_id") || !b["client_id"].is_string() || b["client_id"].get<std::string>().empty() ||
            !b.contains("seq") || !b["seq"].is_number_unsigned()) {
            return fail(res, 400, "MalformedBody", "expected text, client_ts, client_id and a non-negative seq");
        }
        const auto client_ts = parse_iso8601(b["client_ts"].get<std::string>());
        if (!client_ts) return fail(res, 400, "MalformedBody", "client_ts must be ISO-8601 UTC");
        const IdemKey key{b["client_id"].get<std::string>(), b["seq"].get<std::uint64_t>()};

        auto duplicate = [&](ShoutId id) {
            const auto original = store_.shout(id);
            if (original->author != cred->nick) {
                return fail(res, 409, "IdempotencyConflict", "idempotency key belongs to another developer");
            }
            reply(res, 200, json{{"id", original->id}, {"server_ts", format_iso8601(original->server_ts)},
                                 {"accepted", false}});
        };
        if (auto existing = store_.find_idem(key)) return duplicate(*existing);

        ShoutDraft draft;
        draft.author = cred->nick;
        draft.client_ts = *client_ts;
        draft.idem_key = key;
        if (cred->scope == CredentialScope::relay) {
            draft.origin = Origin::bot;
        } else if (b.contains("origin") && b["origin"].is_string()) {
            draft.origin = parse_origin(b["origin"].get<std::string>()).value_or(Origin::http);
            if (draft.origin == Origin::bot) draft.origin = Origin::http;
        }
        try {
            draft.text = normalize_shout_text(b["text"].get<std::string>());
        } catch (const Error& e) {
            return fail(res, e);
        }
        const auto now = clock_.now();
        if (*client_ts > now + options_.max_future_skew) {
            return fail(res, 422, "ClientTimeInFuture", "client_ts is more than 24h ahead of the server clock");
        }
        if (!limiter_.allow(cred->nick, now)) {
            return fail(res, 429, "RateLimited", "too many shouts in the last minute");
        }
        try {
            const Shout s = store_.append_shout(draft);
            notify_feed();
            reply(res, 201, json{{"id", s.id}, {"server_ts", format_iso8601(s.server_ts)}, {"accepted", true}});
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DuplicateIdemKey) {
                if (auto existing = store_.find_idem(key)) return duplicate(*existing);
            }
            spdlog::error("append failed: {}", e.what());
            fail(res, e);
        }
    });

    // --- feed ------------------------------------------------------------
    server.Get("/api/feed", [this](const httplib::Request& req, httplib::Response& res) {
        ShoutFilter filter;
        std::size_t limit = options_.default_feed_limit;
        if (req.has_param("limit")) {
            auto parsed = parse_size(req.get_param_value("limit"));
            if (!parsed || *parsed < 1 || *parsed > options_.max_feed_limit) {
                return fail(res, 400, "BadLimit", "limit must be within 1.." + std::to_string(options_.max_feed_limit));
            }
            limit = *parsed;
        }
        if (req.has_param("author") && !req.get_param_value("author").empty()) {
            auto nick = NickName::parse(req.get_param_value("author"));
            if (!nick) return fail(res, 400, "BadAuthor", "author is not a valid nickname");
            filter.author = *nick;
        }
        bool bad = false;
        filter.since = time_param(req, "since", false, bad);
        if (bad) return fail(res, 400, "BadTime", "since must be ISO-8601");
        if (req.has_param("cursor") && !req.get_param_value("cursor").empty()) {
            auto before = decode_cursor(req.get_param_value("cursor"));
            if (!before) return fail(res, 400, "BadCursor", "cursor is not valid");
            filter.before_id = *before;
        }
        filter.limit = limit + 1;
        auto shouts = store_.query_shouts(filter);
        const bool more = shouts.size() > limit;
        if (more) shouts.resize(limit);

        json entries = json::array();
        for (const auto& s : shouts) entries.push_back(shout_json(s));
        json page{{"entries", std::move(entries)}, {"next_cursor", nullptr}};
        if (more) page["next_cursor"] = encode_cursor(shouts.back().id);
        reply(res, 200, page);
    });

    server.Get("/api/feed/stream", [this](const httplib::Request& req, httplib::Response& res) {
        auto last = std::make_shared<ShoutId>(store_.shout_count());
        if (auto id = parse_size(req.get_header_value("Last-Event-ID"))) *last = std::min<ShoutId>(*id, *last);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, last](std::size_t, httplib::DataSink& sink) {
            {
                std::unique_lock lock(feed_mutex_);
                feed_cv_.wait_for(lock, options_.stream_keepalive,
                                  [&] { return stopping_.load() || store_.shout_count() > *last; });
            }
            if (stopping_) {
                sink.done();
                return false;
            }
            ShoutFilter filter;
            filter.after_id = *last;
            filter.order = Order::oldest_first;
            filter.limit = 100;
            const auto fresh = store_.query_shouts(filter);
            if (fresh.empty()) return sink.write(": keepalive\n\n", 13);
            for (const auto& s : fresh) {
                const auto event = "id: " + std::to_string(s.id) + "\nevent: shout\ndata: " + shout_json(s).dump() + "\n\n";
                if (!sink.write(event.data(), event.size())) return false;
                *last = s.id;
            }
            return true;
        });
    });

    // --- sessions --------------------------------------------------------
    server.Get("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        bool bad = false;
        const auto from = time_param(req, "from", false, bad);
        const auto to = time_param(req, "to", true, bad);
        if (bad) return fail(res, 400, "BadTime", "from/to must be ISO-8601 or YYYY-MM-DD");
        if (from && to && *from > *to) return fail(res, 400, "BadWindow", "from is after to");

        std::vector<NickName> authors;
        if (req.has_param("author") && !req.get_param_value("author").empty()) {
            auto nick = NickName::parse(req.get_param_value("author"));
            if (!nick) return fail(res, 400, "BadAuthor", "author is not a valid nickname");
            authors.push_back(*nick);
        } else {
            authors = store_.authors();
        }
        std::vector<Session> sessions;
        for (const auto& author : authors) {
            auto part = (from || to) ? catalog_.window(author, from, to) : catalog_.canonical(author);
            sessions.insert(sessions.end(), part.begin(), part.end());
        }
        std::stable_sort(sessions.begin(), sessions.end(),
                         [](const Session& a, const Session& b) { return a.started_at < b.started_at; });
        json out = json::array();
        for (const auto& s : sessions) out.push_back(session_json(s, false));
        reply(res, 200, out);
    });

    server.Get(R"(/api/sessions/([A-Za-z0-9]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto session = catalog_.find(req.matches[1]);
        if (!session) return fail(res, 404, "UnknownSession", "no such session");
        reply(res, 200, session_json(*session, true));
    });

    server.Post(R"(/api/sessions/([A-Za-z0-9]+)/screencast)", [this](const httplib::Request& req,
                                                                      httplib::Response& res) {
        auto body = parse_body(req);
        if (!body) return fail(res, 400, "MalformedBody", "request body must be a JSON object");
        const auto cred = store_.resolve_token(bearer_token(req, &*body));
        if (!cred) return fail(res, 401, "Unauthorized", "unknown or revoked token");
        const std::string sid = req.matches[1];
        auto session = catalog_.find(sid);
        if (!session) return fail(res, 404, "UnknownSession", "no such session");
        if (session->author != cred->nick) return fail(res, 403, "Forbidden", "only the session author may attach");
        if (!body->contains("url") || !(*body)["url"].is_string() || !is_http_url((*body)["url"].get<std::string>())) {
            return fail(res, 422, "InvalidUrl", "url must be an http(s) URL");
        }
        try {
            store_.attach_screencast(sid, cred->nick, (*body)["url"].get<std::string>());
        } catch (const Error& e) {
            return fail(res, e);
        }
        reply(res, 200, session_json(*catalog_.find(sid), true));
    });

    // --- validation ------------------------------------------------------
    server.Get("/api/validations/pending", [this](const httplib::Request& req, httplib::Response& res) {
        const auto cred = store_.resolve_token(bearer_token(req, nullptr));
        if (!cred) return fail(res, 401, "Unauthorized", "unknown or revoked token");
        json out = json::array();
        for (const auto& a : engine_.pending_for(cred->nick)) {
            out.push_back({{"session_id", a.session_id},
                           {"author", a.author.str()},
                           {"assigned_at", format_iso8601(a.assigned_at)}});
        }
        reply(res, 200, out);
    });

    server.Get(R"(/api/validations/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto assignment = store_.assignment_by_token(req.matches[1]);
        if (!assignment) return fail(res, 404, "UnknownToken", "no such validation token");
        auto session = catalog_.find(assignment->session_id);
        if (!session) return fail(res, 404, "UnknownSession", "session not found");
        json out = session_json(*session, true);
        out["verdict"] = assignment->verdict ? json(std::string(to_string(*assignment->verdict))) : json(nullptr);
        reply(res, 200, out);
    });

    server.Post(R"(/api/validations/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string token = req.matches[1];
        auto body = parse_body(req);
        if (!body) return fail(res, 400, "MalformedBody", "request body must be a JSON object");
        const auto assignment = store_.assignment_by_token(token);
        if (!assignment) return fail(res, 404, "UnknownToken", "no such validation token");
        if (!body->contains("verdict") || !(*body)["verdict"].is_string() ||
            !parse_verdict((*body)["verdict"].get<std::string>())) {
            return fail(res, 422, "InvalidVerdict", "verdict must be 'valid' or 'invalid'");
        }
        if (assignment->verdict) {
            return fail(res, 409, "AlreadyDecided",
                        "already decided: " + std::string(to_string(*assignment->verdict)));
        }
        std::optional<std::string> comment;
        if (body->contains("comment") && !(*body)["comment"].is_null()) {
            if (!(*body)["comment"].is_string()) return fail(res, 422, "InvalidComment", "comment must be a string");
            comment = (*body)["comment"].get<std::string>();
        }
        try {
            const auto decided = engine_.record_verdict(token, (*body)["verdict"].get<std::string>(), comment);
            reply(res, 200, json{{"session_id", decided.session_id},
                                 {"validator", decided.validator.str()},
                                 {"verdict", std::string(to_string(*decided.verdict))},
                                 {"comment", decided.comment ? json(*decided.comment) : json(nullptr)},
                                 {"decided_at", time_or_null(decided.decided_at)}});
        } catch (const Error& e) {
            fail(res, e);
        }
    });

    // --- analytics -------------------------------------------------------
    server.Get(R"(/api/stats/developer/([a-z0-9_]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto nick = NickName::parse(req.matches[1].str());
        if (!nick) return fail(res, 400, "BadAuthor", "not a valid nickname");
        bool bad = false;
        StatsWindow window{time_param(req, "from", false, bad), time_param(req, "to", true, bad)};
        if (bad) return fail(res, 400, "BadTime", "from/to must be ISO-8601 or YYYY-MM-DD");
        try {
            reply(res, 200, to_json(compute_stats(store_, catalog_, *nick, window)));
        } catch (const Error& e) {
            fail(res, e);
        }
    });

    server.Get("/api/stats/team", [this](const httplib::Request& req, httplib::Response& res) {
        bool bad = false;
        StatsWindow window{time_param(req, "from", false, bad), time_param(req, "to", true, bad)};
        if (bad) return fail(res, 400, "BadTime", "from/to must be ISO-8601 or YYYY-MM-DD");
        if (window.from && window.to && *window.from > *window.to) {
            return fail(res, 400, "BadWindow", "from is after to");
        }
        reply(res, 200, to_json(team_report(store_, catalog_, window)));
    });

    // --- plumbing --------------------------------------------------------
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        const auto uptime = std::chrono::duration_cast<Seconds>(std::chrono::steady_clock::now() - started_);
        reply(res, 200, json{{"status", "ok"}, {"journal_seq", store_.last_seq()}, {"uptime_s", uptime.count()}});
    });

    if (!options_.ui_dir.empty()) {
        server.set_mount_point("/", options_.ui_dir.string());
        const auto index = options_.ui_dir / "index.html";
        server.Get(R"(/validate/[A-Za-z0-9_-]+)", [index](const httplib::Request&, httplib::Response& res) {
            std::ifstream in(index, std::ios::binary);
            if (!in) return fail(res, 404, "NoUi", "dashboard bundle not installed");
            std::stringstream ss;
            ss << in.rdbuf();
            res.set_content(ss.str(), "text/html; charset=utf-8");
        });
    }
}

// ---------------------------------------------------------------------------

ApiServer::ApiServer(ApiService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    server_->new_task_queue = [] { return new httplib::ThreadPool(16); };
    service_.mount(*server_);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

bool ApiServer::listen(const std::string& host, int port) {
    port_ = port;
    return server_->listen(host, port);
}

void ApiServer::stop() {
    service_.shutdown();
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace aa
