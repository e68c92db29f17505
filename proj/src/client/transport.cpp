#include "aa/client/transport.hpp"

#include <httplib.h>
#include <json.hpp>

namespace aa {

using nlohmann::json;

HttpTransport::HttpTransport(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

namespace {

httplib::Client make_client(const std::string& base, std::chrono::milliseconds timeout) {
    httplib::Client client(base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    return client;
}

}  // namespace

PushResponse HttpTransport::send(const PushRequest& request, const std::string& token) {
    auto client = make_client(base_url_, timeout_);
    const json body{{"text", request.text},
                    {"client_ts", format_iso8601(request.client_ts)},
                    {"client_id", request.client_id},
                    {"seq", request.seq},
                    {"origin", request.origin}};
    auto res = client.Post("/api/shouts", {{"Authorization", "Bearer " + token}}, body.dump(), "application/json");

    PushResponse out;
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    const json reply = json::parse(res->body, nullptr, false);
    if (res->status == 201 || res->status == 200) {
        out.outcome = res->status == 201 ? PushResponse::Outcome::accepted : PushResponse::Outcome::duplicate;
        if (reply.is_object() && reply.contains("id")) out.id = reply["id"].get<std::uint64_t>();
        return out;
    }
    out.error = reply.is_object() ? reply.value("error", "") + ": " + reply.value("message", "")
                                  : "HTTP " + std::to_string(res->status);
    const bool permanent = res->status == 400 || res->status == 409 || res->status == 422;
    out.outcome = permanent ? PushResponse::Outcome::rejected : PushResponse::Outcome::retry_later;
    return out;
}

bool HttpTransport::reachable() {
    auto client = make_client(base_url_, timeout_);
    auto res = client.Get("/api/health");
    return res && res->status == 200;
}

PushSummary push_queue(ClientQueue& queue, ShoutTransport& transport,
                       const std::function<std::string(const QueueEntry&)>& token_for, std::string origin) {
    PushSummary summary;
    for (const auto& entry : queue.pending()) {
        const PushRequest request{entry.text, entry.client_ts, queue.client_id(), entry.seq, origin};
        const auto res = transport.send(request, token_for(entry));
        using Outcome = PushResponse::Outcome;
        if (res.outcome == Outcome::accepted || res.outcome == Outcome::duplicate) {
            queue.mark_pushed(entry.seq, res.id);
            ++summary.sent;
        } else if (res.outcome == Outcome::rejected) {
            queue.mark_rejected(entry.seq, res.error);
            ++summary.rejected;
        } else {
            summary.stopped_because = res.error.empty() ? "HTTP " + std::to_string(res.status) : res.error;
            break;
        }
    }
    summary.remaining = queue.depth();
    return summary;
}

}  // namespace aa
