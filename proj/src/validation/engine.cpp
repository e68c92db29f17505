#include "aa/validation/engine.hpp"

#include "aa/core/error.hpp"
#include "aa/util/crypto.hpp"

#include <spdlog/spdlog.h>

namespace aa {

NickName choose_validator(std::mt19937_64& rng, std::span<const NickName> pool, const NickName& author) {
    std::vector<NickName> eligible;
    for (const auto& nick : pool) {
        if (nick != author) eligible.push_back(nick);
    }
    if (eligible.empty()) {
        throw Error(ErrorCode::NoEligibleValidator, "no active developer other than " + author.str() + " can validate");
    }
    std::uniform_int_distribution<std::size_t> dist(0, eligible.size() - 1);
    return eligible[dist(rng)];
}

ValidationEngine::ValidationEngine(Store& store, SessionCatalog& catalog, ValidationOptions options,
                                   NotificationDispatcher* dispatcher)
    : store_(store), catalog_(catalog), options_(std::move(options)), dispatcher_(dispatcher),
      rng_(options_.seed ? *options_.seed : std::random_device{}()) {
    if (!options_.token_source) options_.token_source = random_token;
    while (!options_.base_url.empty() && options_.base_url.back() == '/') options_.base_url.pop_back();
}

std::string ValidationEngine::validation_url(const std::string& token) const {
    return options_.base_url + "/validate/" + token;
}

std::vector<IssuedAssignment> ValidationEngine::close_and_assign(Timestamp now) {
    std::lock_guard lock(scan_mutex_);
    std::vector<IssuedAssignment> issued;

    std::vector<NickName> pool;
    std::map<NickName, std::string> addresses;
    for (const auto& dev : store_.developers()) {
        if (!dev.active) continue;
        pool.push_back(dev.nick);
        addresses[dev.nick] = dev.notify_address;
    }

    const Seconds gap = catalog_.config().session_gap();
    for (const auto& author : store_.authors()) {
        for (const auto& session : catalog_.canonical(author)) {
            if (session.validation_state != ValidationState::pending) continue;
            const bool closed = session.stopped_explicitly || now - session.ended_at > gap;
            if (!closed) continue;

            NickName validator;
            try {
                validator = choose_validator(rng_, pool, author);
            } catch (const Error& e) {
                spdlog::warn("session {} stays pending: {}", session.session_id, e.what());
                continue;
            }
            const std::string token = options_.token_source();
            IssuedAssignment out;
            try {
                out.assignment = store_.record_assignment(session.session_id, author, validator, sha256_hex(token));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DuplicateAssignment) continue;
                throw;
            }
            out.token = token;
            out.url = validation_url(token);
            if (dispatcher_ != nullptr) {
                dispatcher_->enqueue(Notification{session.session_id, author.str(), validator.str(),
                                                  addresses[validator], out.url});
            }
            issued.push_back(std::move(out));
        }
    }
    return issued;
}

Assignment ValidationEngine::record_verdict(const std::string& token, std::string_view verdict,
                                            std::optional<std::string> comment) {
    const auto parsed = parse_verdict(verdict);
    if (!parsed) throw Error(ErrorCode::InvalidRecord, "verdict must be 'valid' or 'invalid'");
    return store_.record_verdict(sha256_hex(token), *parsed, std::move(comment));
}

std::vector<Assignment> ValidationEngine::pending_for(const NickName& validator) const {
    std::vector<Assignment> out;
    for (auto& a : store_.assignments()) {
        if (a.validator == validator && !a.verdict) out.push_back(std::move(a));
    }
    std::sort(out.begin(), out.end(), [](const Assignment& a, const Assignment& b) {
        return a.assigned_at != b.assigned_at ? a.assigned_at < b.assigned_at : a.session_id < b.session_id;
    });
    return out;
}

}  // namespace aa

namespace aa {

AssignmentScanner::AssignmentScanner(ValidationEngine& engine, const Clock& clock, std::chrono::milliseconds interval)
    : engine_(engine), clock_(clock), interval_(interval) {}

AssignmentScanner::~AssignmentScanner() { stop(); }

void AssignmentScanner::start() {
    if (thread_.joinable()) return;
    {
        std::lock_guard lock(mutex_);
        stopping_ = false;
    }
    thread_ = std::thread([this] { run(); });
}

void AssignmentScanner::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
}

void AssignmentScanner::run() {
    std::unique_lock lock(mutex_);
    while (!stopping_) {
        lock.unlock();
        try {
            const auto issued = engine_.close_and_assign(clock_.now());
            if (!issued.empty()) spdlog::info("assigned {} session(s) for validation", issued.size());
        } catch (const std::exception& e) {
            spdlog::error("assignment scan failed: {}", e.what());
        }
        ++scans_;
        lock.lock();
        cv_.wait_for(lock, interval_, [this] { return stopping_; });
    }
}

}  // namespace aa
