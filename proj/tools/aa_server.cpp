#include "aa/analytics/stats.hpp"
#include "aa/api/service.hpp"
#include "aa/core/error.hpp"
#include "aa/util/crypto.hpp"
#include "signals.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <iostream>
#include <thread>

using namespace aa;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : std::move(fallback);
}

// Only one process may write a journal. Held until exit.
bool lock_data_dir(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const int fd = ::open((dir / "LOCK").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
    return fd >= 0 && ::flock(fd, LOCK_EX | LOCK_NB) == 0;
}

std::filesystem::path journal_in(const std::filesystem::path& dir) { return dir / "journal.jsonl"; }

struct ServeOptions {
    std::string listen = "127.0.0.1:8080";
    std::string base_url;
    int session_gap = 60;
    int timeslot = 15;
    int rate_limit = 60;
    bool recover = false;
    int scan_interval = 60;
    std::optional<std::uint64_t> seed;
    std::string ui_dir;
    std::string smtp_host;
    std::uint16_t smtp_port = 25;
    std::string smtp_from = "aa@localhost";
};

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--listen must be host:port");
    return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

int serve(const std::filesystem::path& data_dir, const ServeOptions& o) {
    const auto signals = tools::block_termination_signals();
    if (!lock_data_dir(data_dir)) {
        spdlog::error("{} is in use by another aa-server", data_dir.string());
        return 1;
    }
    const TimeslotConfig slots(Minutes{o.timeslot}, Minutes{o.session_gap});
    if (slots.outside_proposed_band()) spdlog::warn("timeslot {} min is outside the recommended 5-15 min", o.timeslot);
    const auto [host, port] = split_listen(o.listen);

    SystemClock clock;
    Store store(clock, StoreOptions{journal_in(data_dir), true, o.recover});
    if (store.recovered_bytes() > 0) spdlog::warn("recovered journal: dropped {} torn byte(s)", store.recovered_bytes());
    spdlog::info("journal at seq {} with {} shout(s)", store.last_seq(), store.shout_count());
    SessionCatalog catalog(store, slots);

    std::unique_ptr<NotificationDispatcher> dispatcher;
    {
        std::shared_ptr<Notifier> email;
        if (!o.smtp_host.empty()) email = std::make_shared<SmtpNotifier>(SmtpConfig{o.smtp_host, o.smtp_port, o.smtp_from});
        auto routing = std::make_shared<RoutingNotifier>(email, std::make_shared<WebhookNotifier>());
        dispatcher = std::make_unique<NotificationDispatcher>(routing);
    }
    ValidationOptions vopts;
    vopts.base_url = o.base_url.empty() ? "http://" + o.listen : o.base_url;
    vopts.seed = o.seed;
    ValidationEngine engine(store, catalog, vopts, dispatcher.get());

    ServiceOptions sopts;
    sopts.rate_limit_per_minute = o.rate_limit;
    sopts.ui_dir = o.ui_dir;
    ApiService service(store, catalog, engine, clock, sopts);
    ApiServer server(service);
    const int bound = server.start(host, port);
    spdlog::info("listening on {}:{}", host, bound);

    AssignmentScanner scanner(engine, clock, std::chrono::seconds{o.scan_interval});
    scanner.start();

    const int sig = tools::wait_for_termination(signals);
    spdlog::info("signal {} received, shutting down", sig);
    scanner.stop();
    server.stop();
    if (const auto unsent = dispatcher->pending(); unsent > 0) {
        spdlog::warn("{} validation notification(s) not sent; validators still see them under /api/validations/pending",
                     unsent);
    }
    dispatcher->stop();
    return 0;
}

int add_developer(const std::filesystem::path& data_dir, const std::string& nick_text, const std::string& notify,
                  const std::vector<std::string>& aliases, bool deactivate) {
    if (!lock_data_dir(data_dir)) {
        std::cerr << "aa-server: " << data_dir.string() << " is in use; stop the server first\n";
        return 1;
    }
    auto nick = NickName::parse(nick_text);
    if (!nick) {
        std::cerr << "aa-server: invalid nick (use 2-32 of a-z 0-9 _)\n";
        return 2;
    }
    SystemClock clock;
    Store store(clock, StoreOptions{journal_in(data_dir)});
    Developer dev = store.developer(*nick).value_or(Developer{});
    dev.nick = *nick;
    if (deactivate) {
        dev.active = false;
        store.upsert_developer(dev);
        std::cout << "deactivated " << nick->str() << '\n';
        return 0;
    }
    if (!notify.empty()) dev.notify_address = notify;
    if (dev.notify_address.empty()) {
        std::cerr << "aa-server: --notify is required for a new developer\n";
        return 2;
    }
    const auto token = random_token();
    dev.auth_token_hash = sha256_hex(token);
    dev.active = true;
    std::vector<std::pair<ChatAlias, std::string>> relay;
    for (const auto& spec : aliases) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
            std::cerr << "aa-server: --alias must be network:chatnick\n";
            return 2;
        }
        ChatAlias alias{spec.substr(0, colon), spec.substr(colon + 1)};
        const auto relay_token = random_token();
        dev.relay_token_hashes[alias] = sha256_hex(relay_token);
        relay.emplace_back(alias, relay_token);
    }
    store.upsert_developer(dev);
    std::cout << "developer " << nick->str() << '\n' << "  token: " << token << '\n';
    for (const auto& [alias, t] : relay) std::cout << "  relay token for " << alias.network << ':' << alias.alias << ": " << t << '\n';
    return 0;
}

int report(const std::filesystem::path& data_dir, const std::string& from, const std::string& to, int gap,
           double compliance_hours, bool as_json) {
    StatsWindow window;
    if (!from.empty()) window.from = parse_time_bound(from, false);
    if (!to.empty()) window.to = parse_time_bound(to, true);
    if ((!from.empty() && !window.from) || (!to.empty() && !window.to)) {
        std::cerr << "aa-server: --from/--to take YYYY-MM-DD or ISO-8601 UTC\n";
        return 2;
    }
    SystemClock clock;
    Store store(clock, StoreOptions{journal_in(data_dir), false, false});
    SessionCatalog catalog(store, TimeslotConfig(TimeslotConfig::kDefaultTimeslot, Minutes{gap}));
    const auto r = team_report(store, catalog, window,
                               Seconds{static_cast<std::int64_t>(compliance_hours * 3600)});
    std::cout << (as_json ? to_json(r).dump(2) + "\n" : format_report(r));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AA server: shout ingestion, sessions, peer validation and reports"};
    app.require_subcommand(1);
    std::string data_dir = env_or("AA_DATA_DIR", "aa-data");
    app.add_option("--data-dir", data_dir, "Directory holding the journal (env AA_DATA_DIR)");

    ServeOptions so;
    so.listen = env_or("AA_LISTEN", so.listen);
    so.base_url = env_or("AA_BASE_URL", "");
    so.smtp_host = env_or("AA_SMTP_HOST", "");
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP server");
    serve_cmd->add_option("--listen", so.listen, "host:port (env AA_LISTEN)");
    serve_cmd->add_option("--base-url", so.base_url, "Public URL used in validation links (env AA_BASE_URL)");
    serve_cmd->add_option("--session-gap", so.session_gap, "Minutes of silence that end a session")->check(CLI::Range(2, 24 * 60));
    serve_cmd->add_option("--timeslot", so.timeslot, "Default alert period in minutes")->check(CLI::Range(1, 120));
    serve_cmd->add_option("--rate-limit", so.rate_limit, "Shouts per developer per minute")->check(CLI::PositiveNumber);
    serve_cmd->add_flag("--recover", so.recover, "Drop a torn final journal record instead of refusing to start");
    serve_cmd->add_option("--scan-interval", so.scan_interval, "Seconds between validation assignment scans")
        ->check(CLI::PositiveNumber);
    serve_cmd->add_option("--seed", so.seed, "Seed for validator selection");
    serve_cmd->add_option("--ui-dir", so.ui_dir, "Static dashboard bundle to serve under /");
    serve_cmd->add_option("--smtp-host", so.smtp_host, "SMTP relay for email notifications (env AA_SMTP_HOST)");
    serve_cmd->add_option("--smtp-port", so.smtp_port, "SMTP port");
    serve_cmd->add_option("--smtp-from", so.smtp_from, "Sender address");

    std::string nick, notify;
    std::vector<std::string> aliases;
    bool deactivate = false;
    auto* add_cmd = app.add_subcommand("add-developer", "Register or update a developer and issue tokens");
    add_cmd->add_option("--nick", nick, "Developer nickname")->required();
    add_cmd->add_option("--notify", notify, "Email (mailto: or user@host) or webhook URL for validation requests");
    add_cmd->add_option("--alias", aliases, "Chat alias network:nick; prints a relay token (repeatable)");
    add_cmd->add_flag("--deactivate", deactivate, "Revoke the developer's tokens");

    std::string from, to;
    int gap = 60;
    double compliance_hours = 2.0;
    bool as_json = false;
    auto* report_cmd = app.add_subcommand("report", "Print per-developer statistics and compliance");
    report_cmd->add_option("--from", from, "First day, YYYY-MM-DD");
    report_cmd->add_option("--to", to, "Last day, YYYY-MM-DD");
    report_cmd->add_option("--session-gap", gap, "Minutes of silence that end a session")->check(CLI::Range(2, 24 * 60));
    report_cmd->add_option("--compliance-hours", compliance_hours, "Daily session time expected")->check(CLI::PositiveNumber);
    report_cmd->add_flag("--json", as_json, "Emit JSON instead of tables");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*serve_cmd) return serve(data_dir, so);
        if (*add_cmd) return add_developer(data_dir, nick, notify, aliases, deactivate);
        if (*report_cmd) return report(data_dir, from, to, gap, compliance_hours, as_json);
    } catch (const CorruptJournal& e) {
        std::cerr << "aa-server: " << e.what() << (e.torn_tail() ? " (start with --recover to drop it)" : "") << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "aa-server: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
