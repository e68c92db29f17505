#include "aa/client/app.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace aa;

int main(int argc, char** argv) {
    CLI::App app{"aa: shouts, sessions and alerts for the AA methodology"};
    app.require_subcommand(1);
    std::string config_dir = default_config_dir().string();
    std::optional<std::string> server, token;
    app.add_option("--config-dir", config_dir, "Config and queue directory (env AA_CONFIG_DIR)");
    app.add_option("--server", server, "Server URL (env AA_SERVER)");
    app.add_option("--token", token, "Auth token (env AA_TOKEN)");

    std::string init_server, init_token;
    int init_timeslot = 15;
    auto* init = app.add_subcommand("init", "Write the config file");
    init->add_option("--server", init_server, "Server URL")->required();
    init->add_option("--token", init_token, "Auth token from aa-server add-developer")->required();
    init->add_option("--timeslot", init_timeslot, "Default alert period in minutes")->check(CLI::Range(1, 120));

    std::vector<std::string> words;
    auto* shout = app.add_subcommand("shout", "Send a shout (queued if the server is unreachable)");
    shout->add_option("text", words, "What you are doing")->required()->allow_extra_args();

    auto* push = app.add_subcommand("push", "Send queued shouts");

    auto* session = app.add_subcommand("session", "Start or stop an AA session");
    session->require_subcommand(1);
    std::optional<int> timeslot;
    bool no_wait = false;
    auto* start = session->add_subcommand("start", "Emit a start marker and run the alert loop");
    start->add_option("--timeslot", timeslot, "Alert period in minutes")->check(CLI::Range(1, 120));
    start->add_flag("--no-wait", no_wait, "Do not run the foreground alert loop");
    auto* stop = session->add_subcommand("stop", "Emit a stop marker");

    auto* status = app.add_subcommand("status", "Session state, queue depth, server reachability");
    std::size_t n = 10;
    auto* log = app.add_subcommand("log", "Recent local shouts");
    log->add_option("-n", n, "How many")->check(CLI::PositiveNumber);

    // The text of `aa shout` may legitimately be empty; let the app report it.
    try {
        app.parse(argc, argv);
    } catch (const CLI::RequiredError& e) {
        if (!*shout) return app.exit(e);
        words.clear();
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*init) {
            save_client_config(config_dir, ClientConfig{init_server, init_token, init_timeslot});
            std::cout << "wrote " << (std::filesystem::path(config_dir) / "config.json").string() << '\n';
            return exit_code::ok;
        }

        SystemClock clock;
        StdinWaiter waiter(clock);
        ClientEnv env;
        env.config_dir = config_dir;
        env.config = load_client_config(config_dir);
        if (server) env.config.server = *server;
        if (token) env.config.token = *token;
        env.clock = &clock;
        env.make_transport = [](const std::string& url) { return std::make_unique<HttpTransport>(url); };
        env.waiter = &waiter;
        env.out = &std::cout;
        env.err = &std::cerr;
        ClientApp client(env);

        if (*shout) {
            std::string text;
            for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
            return client.shout(text);
        }
        if (*push) return client.push();
        if (*start) return client.session_start(timeslot, !no_wait);
        if (*stop) return client.session_stop();
        if (*status) return client.status();
        if (*log) return client.log(n);
    } catch (const std::exception& e) {
        std::cerr << "aa: " << e.what() << '\n';
        return exit_code::failure;
    }
    return exit_code::ok;
}
