#include "aa/bot/bot.hpp"
#include "signals.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <thread>

using namespace aa;

int main(int argc, char** argv) {
    CLI::App app{"aa-bot: relays IRC \"shout\" commands to an AA server"};
    BotConfig cfg;
    std::string server = std::getenv("AA_SERVER") != nullptr ? std::getenv("AA_SERVER") : "";
    std::string aliases_file;
    std::string queue_path = "aa-bot-queue.jsonl";
    app.add_option("--irc-host", cfg.host, "IRC server host")->required();
    app.add_option("--irc-port", cfg.port, "IRC server port");
    app.add_option("--nick", cfg.nick, "Bot nick");
    app.add_option("--channel", cfg.channels, "Channel to join (repeatable)");
    app.add_option("--aliases", aliases_file, "Alias map JSON: chat nick -> developer and relay token")->required();
    app.add_option("--server", server, "AA server URL (env AA_SERVER)")->required();
    app.add_option("--queue", queue_path, "Local queue for shouts not yet acknowledged");
    CLI11_PARSE(app, argc, argv);

    const auto signals = tools::block_termination_signals();
    try {
        auto aliases = AliasMap::load(aliases_file);
        spdlog::info("{} alias(es) on {}", aliases.size(), aliases.network());
        SystemClock clock;
        ClientQueue queue(queue_path, clock);
        HttpTransport transport(server);
        Relay relay(std::move(aliases), queue, transport, clock);
        relay.set_bot_nick(cfg.nick);
        IrcBot bot(cfg, relay);
        std::thread runner([&] { bot.run(); });
        const int sig = tools::wait_for_termination(signals);
        spdlog::info("signal {} received, flushing and quitting", sig);
        bot.stop();
        runner.join();
    } catch (const std::exception& e) {
        std::cerr << "aa-bot: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
