#include "aa/client/app.hpp"
#include "aa/core/error.hpp"
#include "support/api_harness.hpp"
#include "support/client_fixture.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

using namespace aa;
using namespace aa::testing;
using nlohmann::json;

namespace {

ClientConfig config_for(int port, std::string_view nick = "v1z") {
    return ClientConfig{"http://127.0.0.1:" + std::to_string(port), fixture::token_for(nick), 15};
}

// Every shout the server holds, oldest first.
std::vector<Shout> server_feed(Store& store) {
    ShoutFilter f;
    f.order = Order::oldest_first;
    f.limit = 1'000'000;
    return store.query_shouts(f);
}

}  // namespace

TEST_CASE("queue survives reopen and keeps its client id") {
    TempDir dir;
    ManualClock clock{fixture::ts("2013-05-27T00:00:00Z")};
    std::string id;
    {
        ClientQueue q(dir / "q.jsonl", clock);
        id = q.client_id();
        CHECK(id.size() == 22);
        q.enqueue("a", clock.now());
        q.enqueue("b", clock.now());
        q.mark_pushed(1, 10);
    }
    ClientQueue q(dir / "q.jsonl", clock);
    CHECK(q.client_id() == id);
    REQUIRE(q.entries().size() == 2);
    CHECK(q.entries()[0].state == EntryState::pushed);
    CHECK(q.entries()[0].server_id == 10);
    CHECK(q.depth() == 1);
    CHECK(q.enqueue("c", clock.now()).seq == 3);
}

TEST_CASE("queue drops a torn final line") {
    TempDir dir;
    ManualClock clock{fixture::ts("2013-05-27T00:00:00Z")};
    { ClientQueue(dir / "q.jsonl", clock).enqueue("kept", clock.now()); }
    const auto size = std::filesystem::file_size(dir / "q.jsonl");
    { std::ofstream(dir / "q.jsonl", std::ios::app) << R"({"v":1,"seq":3,"kind":"enq)"; }
    ClientQueue q(dir / "q.jsonl", clock);
    CHECK(q.entries().size() == 1);
    CHECK(std::filesystem::file_size(dir / "q.jsonl") == size);
    CHECK(q.enqueue("next", clock.now()).seq == 2);
}

TEST_CASE("queue lock serializes processes") {
    TempDir dir;
    ManualClock clock{fixture::ts("2013-05-27T00:00:00Z")};
    ClientQueue held(dir / "q.jsonl", clock);
    CHECK_THROWS_AS(ClientQueue(dir / "q.jsonl", clock, std::chrono::milliseconds{50}), Error);
}

TEST_CASE("config file and environment") {
    TempDir dir;
    save_client_config(dir.path(), ClientConfig{"http://aa.example", "secret", 10});
    auto loaded = load_client_config(dir.path());
    CHECK(loaded.server == "http://aa.example");
    CHECK(loaded.token == "secret");
    CHECK(loaded.timeslot_minutes == 10);
    ::setenv("AA_SERVER", "http://other", 1);
    CHECK(load_client_config(dir.path()).server == "http://other");
    ::unsetenv("AA_SERVER");
    { std::ofstream(dir / "config.json") << "[1,2]"; }
    CHECK_THROWS_AS(load_client_config(dir.path()), Error);
    CHECK_FALSE(load_client_config(dir / "missing").complete());
}

TEST_CASE("shout online, offline, empty and unconfigured") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    FaultyTransport transport(http);
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T00:14:00Z"));
    ClientRig rig(dir.path(), clock, transport, config_for(h.port));

    CHECK(rig.app().shout("investigando pq sprite ta borrada") == exit_code::ok);
    CHECK(rig.take_out() == "sent\n");
    auto feed = server_feed(h.store);
    REQUIRE(feed.size() == 1);
    CHECK(feed[0].text == "investigando pq sprite ta borrada");
    CHECK(feed[0].client_ts == clock.now());

    transport.fail_after = transport.delivered;
    CHECK(rig.app().shout("offline one") == exit_code::ok);
    CHECK(rig.take_out() == "queued (offline)\n");
    CHECK(h.store.shout_count() == 1);

    CHECK(rig.app().shout("   ") == exit_code::empty_text);
    CHECK(rig.app().shout("") == exit_code::empty_text);

    rig.env.config.token.clear();
    CHECK(rig.app().shout("x") == exit_code::missing_config);
    CHECK(rig.app().push() == exit_code::missing_config);
}

TEST_CASE("push sends queued entries with their original timestamps") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    FaultyTransport transport(http);
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T01:00:00Z"));
    ClientRig rig(dir.path(), clock, transport, config_for(h.port));

    CHECK(rig.app().push() == exit_code::ok);
    CHECK(rig.take_out() == "{\"remaining\":0,\"sent\":0}\n");

    transport.fail_after = 0;
    std::vector<Timestamp> times;
    for (int i = 0; i < 3; ++i) {
        clock.advance(Minutes{7});
        times.push_back(clock.now());
        rig.app().shout("offline " + std::to_string(i));
    }
    rig.take_out();
    clock.advance(Minutes{90});
    transport.fail_after.reset();
    CHECK(rig.app().push() == exit_code::ok);
    CHECK(rig.take_out() == "{\"remaining\":0,\"sent\":3}\n");

    auto feed = server_feed(h.store);
    REQUIRE(feed.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(feed[i].text == "offline " + std::to_string(i));
        CHECK(feed[i].client_ts == times[i]);
    }
}

TEST_CASE("push stops at the first failure and never duplicates") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    FaultyTransport transport(http);
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T01:00:00Z"));
    ClientRig rig(dir.path(), clock, transport, config_for(h.port));

    transport.fail_after = 0;
    for (int i = 0; i < 10; ++i) rig.app().shout("entry " + std::to_string(i));
    transport.delivered = 0;

    SUBCASE("request lost before the server") { transport.lose_response = false; }
    SUBCASE("server accepted but the reply was lost") { transport.lose_response = true; }

    transport.fail_after = 4;
    CHECK(rig.app().push() == exit_code::failure);
    {
        ClientQueue q(rig.app().queue_path(), clock);
        CHECK(q.depth() == 6);
    }
    transport.fail_after.reset();
    rig.take_out();
    CHECK(rig.app().push() == exit_code::ok);

    auto feed = server_feed(h.store);
    REQUIRE(feed.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(feed[i].text == "entry " + std::to_string(i));
    ClientQueue q(rig.app().queue_path(), clock);
    for (std::size_t i = 1; i < q.entries().size(); ++i) CHECK(q.entries()[i - 1].server_id < q.entries()[i].server_id);
}

TEST_CASE("server rejections are recorded and not resent") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T01:00:00Z"));
    ClientRig rig(dir.path(), clock, http, config_for(h.port));
    {
        ClientQueue q(rig.app().queue_path(), clock);
        // Far future: the server refuses client times more than a day ahead.
        q.enqueue("from the future", h.clock.now() + Seconds{3 * 86400});
        q.enqueue("fine", h.clock.now());
    }
    CHECK(rig.app().push() == exit_code::ok);
    ClientQueue q(rig.app().queue_path(), clock);
    CHECK(q.entries()[0].state == EntryState::rejected);
    CHECK(q.entries()[1].state == EntryState::pushed);
    CHECK(h.store.shout_count() == 1);
}

TEST_CASE("exactly-once under random shout/push/crash interleavings") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    std::mt19937_64 rng(2013);
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T00:00:00Z"));

    for (int round = 0; round < 5; ++round) {
        TempDir dir;
        const auto nick = std::string(fixture::kPanelNicks[round % 4]);
        FaultyTransport transport(http);
        ClientRig rig(dir.path(), clock, transport, config_for(h.port, nick));
        const auto before = h.store.shout_count();

        std::multiset<std::string> issued;
        for (int step = 0; step < 60; ++step) {
            clock.advance(Minutes{1});
            const auto roll = rng() % 10;
            if (roll < 2) {
                transport.fail_after = transport.delivered + rng() % 3;
                transport.lose_response = rng() % 2 == 0;
            } else if (roll < 4) {
                transport.fail_after.reset();
            }
            if (roll < 7) {
                const auto text = nick + " step " + std::to_string(step);
                rig.app().shout(text);
                issued.insert(text);
            } else {
                rig.app().push();
            }
        }
        transport.fail_after.reset();
        CHECK(rig.app().push() == exit_code::ok);

        std::multiset<std::string> received;
        for (const auto& s : server_feed(h.store)) {
            if (s.id > before) received.insert(s.text);
        }
        CHECK(received == issued);
    }
}

TEST_CASE("session start and stop exit codes") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T00:00:00Z"));
    ClientRig rig(dir.path(), clock, http, config_for(h.port));

    CHECK(rig.app().session_stop() == exit_code::no_session);
    CHECK(rig.app().session_start(15, false) == exit_code::ok);
    CHECK(rig.app().session_start(15, false) == exit_code::session_active);
    clock.advance(Minutes{5});
    CHECK(rig.app().session_stop() == exit_code::ok);
    CHECK(rig.app().session_stop() == exit_code::no_session);
    CHECK(rig.app().session_start(0, false) == exit_code::failure);

    auto feed = server_feed(h.store);
    REQUIRE(feed.size() == 2);
    CHECK(feed[0].text == std::string(kSessionStartMarker));
    CHECK(feed[1].text == std::string(kSessionStopMarker));
    auto sessions = h.catalog.canonical(NickName::from("v1z"));
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].stopped_explicitly);
}

TEST_CASE("alert loop timing on a simulated clock") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    const auto t0 = fixture::ts("2013-05-27T12:00:00Z");
    ManualClock& clock = h.clock;
    clock.set(t0);
    ClientRig rig(dir.path(), clock, http, config_for(h.port));
    ScriptedWaiter waiter(clock, t0 + Minutes{240});
    std::vector<Timestamp> rung;
    rig.env.waiter = &waiter;
    rig.env.on_alert = [&](Timestamp at) { rung.push_back(at); };

    SUBCASE("idle session rings every timeslot") {
        waiter.type_at(t0 + Minutes{50}, "stop");
        CHECK(rig.app().session_start(15, true) == exit_code::ok);
        CHECK(rung == std::vector<Timestamp>{t0 + Minutes{15}, t0 + Minutes{30}, t0 + Minutes{45}});
    }
    SUBCASE("a shout at minute 7 leaves the first alert at minute 15") {
        waiter.type_at(t0 + Minutes{7}, "pingo vomitando sem borramento");
        waiter.type_at(t0 + Minutes{40}, "stop");
        CHECK(rig.app().session_start(15, true) == exit_code::ok);
        // After ringing, the schedule re-anchors on the last shout (minute 7).
        CHECK(rung == std::vector<Timestamp>{t0 + Minutes{15}, t0 + Minutes{22}, t0 + Minutes{37}});
        CHECK(h.store.shout_count() == 3);
    }
    SUBCASE("stop from another terminal ends the loop") {
        waiter.type_at(t0 + Minutes{3}, "   ");
        waiter.run_at(t0 + Minutes{12}, [&] { CHECK(rig.app().session_stop() == exit_code::ok); });
        CHECK(rig.app().session_start(5, true) == exit_code::ok);
        CHECK(rung == std::vector<Timestamp>{t0 + Minutes{5}, t0 + Minutes{10}});
        CHECK(rig.out.str().find("session ended") != std::string::npos);
    }
    CHECK(rig.out.str().find('\a') != std::string::npos);
}

TEST_CASE("status and log") {
    TempDir dir;
    ManualClock clock{fixture::ts("2013-05-27T00:00:00Z")};
    HttpTransport offline("http://127.0.0.1:1", std::chrono::milliseconds{200});
    ClientRig rig(dir.path(), clock, offline, ClientConfig{"http://127.0.0.1:1", "t", 15});

    rig.app().status();
    CHECK(rig.take_out().starts_with("no session, queue empty\n"));
    rig.app().shout("one");
    rig.app().shout("two");
    rig.take_out();
    rig.app().status();
    const auto status = rig.take_out();
    CHECK(status.starts_with("no session, queue depth 2\n"));
    CHECK(status.find("unreachable") != std::string::npos);

    rig.app().log(1);
    const auto log = rig.take_out();
    CHECK(log.find("two") != std::string::npos);
    CHECK(log.find("one") == std::string::npos);
    CHECK(log.find("queued") != std::string::npos);
}

TEST_CASE("status after a push shows an empty queue") {
    ApiHarness h;
    fixture::register_panel_team(h.store);
    TempDir dir;
    HttpTransport http("http://127.0.0.1:" + std::to_string(h.port));
    FaultyTransport transport(http);
    ManualClock& clock = h.clock;
    clock.set(fixture::ts("2013-05-27T00:00:00Z"));
    ClientRig rig(dir.path(), clock, transport, config_for(h.port));
    transport.fail_after = 0;
    rig.app().shout("a");
    rig.app().shout("b");
    transport.fail_after.reset();
    rig.app().push();
    rig.take_out();
    rig.app().status();
    CHECK(rig.take_out().starts_with("no session, queue empty\n"));
}
