#include "aa/core/error.hpp"
#include "aa/core/session.hpp"
#include "support/panel_feed.hpp"
#include "support/grouping_oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace aa;
using namespace std::chrono_literals;

namespace {

Shout make_shout(ShoutId id, std::string_view nick, Timestamp at, std::string text = "working") {
    Shout s;
    s.id = id;
    s.author = NickName::from(nick);
    s.text = std::move(text);
    s.client_ts = at;
    s.server_ts = at;
    s.idem_key = {"t", id};
    return s;
}

std::vector<Shout> v1z_shouts() {
    std::vector<Shout> out;
    for (const auto& s : fixture::panel_shouts()) {
        if (s.author.str() == "v1z") out.push_back(s);
    }
    return out;
}

ErrorCode error_of(std::string_view raw) {
    try {
        normalize_shout_text(raw);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::StorageFailure;
}

}  // namespace

TEST_CASE("normalize_shout_text") {
    CHECK(normalize_shout_text("  pet 0.3.1 solto ") == "pet 0.3.1 solto");
    CHECK(normalize_shout_text("x") == "x");
    CHECK(normalize_shout_text("a\n\n b") == "a b");
    CHECK(normalize_shout_text("tab\tand\r\nnewline") == "tab and newline");
    CHECK(normalize_shout_text("bell\x07here") == "bellhere");
    CHECK(normalize_shout_text("balan\xC3\xA7o") == "balan\xC3\xA7o");

    CHECK(error_of("") == ErrorCode::EmptyShout);
    CHECK(error_of(" \n\t ") == ErrorCode::EmptyShout);
    CHECK(error_of("\x01\x02") == ErrorCode::EmptyShout);
    CHECK(error_of(std::string(513, 'a')) == ErrorCode::TooLong);
    CHECK(error_of("bad \xC3") == ErrorCode::InvalidText);
    CHECK(error_of("overlong \xC0\xAF") == ErrorCode::InvalidText);

    SUBCASE("limit counts characters, not bytes") {
        std::string accented;
        for (int i = 0; i < 512; ++i) accented += "\xC3\xA7";
        CHECK(normalize_shout_text(accented) == accented);
        CHECK(error_of(accented + "a") == ErrorCode::TooLong);
    }
}

TEST_CASE("normalize_shout_text is idempotent on random input") {
    std::mt19937 rng(7);
    const std::string alphabet = std::string("ab \t\n\r\x01\x7f") + "\xC3\xA7" + "z";
    for (int iter = 0; iter < 2000; ++iter) {
        std::string raw;
        const int len = std::uniform_int_distribution<int>(0, 40)(rng);
        for (int i = 0; i < len; ++i) raw += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        std::string once;
        try {
            once = normalize_shout_text(raw);
        } catch (const Error&) {
            continue;  // random cuts through the two-byte sequence are invalid UTF-8
        }
        CHECK(normalize_shout_text(once) == once);
        CHECK(once.front() != ' ');
        CHECK(once.back() != ' ');
        CHECK(once.find("  ") == std::string::npos);
    }
}

TEST_CASE("NickName validation") {
    CHECK(NickName::parse("v1z"));
    CHECK(NickName::parse("aut0mata"));
    CHECK(NickName::parse("a_b"));
    CHECK_FALSE(NickName::parse("a"));
    CHECK_FALSE(NickName::parse("Hybrid"));
    CHECK_FALSE(NickName::parse("has space"));
    CHECK_FALSE(NickName::parse(std::string(33, 'a')));
}

TEST_CASE("TimeslotConfig bounds") {
    CHECK_NOTHROW(TimeslotConfig(15min, 60min));
    CHECK(TimeslotConfig(30min, 60min).outside_proposed_band());
    CHECK_FALSE(TimeslotConfig(5min, 60min).outside_proposed_band());
    CHECK_THROWS_AS(TimeslotConfig(0min, 60min), Error);
    CHECK_THROWS_AS(TimeslotConfig(121min, 200min), Error);
    CHECK_THROWS_AS(TimeslotConfig(15min, 15min), Error);
    TimeslotConfig def;
    CHECK(def.timeslot() == 15min);
    CHECK(def.session_gap() == 60min);
}

TEST_CASE("group_sessions over the panel v1z rows of 27/05") {
    std::vector<Shout> day;
    for (const auto& s : v1z_shouts()) {
        if (s.client_ts >= fixture::ts("2013-05-27T00:00:00Z") && s.client_ts < fixture::ts("2013-05-28T00:00:00Z")) {
            day.push_back(s);
        }
    }
    REQUIRE(day.size() == 7);
    std::shuffle(day.begin(), day.end(), std::mt19937(3));

    const auto sessions = group_sessions(day, TimeslotConfig{});
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].shout_ids.size() == 7);
    CHECK(sessions[0].duration == 2h + 35min);
    CHECK(sessions[0].duration == Seconds{9300});
    CHECK(sessions[0].started_at == fixture::ts("2013-05-27T00:14:00Z"));
    CHECK(std::is_sorted(sessions[0].shout_ids.begin(), sessions[0].shout_ids.end()));

    const auto summary = summarize_session(sessions[0]);
    CHECK(summary.shout_count == 7);
    CHECK(summary.duration == Seconds{9300});
    CHECK(summary.mean_intershout_gap_s == doctest::Approx(1550.0));
    CHECK_FALSE(summary.has_screencast);
}

TEST_CASE("group_sessions over all v1z rows joins the 26/05 23:56 shout") {
    const auto sessions = group_sessions(v1z_shouts(), TimeslotConfig{});
    REQUIRE(sessions.size() == 2);
    CHECK(sessions[0].shout_ids.size() == 8);
    CHECK(sessions[0].duration == Seconds{10380});
    CHECK(sessions[1].shout_ids.size() == 1);
}

TEST_CASE("group_sessions trivial cases") {
    CHECK(group_sessions({}, TimeslotConfig{}).empty());

    const std::vector<Shout> one{make_shout(1, "v1z", fixture::ts("2013-05-27T00:14:00Z"))};
    const auto single = group_sessions(one, TimeslotConfig{});
    REQUIRE(single.size() == 1);
    CHECK(single[0].duration == 0s);
    CHECK(summarize_session(single[0]).mean_intershout_gap_s == 0.0);

    const auto t0 = fixture::ts("2013-05-27T12:00:00Z");
    const std::vector<Shout> two{make_shout(1, "v1z", t0), make_shout(2, "v1z", t0 + 15min)};
    const auto pair = group_sessions(two, TimeslotConfig{});
    REQUIRE(pair.size() == 1);
    const auto summary = summarize_session(pair[0]);
    CHECK(summary.shout_count == 2);
    CHECK(summary.duration == 900s);
    CHECK(summary.mean_intershout_gap_s == 900.0);
}

TEST_CASE("group_sessions gap boundary is exclusive") {
    const auto t0 = fixture::ts("2013-05-27T12:00:00Z");
    const std::vector<Shout> exact{make_shout(1, "v1z", t0), make_shout(2, "v1z", t0 + 60min)};
    CHECK(group_sessions(exact, TimeslotConfig{}).size() == 1);
    const std::vector<Shout> over{make_shout(1, "v1z", t0), make_shout(2, "v1z", t0 + 60min + 1s)};
    CHECK(group_sessions(over, TimeslotConfig{}).size() == 2);
}

TEST_CASE("group_sessions rejects mixed authors") {
    const auto t0 = fixture::ts("2013-05-27T12:00:00Z");
    const std::vector<Shout> mixed{make_shout(1, "v1z", t0), make_shout(2, "hybrid", t0)};
    try {
        group_sessions(mixed, TimeslotConfig{});
        FAIL("expected MixedAuthors");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MixedAuthors);
    }
}

TEST_CASE("session markers override inferred boundaries") {
    const auto t0 = fixture::ts("2013-05-27T12:00:00Z");
    const std::vector<Shout> shouts{
        make_shout(1, "v1z", t0, "warming up"),
        make_shout(2, "v1z", t0 + 5min, std::string(kSessionStartMarker)),
        make_shout(3, "v1z", t0 + 10min, "coding"),
        make_shout(4, "v1z", t0 + 20min, std::string(kSessionStopMarker)),
        make_shout(5, "v1z", t0 + 25min, "reading mail"),
    };
    const auto sessions = group_sessions(shouts, TimeslotConfig{});
    REQUIRE(sessions.size() == 3);
    CHECK(sessions[0].shout_ids == std::vector<ShoutId>{1});
    CHECK(sessions[1].shout_ids == std::vector<ShoutId>{2, 3, 4});
    CHECK(sessions[1].stopped_explicitly);
    CHECK(sessions[2].shout_ids == std::vector<ShoutId>{5});
    CHECK_FALSE(sessions[2].stopped_explicitly);
}

TEST_CASE("group_sessions tie-breaks equal client_ts by server_ts then id") {
    const auto t0 = fixture::ts("2013-05-27T12:00:00Z");
    auto a = make_shout(5, "v1z", t0);
    auto b = make_shout(3, "v1z", t0);
    auto c = make_shout(4, "v1z", t0);
    b.server_ts = t0 + 10s;
    const std::vector<Shout> shouts{a, b, c};
    const auto sessions = group_sessions(shouts, TimeslotConfig{});
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].shout_ids == std::vector<ShoutId>{4, 5, 3});
    CHECK(sessions[0].session_id == session_id_for(NickName::from("v1z"), 4));
}

TEST_CASE("group_sessions properties against the brute-force oracle") {
    std::mt19937_64 rng(20130527);
    const auto base = fixture::ts("2013-05-20T00:00:00Z");
    for (int iter = 0; iter < 200; ++iter) {
        const int n = std::uniform_int_distribution<int>(0, 150)(rng);
        const Minutes gap{std::uniform_int_distribution<int>(20, 180)(rng)};
        const TimeslotConfig cfg(15min, gap);
        std::vector<Shout> shouts;
        for (int i = 0; i < n; ++i) {
            const auto offset = Seconds{std::uniform_int_distribution<std::int64_t>(0, 2 * 24 * 3600)(rng)};
            shouts.push_back(make_shout(static_cast<ShoutId>(i + 1), "v1z", base + offset));
        }
        const auto sessions = group_sessions(shouts, cfg);
        oracle::Partition got;
        for (const auto& s : sessions) got.push_back(s.shout_ids);
        CHECK(got == oracle::brute_force_sessions(shouts, cfg.session_gap()));
        CHECK(got == oracle::scan_sessions(shouts, cfg.session_gap()));

        // idempotence: regrouping the concatenated output reproduces it
        std::vector<Shout> reordered;
        std::map<ShoutId, Shout> by_id;
        for (const auto& s : shouts) by_id[s.id] = s;
        for (const auto& s : sessions)
            for (auto id : s.shout_ids) reordered.push_back(by_id[id]);
        const auto again = group_sessions(reordered, cfg);
        REQUIRE(again.size() == sessions.size());
        for (std::size_t i = 0; i < again.size(); ++i) {
            CHECK(again[i].session_id == sessions[i].session_id);
            CHECK(again[i].shout_ids == sessions[i].shout_ids);
            CHECK(again[i].duration == sessions[i].duration);
        }
    }
}

TEST_CASE("next_alert") {
    const TimeslotConfig cfg(15min, 60min);
    const auto noon = fixture::ts("2013-05-27T12:00:00Z");
    CHECK(next_alert(noon, cfg, noon + 5min) == noon + 15min);
    CHECK(next_alert(noon, cfg, noon + 47min) == fixture::ts("2013-05-27T13:00:00Z"));
    CHECK(next_alert(noon, cfg, noon + 15min) == noon + 30min);
    CHECK(next_alert(noon, cfg, noon) == noon + 15min);

    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        const TimeslotConfig c(Minutes{std::uniform_int_distribution<int>(1, 120)(rng)}, 240min);
        const auto now = noon + Seconds{std::uniform_int_distribution<std::int64_t>(0, 10 * 24 * 3600)(rng)};
        const auto result = next_alert(noon, c, now);
        CHECK(result > now);
        CHECK((result - noon) % Seconds{c.timeslot()} == 0s);
        CHECK(result - Seconds{c.timeslot()} <= now);
    }
}

TEST_CASE("ISO-8601 parsing and formatting") {
    CHECK(format_iso8601(fixture::ts("2013-05-27T02:48:00Z")) == "2013-05-27T02:48:00Z");
    CHECK(parse_iso8601("2013-05-27T02:48:00.750Z") == fixture::ts("2013-05-27T02:48:00Z"));
    CHECK(parse_iso8601("2013-05-26T23:48:00-03:00") == fixture::ts("2013-05-27T02:48:00Z"));
    CHECK_FALSE(parse_iso8601("2013-05-27 02:48"));
    CHECK_FALSE(parse_iso8601("2013-02-30T00:00:00Z"));
    CHECK_FALSE(parse_iso8601("2013-05-27T02:48:00"));
    CHECK_FALSE(parse_iso8601("garbage"));
    CHECK(format_feed_display(fixture::ts("2013-05-28T12:06:00Z")) == "28/05/2013 12:06");
}
