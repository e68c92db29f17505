#include "aa/analytics/stats.hpp"
#include "aa/core/error.hpp"
#include "aa/validation/engine.hpp"
#include "support/store_fixture.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace aa;
using namespace std::chrono_literals;

namespace {

std::size_t histogram_total(const DeveloperStats& s) {
    return std::accumulate(s.intershout_gap_histogram.begin(), s.intershout_gap_histogram.end(), std::size_t{0});
}

void check_invariants(const DeveloperStats& s) {
    CHECK(s.validation.valid + s.validation.invalid + s.validation.pending == s.sessions_count);
    CHECK(histogram_total(s) == s.shouts_count - s.sessions_count);
}

const StatsWindow kDay27{fixture::ts("2013-05-27T00:00:00Z"), fixture::ts("2013-05-27T23:59:59Z")};

}  // namespace

TEST_CASE("gap buckets") {
    CHECK(gap_bucket(0s) == 0);
    CHECK(gap_bucket(4min + 59s) == 0);
    CHECK(gap_bucket(5min) == 1);
    CHECK(gap_bucket(15min) == 3);
    CHECK(gap_bucket(30min) == 4);
    CHECK(gap_bucket(60min) == 4);
    CHECK(gap_bucket(61min) == 5);
    CHECK(gap_bucket_label(0) == "0-5m");
    CHECK(gap_bucket_label(4) == "30-60m");
    CHECK(gap_bucket_label(5) == ">60m");
}

TEST_CASE("compute_stats for v1z over the panel feed day") {
    ManualClock clock(fixture::ts("2013-05-26T00:00:00Z"));
    Store store(clock);
    fixture::load_panel(store, clock);
    SessionCatalog catalog(store, TimeslotConfig{});

    const auto stats = compute_stats(store, catalog, NickName::from("v1z"), kDay27);
    CHECK(stats.sessions_count == 1);
    CHECK(stats.shouts_count == 7);
    CHECK(stats.total_session_seconds == 9300);
    CHECK(stats.mean_session_duration_s == 9300.0);
    CHECK(stats.mean_shouts_per_session == 7.0);
    CHECK(stats.days_with_sessions == 1);
    // gaps 52, 36, 26, 10, 30, 1 minutes
    CHECK(stats.intershout_gap_histogram == std::array<std::size_t, kGapBucketCount>{1, 0, 1, 1, 3, 0});
    CHECK(stats.validation.pending == 1);
    check_invariants(stats);
}

TEST_CASE("compute_stats edge cases") {
    ManualClock clock(fixture::ts("2013-05-26T00:00:00Z"));
    Store store(clock);
    fixture::load_panel(store, clock);
    SessionCatalog catalog(store, TimeslotConfig{});

    const auto empty = compute_stats(store, catalog, NickName::from("v1z"),
                                     {fixture::ts("2014-01-01T00:00:00Z"), fixture::ts("2014-01-02T00:00:00Z")});
    CHECK(empty.sessions_count == 0);
    CHECK(empty.shouts_count == 0);
    CHECK(empty.total_session_seconds == 0);
    CHECK(empty.mean_session_duration_s == 0.0);
    CHECK(histogram_total(empty) == 0);
    CHECK(empty.days_with_sessions == 0);

    try {
        compute_stats(store, catalog, NickName::from("nobody"), kDay27);
        FAIL("expected UnknownDeveloper");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownDeveloper);
    }
    CHECK_THROWS_AS(compute_stats(store, catalog, NickName::from("v1z"), {kDay27.to, kDay27.from}), Error);
}

TEST_CASE("compute_stats matches a synthetic corpus with known parameters") {
    // D days, k sessions a day, m shouts per session spaced g minutes apart
    struct Params {
        int days, per_day, shouts, gap_min;
    };
    for (const Params p : {Params{5, 2, 8, 12}, Params{3, 3, 2, 45}, Params{7, 1, 13, 7}, Params{2, 4, 1, 0}}) {
        ManualClock clock(fixture::ts("2013-06-01T00:00:00Z"));
        Store store(clock);
        store.upsert_developer(fixture::developer("v1z"));
        SessionCatalog catalog(store, TimeslotConfig{});
        std::uint64_t seq = 0;
        for (int d = 0; d < p.days; ++d) {
            for (int k = 0; k < p.per_day; ++k) {
                const auto start = fixture::ts("2013-06-01T01:00:00Z") + std::chrono::days{d} + std::chrono::hours{5 * k};
                for (int i = 0; i < p.shouts; ++i) {
                    const auto at = start + Minutes{p.gap_min * i};
                    clock.set(std::max(clock.now(), at));
                    store.append_shout({NickName::from("v1z"), "step", at, Origin::cli, {"gen", ++seq}});
                }
            }
        }
        const auto s = compute_stats(store, catalog, NickName::from("v1z"), {});
        const std::size_t sessions = static_cast<std::size_t>(p.days * p.per_day);
        CHECK(s.sessions_count == sessions);
        CHECK(s.shouts_count == sessions * static_cast<std::size_t>(p.shouts));
        CHECK(s.total_session_seconds == static_cast<std::int64_t>(sessions) * (p.shouts - 1) * p.gap_min * 60);
        CHECK(s.days_with_sessions == static_cast<std::size_t>(p.days));
        CHECK(s.intershout_gap_histogram[gap_bucket(Minutes{p.gap_min})] == sessions * (p.shouts - 1));
        check_invariants(s);
    }
}

TEST_CASE("validation counts follow verdicts") {
    ManualClock clock(fixture::ts("2013-05-26T00:00:00Z"));
    Store store(clock);
    fixture::load_panel(store, clock);
    SessionCatalog catalog(store, TimeslotConfig{});
    ValidationOptions opts;
    opts.seed = 1;
    ValidationEngine engine(store, catalog, opts);
    const auto issued = engine.close_and_assign(fixture::ts("2013-06-01T00:00:00Z"));
    for (const auto& i : issued) {
        if (i.assignment.author.str() == "hybrid") engine.record_verdict(i.token, "invalid", std::string("vague"));
        if (i.assignment.author.str() == "v1z") engine.record_verdict(i.token, "valid", std::nullopt);
    }
    const auto hybrid = compute_stats(store, catalog, NickName::from("hybrid"), {});
    CHECK(hybrid.validation.invalid == hybrid.sessions_count);
    const auto v1z = compute_stats(store, catalog, NickName::from("v1z"), {});
    CHECK(v1z.validation.valid == 2);
    CHECK(v1z.validation.validated == 2);
    // the 27/05 window starts mid-way through the canonical session and inherits its verdict
    CHECK(compute_stats(store, catalog, NickName::from("v1z"), kDay27).validation.valid == 1);
    check_invariants(hybrid);
    check_invariants(v1z);
}

TEST_CASE("extending the window never decreases counts") {
    ManualClock clock(fixture::ts("2013-05-01T00:00:00Z"));
    Store store(clock);
    store.upsert_developer(fixture::developer("v1z"));
    std::mt19937_64 rng(5);
    for (std::uint64_t i = 1; i <= 400; ++i) {
        const auto at = fixture::ts("2013-05-01T00:00:00Z") +
                        Seconds{std::uniform_int_distribution<std::int64_t>(0, 20 * 24 * 3600)(rng)};
        store.append_shout({NickName::from("v1z"), "x", at, Origin::cli, {"r", i}});
    }
    SessionCatalog catalog(store, TimeslotConfig{});
    for (int trial = 0; trial < 100; ++trial) {
        auto pick = [&] {
            return fixture::ts("2013-05-01T00:00:00Z") +
                   Seconds{std::uniform_int_distribution<std::int64_t>(0, 20 * 24 * 3600)(rng)};
        };
        auto a = pick(), b = pick();
        if (a > b) std::swap(a, b);
        const auto narrow = compute_stats(store, catalog, NickName::from("v1z"), {a, b});
        const auto wide = compute_stats(store, catalog, NickName::from("v1z"),
                                        {a - Seconds{std::uniform_int_distribution<int>(0, 86400)(rng)},
                                         b + Seconds{std::uniform_int_distribution<int>(0, 86400)(rng)}});
        CHECK(wide.sessions_count >= narrow.sessions_count);
        CHECK(wide.shouts_count >= narrow.shouts_count);
        CHECK(wide.total_session_seconds >= narrow.total_session_seconds);
        CHECK(wide.days_with_sessions >= narrow.days_with_sessions);
        check_invariants(narrow);
        check_invariants(wide);
    }
}

TEST_CASE("stats are identical after a restart") {
    testing::TempDir dir;
    ManualClock clock(fixture::ts("2013-05-26T00:00:00Z"));
    std::string before;
    {
        Store store(clock, StoreOptions{dir / "journal.log", false});
        fixture::load_panel(store, clock);
        SessionCatalog catalog(store, TimeslotConfig{});
        before = to_json(team_report(store, catalog, {})).dump();
    }
    Store store(clock, StoreOptions{dir / "journal.log", false});
    SessionCatalog catalog(store, TimeslotConfig{});
    CHECK(to_json(team_report(store, catalog, {})).dump() == before);
}

TEST_CASE("team_report compliance under both readings") {
    ManualClock clock(fixture::ts("2013-06-01T00:00:00Z"));
    Store store(clock);
    store.upsert_developer(fixture::developer("hybrid"));
    store.upsert_developer(fixture::developer("filter0"));
    std::uint64_t seq = 0;
    auto shout = [&](std::string_view nick, Timestamp at) {
        clock.set(std::max(clock.now(), at));
        store.append_shout({NickName::from(nick), "work", at, Origin::cli, {"c", ++seq}});
    };
    // hybrid: one 2h05m session built from 5-minute shouts
    const auto h0 = fixture::ts("2013-06-03T09:00:00Z");
    for (int i = 0; i <= 25; ++i) shout("hybrid", h0 + Minutes{5 * i});
    // filter0: two separate 1h sessions
    const auto f0 = fixture::ts("2013-06-03T08:00:00Z");
    for (int i = 0; i <= 4; ++i) shout("filter0", f0 + Minutes{15 * i});
    for (int i = 0; i <= 4; ++i) shout("filter0", f0 + 4h + Minutes{15 * i});

    SessionCatalog catalog(store, TimeslotConfig{});
    const auto report = team_report(store, catalog,
                                    {fixture::ts("2013-06-03T00:00:00Z"), fixture::ts("2013-06-03T23:59:59Z")});
    REQUIRE(report.days.size() == 2);
    for (const auto& d : report.days) {
        if (d.nick.str() == "hybrid") {
            CHECK(d.longest_session_s == 7500);
            CHECK(d.single_session_rule);
            CHECK(d.cumulative_rule);
        } else {
            CHECK(d.longest_session_s == 3600);
            CHECK(d.total_session_s == 7200);
            CHECK_FALSE(d.single_session_rule);
            CHECK(d.cumulative_rule);
        }
    }
    CHECK(report.sessions_count == 3);
    CHECK(report.shouts_count == 36);
    CHECK(report.total_session_seconds == 7500 + 7200);
    CHECK(report.mean_session_duration_s == doctest::Approx(14700.0 / 3));

    const auto text = format_report(report);
    CHECK(text.find("hybrid") != std::string::npos);
    CHECK(text.find("TEAM") != std::string::npos);
    CHECK(to_json(report)["compliance"].size() == 2);
}

TEST_CASE("team_report of an empty team") {
    ManualClock clock(fixture::ts("2013-06-01T00:00:00Z"));
    Store store(clock);
    SessionCatalog catalog(store, TimeslotConfig{});
    const auto report = team_report(store, catalog, {});
    CHECK(report.developers.empty());
    CHECK(report.days.empty());
    CHECK(report.sessions_count == 0);
}
