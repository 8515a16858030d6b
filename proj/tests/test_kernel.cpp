#include <gtest/gtest.h>

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tlmforge/tlmforge.hpp"

using namespace tlmforge;
using namespace tlmforge::literals;

TEST(Scheduler, EmptyRunReturnsZero) {
    Scheduler s;
    EXPECT_EQ(s.run(), SimTime{});
}

TEST(Scheduler, EqualTimesDispatchFifo) {
    Scheduler s;
    std::string order;
    s.schedule([&] { order += 'A'; }, 5_ps);
    s.schedule([&] { order += 'B'; }, 5_ps);
    s.run();
    EXPECT_EQ(order, "AB");
}

TEST(Scheduler, EarlierTimeFirst) {
    Scheduler s;
    std::string order;
    s.schedule([&] { order += 'A'; }, 5_ps);
    s.schedule([&] { order += 'B'; }, 3_ps);
    EXPECT_EQ(s.run(), 5_ps);
    EXPECT_EQ(order, "BA");
}

TEST(Scheduler, ZeroDelayRunsBeforeTimeAdvances) {
    Scheduler s;
    std::vector<std::pair<char, SimTime>> seen;
    s.schedule([&] {
        seen.emplace_back('A', s.now());
        s.schedule([&] { seen.emplace_back('C', s.now()); }, 0_ps);
    }, 2_ps);
    s.schedule([&] { seen.emplace_back('B', s.now()); }, 4_ps);
    s.run();
    ASSERT_EQ(seen.size(), 3u);
    EXPECT_EQ(seen[1], std::pair('C', 2_ps));
    EXPECT_EQ(seen[2].first, 'B');
}

TEST(Scheduler, CancelledEventsAreSkipped) {
    Scheduler s;
    int hits = 0;
    auto id = s.schedule([&] { ++hits; }, 1_ps);
    s.schedule([&] { ++hits; }, 2_ps);
    s.cancel(id);
    s.run();
    EXPECT_EQ(hits, 1);
}

TEST(Activity, WaitsAccumulate) {
    Scheduler s;
    auto body = [](Scheduler& s) -> Activity {
        co_await s.wait(7_ps);
        co_await s.wait(3_ps);
    };
    auto h = s.spawn(body(s));
    EXPECT_EQ(s.run(), 10_ps);
    EXPECT_TRUE(h.done());
    EXPECT_EQ(h.finished_at(), 10_ps);
}

TEST(Activity, JoinResumesAfterChild) {
    Scheduler s;
    SimTime joined_at;
    auto child = [](Scheduler& s) -> Activity { co_await s.wait(12_ps); };
    auto parent = [&](Scheduler& s) -> Activity {
        auto h = s.spawn(child(s), 3_ps);
        co_await s.wait(1_ps);
        co_await h.join();
        joined_at = s.now();
    };
    s.spawn(parent(s));
    s.run();
    EXPECT_EQ(joined_at, 15_ps);
}

TEST(Activity, JoinOnFinishedChildDoesNotSuspend) {
    Scheduler s;
    SimTime joined_at = SimTime::max();
    auto child = [](Scheduler&) -> Activity { co_return; };
    auto parent = [&](Scheduler& s) -> Activity {
        auto h = s.spawn(child(s));
        co_await s.wait(5_ps);
        co_await h.join();
        joined_at = s.now();
    };
    s.spawn(parent(s));
    s.run();
    EXPECT_EQ(joined_at, 5_ps);
}

TEST(Activity, ExceptionsPropagateFromRun) {
    Scheduler s;
    auto bad = [](Scheduler& s) -> Activity {
        co_await s.wait(1_ps);
        throw Error("E-TEST", "boom");
    };
    s.spawn(bad(s));
    EXPECT_THROW(s.run(), Error);
}

TEST(Scheduler, EventLimitTrips) {
    Scheduler s(100);
    auto forever = [](Scheduler& s) -> Activity {
        while (true) co_await s.wait(1_ps);
    };
    s.spawn(forever(s));
    try {
        s.run();
        FAIL() << "expected E-EVENT-LIMIT";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "E-EVENT-LIMIT");
    }
    EXPECT_EQ(s.dispatched(), 101u);
}

TEST(Scheduler, DefaultEventLimit) { EXPECT_EQ(Scheduler{}.event_limit(), 10'000'000u); }

namespace {

/// Random workload of activities doing waits, spawns and joins; returns the
/// dispatch sequence.
std::vector<std::pair<std::uint64_t, std::uint64_t>> random_run(std::uint64_t seed) {
    Scheduler s;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> log;
    s.on_dispatch([&](SimTime t, std::uint64_t seq) { log.emplace_back(t.ps(), seq); });
    std::mt19937_64 rng(seed);
    struct Body {
        static Activity run(Scheduler& s, std::mt19937_64& rng, int depth) {
            int steps = 1 + static_cast<int>(rng() % 4);
            for (int i = 0; i < steps; ++i) {
                co_await s.wait(SimTime(rng() % 20));
                if (depth < 3 && rng() % 3 == 0) {
                    auto h = s.spawn(run(s, rng, depth + 1), SimTime(rng() % 5));
                    if (rng() % 2) co_await h.join();
                }
            }
        }
    };
    for (int i = 0; i < 5; ++i) s.spawn(Body::run(s, rng, 0), SimTime(rng() % 10));
    s.run();
    return log;
}

} // namespace

TEST(SchedulerProperty, DeterministicAndMonotonic) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto a = random_run(seed);
        auto b = random_run(seed);
        EXPECT_EQ(a, b);
        for (std::size_t i = 1; i < a.size(); ++i) {
            EXPECT_LE(a[i - 1].first, a[i].first);
            if (a[i - 1].first == a[i].first) {
                EXPECT_LT(a[i - 1].second, a[i].second);
            }
        }
    }
}

TEST(QuantumKeeper, AdvanceAndNeedSync) {
    QuantumKeeper qk(1000_ps);
    qk.advance(500_ps);
    EXPECT_EQ(qk.local_offset(), 500_ps);
    qk.advance(499_ps);
    EXPECT_FALSE(qk.need_sync());
    qk.advance(1_ps);
    EXPECT_EQ(qk.local_offset(), 1000_ps);
    EXPECT_TRUE(qk.need_sync());
    QuantumKeeper zero;
    EXPECT_TRUE(zero.need_sync());
    zero.advance(0_ps);
    EXPECT_EQ(zero.local_offset(), 0_ps);
}

TEST(QuantumKeeper, OverflowThrows) {
    QuantumKeeper qk;
    qk.advance(SimTime::max());
    EXPECT_THROW(qk.advance(1_ps), Error);
}

TEST(QuantumKeeper, SyncSuspendsForOffset) {
    Scheduler s;
    SimTime resumed;
    SimTime offset_after = SimTime::max();
    auto body = [&](Scheduler& s) -> Activity {
        co_await s.wait(100_ps);
        QuantumKeeper qk(1000_ps);
        qk.advance(300_ps);
        co_await qk.sync(s);
        resumed = s.now();
        offset_after = qk.local_offset();
    };
    s.spawn(body(s));
    s.run();
    EXPECT_EQ(resumed, 400_ps);
    EXPECT_EQ(offset_after, 0_ps);
}

TEST(QuantumKeeper, ZeroOffsetSyncStaysAtSameTime) {
    Scheduler s;
    SimTime resumed = SimTime::max();
    auto body = [&](Scheduler& s) -> Activity {
        co_await s.wait(42_ps);
        QuantumKeeper qk;
        co_await qk.sync(s);
        resumed = s.now();
    };
    s.spawn(body(s));
    s.run();
    EXPECT_EQ(resumed, 42_ps);
}

TEST(QuantumKeeper, TwoActivitiesAgreeAfterSync) {
    Scheduler s;
    std::vector<SimTime> seen;
    auto body = [&](Scheduler& s, SimTime step) -> Activity {
        QuantumKeeper qk(10'000_ps);
        qk.advance(step);
        co_await qk.sync(s);
        co_await s.wait(SimTime(500) - step);
        seen.push_back(s.now());
    };
    s.spawn(body(s, 200_ps));
    s.spawn(body(s, 300_ps));
    s.run();
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[0], seen[1]);
}
