#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "diffserve/rng.hpp"
#include "diffserve/simengine.hpp"

using namespace diffserve;

namespace {

struct Seen {
    double time;
    EventKind kind;
    uint64_t payload;
    bool operator==(const Seen&) const = default;
};

std::vector<Seen> drain(EventQueue& q, double end) {
    std::vector<Seen> log;
    q.run_until(end, [&](const Event& e) { log.push_back({e.time, e.kind, e.payload}); });
    return log;
}

} // namespace

TEST_SUITE("simengine") {

TEST_CASE("events run in time order with schedule order breaking ties") {
    EventQueue q;
    q.schedule(2.0, EventKind::ControlTick, -1, 1);
    q.schedule(1.0, EventKind::QueryArrival, -1, 2);
    q.schedule(2.0, EventKind::BatchComplete, 0, 3); // same time as the tick
    q.schedule(1.5, EventKind::BatchStart, 0, 4);

    auto log = drain(q, 10.0);
    std::vector<Seen> want{{1.0, EventKind::QueryArrival, 2},
                           {1.5, EventKind::BatchStart, 4},
                           {2.0, EventKind::ControlTick, 1},
                           {2.0, EventKind::BatchComplete, 3}};
    CHECK(log == want);
    CHECK(q.empty());
}

TEST_CASE("handlers may schedule at the current instant but never earlier") {
    EventQueue q;
    q.schedule(1.0, EventKind::QueryArrival);
    size_t n = q.run_until(10.0, [&](const Event& e) {
        if (e.kind == EventKind::QueryArrival) {
            CHECK_NOTHROW(q.schedule(q.now(), EventKind::BatchStart)); // at now: fine
            CHECK_THROWS_AS(q.schedule(q.now() - 0.5, EventKind::BatchStart),
                            std::logic_error);
        }
    });
    CHECK(n == 2); // the at-now event ran after the arrival
    CHECK(q.now() == 1.0);
}

TEST_CASE("run_until respects the horizon and reports the count") {
    EventQueue q;
    q.schedule(1.0, EventKind::QueryArrival);
    q.schedule(2.0, EventKind::QueryArrival);
    q.schedule(7.0, EventKind::QueryArrival);

    CHECK(q.run_until(2.5, [](const Event&) {}) == 2);
    CHECK(q.now() == 2.5);
    CHECK(q.pending() == 1);

    CHECK(q.run_until(100.0, [](const Event&) {}) == 1);
    CHECK(q.now() == 7.0); // queue drained: clock rests on the last event
    CHECK(q.empty());

    CHECK(q.run_until(200.0, [](const Event&) {}) == 0);
    CHECK(q.now() == 200.0); // nothing to do: clock jumps to the horizon
}

TEST_CASE("identical schedules produce identical logs") {
    auto build = [] {
        EventQueue q;
        q.schedule(3.0, EventKind::TraceEnd);
        for (int i = 0; i < 50; ++i)
            q.schedule(0.05 * i, EventKind::QueryArrival, -1, static_cast<uint64_t>(i));
        return q;
    };
    EventQueue a = build();
    EventQueue b = build();
    CHECK(drain(a, 100.0) == drain(b, 100.0));
}

TEST_CASE("event kinds have readable names") {
    CHECK(std::string(to_string(EventKind::QueryArrival)) == "QueryArrival");
    CHECK(std::string(to_string(EventKind::TraceEnd)) == "TraceEnd");
}

TEST_CASE("random streams are reproducible and name-separated") {
    RandomStream a(42, "arrivals");
    RandomStream b(42, "arrivals");
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RandomStream c(42, "arrivals");
    RandomStream d(42, "query");
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ = differ || (c.next_u64() != d.next_u64());
    CHECK(differ);

    RandomStream u(7, "u");
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
    RandomStream e(7, "e");
    for (int i = 0; i < 1000; ++i) REQUIRE(e.exponential(2.0) > 0.0);

    // Box-Muller consumes both draws: interleaving other calls between
    // normal() calls does not change which normals come out.
    RandomStream n1(9, "n");
    double first = n1.normal();
    static_cast<void>(n1.uniform());
    double second = n1.normal();
    RandomStream n2(9, "n");
    CHECK(n2.normal() == first);
    static_cast<void>(n2.uniform());
    CHECK(n2.normal() == second);
}

} // TEST_SUITE
