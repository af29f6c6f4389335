#include <algorithm>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"

#include "diffserve/cluster.hpp"
#include "diffserve/errors.hpp"
#include "diffserve/workload.hpp"

using namespace diffserve;

namespace {

using testutil::make_queries;
using testutil::spaced;

struct OutcomeCounts {
    uint64_t light = 0, heavy = 0, dropped = 0, late = 0;
};

OutcomeCounts count_outcomes(const std::vector<QueryRecord>& records) {
    OutcomeCounts c;
    for (const auto& r : records) {
        REQUIRE(r.outcome.has_value());
        switch (*r.outcome) {
        case Outcome::served_light: c.light++; break;
        case Outcome::served_heavy: c.heavy++; break;
        case Outcome::dropped: c.dropped++; break;
        case Outcome::late: c.late++; break;
        }
    }
    return c;
}

uint64_t intervals_arrived(const std::vector<IntervalSnapshot>& intervals) {
    uint64_t n = 0;
    for (const auto& s : intervals) n += s.arrived;
    return n;
}

} // namespace

TEST_SUITE("cluster") {

TEST_CASE("route_query joins the shortest queue, ties to the lowest id") {
    std::vector<WorkerState> ws(3);
    for (int i = 0; i < 3; ++i) ws[i].id = i;
    ws[0].queue = {1, 2, 3};
    ws[1].queue = {4};
    ws[2].queue = {5, 6};
    std::vector<WorkerState*> cands{&ws[0], &ws[1], &ws[2]};
    CHECK(route_query(cands, 99) == 1);
    CHECK(ws[1].queue.back() == 99);

    std::vector<WorkerState> tie(2);
    tie[0].id = 0;
    tie[1].id = 1;
    tie[0].queue = {1, 2};
    tie[1].queue = {3, 4};
    std::vector<WorkerState*> tied{&tie[1], &tie[0]}; // order must not matter
    CHECK(route_query(tied, 99) == 0);

    std::vector<WorkerState*> none;
    CHECK_THROWS_AS(static_cast<void>(route_query(none, 1)), InvariantError);
}

TEST_CASE("drop_predicted_late sheds hopeless queries, keeps boundary ones") {
    std::deque<uint64_t> queue{0, 1, 2};
    std::vector<double> deadline{14.0, 15.0, 20.0};
    auto remaining = [](uint64_t) { return 5.0; };
    auto dl = [&](uint64_t id) { return deadline[id]; };

    auto dropped = drop_predicted_late(queue, 10.0, remaining, dl);
    CHECK(dropped == std::vector<uint64_t>{0}); // 15 > 14 sheds
    CHECK(queue == std::deque<uint64_t>{1, 2}); // 15 == 15 survives, order kept
}

TEST_CASE("billed_latency honors the billing mode") {
    ModelProfile m{"l", {{1, 0.10}, {2, 0.13}, {4, 0.18}, {8, 0.30}, {16, 0.52}}};
    CHECK(billed_latency(m, 16, 3, false) == 0.52); // configured size billed
    CHECK(billed_latency(m, 16, 3, true) == 0.18);  // smallest cover: 4
    CHECK(billed_latency(m, 16, 16, true) == 0.52);
    CHECK(billed_latency(m, 4, 1, true) == 0.10);
    CHECK(billed_latency(m, 16, 17, true) == 0.52); // beyond the table: max
}

TEST_CASE("a single query flows arrival -> batch -> completion") {
    auto c = testutil::toy_cascade(); // e_light(1) = 0.1
    Trace trace{1.0, {1.0}};
    auto qs = make_queries({0.3}, /*slo=*/100.0, /*confidence=*/0.9);
    testutil::PinnedPlanPolicy policy({1, 0, 1, 1, 0.0, true});
    Simulation sim(c, trace, qs, policy, ClusterConfig{.servers = 1});
    RunOutput out = sim.run();

    REQUIRE(out.records.size() == 1);
    const QueryRecord& r = out.records[0];
    CHECK(r.light_start == 0.3);
    CHECK(r.light_end == doctest::Approx(0.4));
    CHECK(r.completion == doctest::Approx(0.4));
    CHECK(r.outcome == Outcome::served_light);
    CHECK(r.delivered_quality == 0.6);
    CHECK_FALSE(r.heavy_start.has_value());
    CHECK(out.plans.size() == 1);
    REQUIRE(out.intervals.size() == 1);
    CHECK(out.intervals[0].arrived == 1);
    CHECK(out.intervals[0].served_light == 1);
}

TEST_CASE("threshold 1 defers everything through the heavy stage in order") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, {2.0, 2.0}};
    auto qs = make_queries(spaced(0.0, 0.5, 4), 100.0, /*confidence=*/0.5);
    testutil::PinnedPlanPolicy policy({1, 1, 1, 1, 1.0, true});
    Simulation sim(c, trace, qs, policy, ClusterConfig{.servers = 2});
    RunOutput out = sim.run();

    CHECK(out.forced_light == 0);
    for (const QueryRecord& r : out.records) {
        REQUIRE(r.light_start.has_value());
        REQUIRE(r.light_end.has_value());
        REQUIRE(r.heavy_start.has_value());
        REQUIRE(r.heavy_end.has_value());
        CHECK(*r.light_start >= r.arrival);
        CHECK(*r.light_end >= *r.light_start);
        CHECK(*r.heavy_start >= *r.light_end); // the cascade is sequential
        CHECK(*r.heavy_end >= *r.heavy_start);
        CHECK(r.completion == r.heavy_end);
        CHECK(r.outcome == Outcome::served_heavy);
        CHECK(r.delivered_quality == 1.0);
    }
    CHECK(intervals_arrived(out.intervals) == 4);
}

TEST_CASE("threshold 0 never defers and feeds the deferral curve") {
    auto c = testutil::toy_cascade(); // uniform prior, mass 100
    Trace trace{1.0, {2.0, 2.0}};
    auto qs = make_queries(spaced(0.0, 0.5, 4), 100.0, 0.5);
    testutil::PinnedPlanPolicy policy({1, 1, 1, 1, 0.0, true});
    Simulation sim(c, trace, qs, policy, ClusterConfig{.servers = 2});
    RunOutput out = sim.run();

    for (const QueryRecord& r : out.records) {
        CHECK(r.outcome == Outcome::served_light);
        CHECK(r.delivered_quality == 0.6);
        CHECK_FALSE(r.heavy_start.has_value());
    }
    // Four confidences were observed online (decay 0.999 on mass 100).
    CHECK(sim.deferral_curve().total_mass > 100.0);
}

TEST_CASE("deferrals with no heavy pool complete light and are counted") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, {2.0}};
    auto qs = make_queries({0.0, 0.5}, 100.0, 0.2);
    testutil::PinnedPlanPolicy policy({1, 0, 1, 1, 1.0, true}); // defer wanted, no x2
    Simulation sim(c, trace, qs, policy, ClusterConfig{.servers = 1});
    RunOutput out = sim.run();

    CHECK(out.forced_light == 2);
    for (const QueryRecord& r : out.records) {
        CHECK(r.outcome == Outcome::served_light);
        CHECK(r.delivered_quality == 0.6);
        CHECK_FALSE(r.heavy_start.has_value());
    }
}

TEST_CASE("overload is shed predictively: drops happen, late never does") {
    auto c = testutil::batched_cascade(); // SLO 5, heavy serves ~0.56 qps
    Trace trace{1.0, std::vector<double>(30, 4.0)};
    auto qs = make_queries(spaced(0.0, 0.25, 120), 5.0, 0.0); // every query defers
    testutil::PinnedPlanPolicy policy({1, 1, 1, 1, 1.0, true});
    Simulation sim(c, trace, qs, policy, ClusterConfig{.servers = 2});
    RunOutput out = sim.run();

    OutcomeCounts n = count_outcomes(out.records);
    CHECK(n.light + n.heavy + n.dropped + n.late == 120);
    CHECK(n.dropped > 0);  // heavy capacity is a fraction of demand
    CHECK(n.late == 0);    // the formation-time shed is exact, nothing slips
    CHECK(n.heavy > 0);    // but the heavy pool did serve at its capacity
    for (const QueryRecord& r : out.records) {
        if (r.outcome == Outcome::dropped) {
            CHECK_FALSE(r.completion.has_value());
            CHECK_FALSE(r.delivered_quality.has_value());
        } else {
            REQUIRE(r.completion.has_value());
            CHECK(*r.completion <= r.deadline);
        }
    }
    CHECK(out.plans.size() == 3); // ticks at 0, 10, 20
    CHECK(intervals_arrived(out.intervals) == 120);
}

TEST_CASE("controller ticks on schedule and bootstraps from the trace") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, std::vector<double>(60, 2.0)};
    auto arrivals = generate_arrivals(trace, 0, ArrivalMode::uniform);
    auto qs = make_queries(arrivals, 100.0, 0.5);
    testutil::PinnedPlanPolicy policy({1, 1, 1, 1, 0.0, true});
    Simulation sim(c, trace, qs, policy, ClusterConfig{.servers = 2});
    RunOutput out = sim.run();

    REQUIRE(out.plans.size() == 6); // 60s / 10s control interval
    CHECK(out.plans[0].demand_estimated == 2.0); // tick 0 reads the trace
    for (const auto& p : out.plans)
        CHECK(p.demand_estimated == 2.0); // constant rate is an exact fixed point

    REQUIRE(out.intervals.size() == 6);
    for (size_t k = 0; k < out.intervals.size(); ++k) {
        CHECK(out.intervals[k].interval_start == 10.0 * k);
        CHECK(out.intervals[k].arrived == 20);
        CHECK(out.intervals[k].demand_observed == doctest::Approx(2.0));
    }
    CHECK(intervals_arrived(out.intervals) == arrivals.size());
}

TEST_CASE("the adaptive policy lowers its threshold when demand steps up") {
    auto c = testutil::toy_cascade();
    std::vector<double> rates(30, 1.0);
    rates.insert(rates.end(), 30, 8.0);
    Trace trace{1.0, rates};
    auto arrivals = generate_arrivals(trace, 0, ArrivalMode::uniform);
    auto qs = make_queries(arrivals, 100.0, 0.5);

    auto policy = make_policy({.kind = PolicyKind::diffserve});
    Simulation sim(c, trace, qs, *policy, ClusterConfig{.servers = 4});
    RunOutput out = sim.run();

    REQUIRE(out.plans.size() == 6);
    CHECK(out.plans.front().plan.threshold == 1.0); // light load: defer everything
    CHECK(out.plans.back().plan.threshold < 1.0);   // heavy load forces selectivity
    for (const auto& p : out.plans) {
        CHECK(p.plan.x1 >= 1);
        CHECK(p.plan.x1 + p.plan.x2 <= 4);
    }
    // Worker roles after the run mirror the last applied plan.
    const auto& final_plan = out.plans.back().plan;
    int active_light = 0, active_heavy = 0;
    for (const WorkerState& w : sim.workers()) {
        if (!w.active) continue;
        (w.hosted == ModelKind::light ? active_light : active_heavy)++;
    }
    CHECK(active_light == final_plan.x1);
    CHECK(active_heavy == final_plan.x2);
}

TEST_CASE("re-hosting churn with a switch delay never loses queries") {
    auto c = testutil::toy_cascade();
    std::vector<double> rates(20, 1.0);
    rates.insert(rates.end(), 20, 8.0);
    rates.insert(rates.end(), 20, 1.0);
    Trace trace{1.0, rates};
    auto arrivals = generate_arrivals(trace, 7, ArrivalMode::poisson);
    auto qs = make_queries(arrivals, 100.0, 0.5);

    auto policy = make_policy({.kind = PolicyKind::diffserve});
    ClusterConfig cfg;
    cfg.servers = 4;
    cfg.switch_delay_seconds = 0.5;
    cfg.seed = 7;
    Simulation sim(c, trace, qs, *policy, cfg);
    RunOutput out = sim.run();

    OutcomeCounts n = count_outcomes(out.records); // REQUIREs every outcome set
    CHECK(n.light + n.heavy + n.dropped + n.late == arrivals.size());
    CHECK(intervals_arrived(out.intervals) == arrivals.size());
}

TEST_CASE("construction rejects malformed inputs") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, {1.0}};
    testutil::PinnedPlanPolicy policy({1, 0, 1, 1, 0.0, true});

    auto unsorted = make_queries({0.5, 0.2}, 100.0, 0.5);
    CHECK_THROWS_AS(Simulation(c, trace, unsorted, policy, ClusterConfig{.servers = 1}),
                    std::invalid_argument);

    auto bad_ids = make_queries({0.1, 0.2}, 100.0, 0.5);
    bad_ids[1].id = 7;
    CHECK_THROWS_AS(Simulation(c, trace, bad_ids, policy, ClusterConfig{.servers = 1}),
                    std::invalid_argument);

    auto ok = make_queries({0.1}, 100.0, 0.5);
    CHECK_THROWS_AS(Simulation(c, trace, ok, policy, ClusterConfig{.servers = 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(Simulation(c, Trace{1.0, {}}, ok, policy, ClusterConfig{.servers = 1}),
                    std::invalid_argument);

    auto too_late = make_queries({2.5}, 100.0, 0.5); // beyond the 1s trace
    Simulation sim(c, trace, too_late, policy, ClusterConfig{.servers = 1});
    CHECK_THROWS_AS(static_cast<void>(sim.run()), std::invalid_argument);

    ClusterConfig bad_grid{.servers = 1};
    bad_grid.threshold_grid_step = 0.0;
    CHECK_THROWS_AS(Simulation(c, trace, ok, policy, bad_grid),
                    std::invalid_argument);
}

} // TEST_SUITE
