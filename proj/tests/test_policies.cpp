#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"

#include "diffserve/cluster.hpp"
#include "diffserve/policies.hpp"
#include "diffserve/workload.hpp"

using namespace diffserve;

namespace {

RunOutput run_policy(Policy& policy, const CascadeProfile& c, const Trace& trace,
                     std::vector<Query> qs, int servers, uint64_t seed = 0) {
    ClusterConfig cfg;
    cfg.servers = servers;
    cfg.seed = seed;
    Simulation sim(c, trace, std::move(qs), policy, cfg);
    return sim.run();
}

} // namespace

TEST_SUITE("policies") {

TEST_CASE("policy names round-trip through parse and to_string") {
    for (PolicyKind k : {PolicyKind::diffserve, PolicyKind::diffserve_static,
                         PolicyKind::clipper_light, PolicyKind::clipper_heavy,
                         PolicyKind::proteus_like, PolicyKind::abl_static_threshold,
                         PolicyKind::abl_aimd_batching, PolicyKind::abl_no_queuing_model}) {
        CHECK(parse_policy_kind(to_string(k)) == k);
        auto policy = make_policy({.kind = k});
        CHECK(policy->kind() == k);
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_policy_kind("turbo")),
                         doctest::Contains("turbo"), std::invalid_argument);
}

TEST_CASE("default policy behavior: light entry, strict-threshold deferral") {
    auto policy = make_policy({.kind = PolicyKind::diffserve});
    RandomStream rng(0, "routing");
    CHECK(policy->entry_stage(AllocationPlan{}, rng) == ModelKind::light);
    CHECK(policy->defers(0.49, 0.5));
    CHECK_FALSE(policy->defers(0.5, 0.5)); // boundary stays light
    CHECK_FALSE(policy->defers(0.9, 0.5));
    CHECK(policy->uses_discriminator());
    CHECK(policy->live_batch(ModelKind::light) == 0); // no override by default
}

TEST_CASE("aimd_update walks the profiled batch ladder") {
    ModelProfile m{"l", {{1, 0.10}, {2, 0.13}, {4, 0.18}, {8, 0.30}, {16, 0.52}}};
    CHECK(aimd_update(m, 8, true, 1, 0.5) == 4);   // halve on timeout
    CHECK(aimd_update(m, 2, true, 1, 0.5) == 1);
    CHECK(aimd_update(m, 1, true, 1, 0.5) == 1);   // floor
    CHECK(aimd_update(m, 4, false, 1, 0.5) == 8);  // 5 rounds up the ladder
    CHECK(aimd_update(m, 16, false, 1, 0.5) == 16); // cap
    CHECK(aimd_update(m, 6, true, 1, 0.5) == 2);   // off-ladder: largest <= 3
    CHECK(aimd_update(m, 6, false, 1, 0.5) == 8);  // off-ladder: smallest >= 7
    CHECK(aimd_update(m, 8, true, 1, 0.25) == 2);
}

TEST_CASE("clipper_light serves everything on the light model alone") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, std::vector<double>(30, 2.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     100.0, 0.1); // low confidence would defer
    auto policy = make_policy({.kind = PolicyKind::clipper_light, .peak_demand_qps = 2.0});

    ClusterConfig cfg;
    cfg.servers = 2;
    Simulation sim(c, trace, qs, *policy, cfg);
    RunOutput out = sim.run();

    for (const auto& p : out.plans) {
        CHECK(p.plan.x1 == 2);
        CHECK(p.plan.x2 == 0);
    }
    for (const auto& r : out.records) {
        CHECK(r.outcome == Outcome::served_light);
        CHECK_FALSE(r.heavy_start.has_value());
    }
    // No discriminator: the offline deferral curve is never touched.
    CHECK(sim.deferral_curve().total_mass == 100.0);
}

TEST_CASE("clipper_heavy routes everything straight to the heavy model") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, std::vector<double>(30, 1.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     100.0, 0.9);
    auto policy = make_policy({.kind = PolicyKind::clipper_heavy, .peak_demand_qps = 1.0});
    RunOutput out = run_policy(*policy, c, trace, qs, 2);

    for (const auto& p : out.plans) {
        CHECK(p.plan.x1 == 0);
        CHECK(p.plan.x2 == 2);
    }
    for (const auto& r : out.records) {
        CHECK(r.outcome == Outcome::served_heavy);
        CHECK(r.delivered_quality == 1.0);
        CHECK_FALSE(r.light_start.has_value());
        REQUIRE(r.heavy_start.has_value());
    }
}

TEST_CASE("proteus_like splits entry evenly when both stages are staffed") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, std::vector<double>(200, 10.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     100.0, 0.5);
    const size_t n = qs.size();
    auto policy = make_policy({.kind = PolicyKind::proteus_like});
    RunOutput out = run_policy(*policy, c, trace, qs, 8, /*seed=*/5);

    // 10 qps over 8 toy servers: heavy-only cannot cover, even split can.
    for (const auto& p : out.plans) {
        CHECK(p.plan.x1 > 0);
        CHECK(p.plan.x2 > 0);
    }
    size_t to_heavy = 0;
    for (const auto& r : out.records) {
        bool both_legs = r.light_start.has_value() && r.heavy_start.has_value();
        CHECK_FALSE(both_legs); // entry routing only, never a cascade hop
        if (r.heavy_start.has_value()) to_heavy++;
    }
    double frac = static_cast<double>(to_heavy) / static_cast<double>(n);
    CHECK(frac > 0.46);
    CHECK(frac < 0.54);
}

TEST_CASE("static plan equals the adaptive one when demand never moves") {
    auto c = testutil::toy_cascade();
    Trace trace{1.0, std::vector<double>(60, 2.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     100.0, 0.5);

    auto dynamic = make_policy({.kind = PolicyKind::diffserve});
    RunOutput a = run_policy(*dynamic, c, trace, qs, 4);

    auto frozen = make_policy(
        {.kind = PolicyKind::diffserve_static, .peak_demand_qps = trace.peak()});
    RunOutput b = run_policy(*frozen, c, trace, qs, 4);

    REQUIRE(a.plans.size() == b.plans.size());
    for (size_t k = 0; k < a.plans.size(); ++k) {
        CHECK(a.plans[k].plan.threshold == b.plans[k].plan.threshold);
        CHECK(a.plans[k].plan.x1 == b.plans[k].plan.x1);
        CHECK(a.plans[k].plan.x2 == b.plans[k].plan.x2);
        CHECK(a.plans[k].plan.b1 == b.plans[k].plan.b1);
        CHECK(a.plans[k].plan.b2 == b.plans[k].plan.b2);
    }
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].outcome == b.records[i].outcome);
        CHECK(a.records[i].completion == b.records[i].completion);
    }
}

TEST_CASE("static tracks the adaptive policy even while the curve reshapes the threshold") {
    // Tight regime: heavy capacity cannot absorb everything, so the chosen
    // threshold moves as observed confidences replace the flat prior. The
    // peak-provisioned policy must still mirror the adaptive one exactly on
    // a constant trace, because it solves the same problem every tick.
    auto c = load_cascade("configs/cascades.profiles", "cascade1");
    Trace trace{1.0, std::vector<double>(120, 20.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     c.slo_seconds, 0.5);

    auto dynamic = make_policy({.kind = PolicyKind::diffserve});
    RunOutput a = run_policy(*dynamic, c, trace, qs, 16);

    auto pinned = make_policy(
        {.kind = PolicyKind::diffserve_static, .peak_demand_qps = trace.peak()});
    RunOutput b = run_policy(*pinned, c, trace, qs, 16);

    REQUIRE(a.plans.size() == b.plans.size());
    CHECK(a.plans.front().plan.threshold != a.plans.back().plan.threshold);
    for (size_t k = 0; k < a.plans.size(); ++k) {
        CHECK(a.plans[k].plan.threshold == b.plans[k].plan.threshold);
        CHECK(a.plans[k].plan.x1 == b.plans[k].plan.x1);
        CHECK(a.plans[k].plan.x2 == b.plans[k].plan.x2);
    }
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].outcome == b.records[i].outcome);
        CHECK(a.records[i].completion == b.records[i].completion);
    }
}

TEST_CASE("the pinned-threshold ablation never moves its threshold") {
    auto c = testutil::toy_cascade();
    std::vector<double> rates(30, 1.0);
    rates.insert(rates.end(), 30, 8.0);
    Trace trace{1.0, rates};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     100.0, 0.5);
    auto policy =
        make_policy({.kind = PolicyKind::abl_static_threshold, .fixed_threshold = 0.35});
    RunOutput out = run_policy(*policy, c, trace, qs, 4);

    REQUIRE(out.plans.size() == 6);
    for (const auto& p : out.plans) CHECK(p.plan.threshold == 0.35);
}

TEST_CASE("the heuristic queuing ablation matches the default when queues are empty") {
    // Loose SLO and light load: both 2*e(b) and a near-zero Little's-law
    // wait pass the latency check, so the plans must coincide.
    auto c = testutil::toy_cascade();
    Trace trace{1.0, std::vector<double>(60, 2.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     100.0, 0.5);

    auto littles = make_policy({.kind = PolicyKind::diffserve});
    RunOutput a = run_policy(*littles, c, trace, qs, 4);
    auto heuristic = make_policy({.kind = PolicyKind::abl_no_queuing_model});
    RunOutput b = run_policy(*heuristic, c, trace, qs, 4);

    REQUIRE(a.plans.size() == b.plans.size());
    for (size_t k = 0; k < a.plans.size(); ++k) {
        CHECK(a.plans[k].plan.threshold == b.plans[k].plan.threshold);
        CHECK(a.plans[k].plan.x1 == b.plans[k].plan.x1);
        CHECK(a.plans[k].plan.x2 == b.plans[k].plan.x2);
    }
}

TEST_CASE("aimd policy starts small and climbs the ladder batch by batch") {
    auto c = testutil::batched_cascade(50.0);
    auto policy = make_policy({.kind = PolicyKind::abl_aimd_batching});

    // Before the first plan the policy imposes nothing.
    CHECK(policy->live_batch(ModelKind::light) == 0);
    policy->observe_batch(ModelKind::light, false); // ignored ahead of a plan
    CHECK(policy->live_batch(ModelKind::light) == 0);

    AllocationProblem p;
    p.cascade = &c;
    p.demand_qps = 4.0;
    p.total_servers = 4;
    p.threshold_grid = testutil::full_grid();
    AllocationPlan plan = policy->plan(p);
    CHECK(plan.b1 == 1); // slow start at the smallest profiled batches
    CHECK(plan.b2 == 1);
    CHECK(policy->live_batch(ModelKind::light) == 1);

    policy->observe_batch(ModelKind::light, false);
    CHECK(policy->live_batch(ModelKind::light) == 2);
    policy->observe_batch(ModelKind::light, false);
    CHECK(policy->live_batch(ModelKind::light) == 4);
    policy->observe_batch(ModelKind::light, true); // timeout halves
    CHECK(policy->live_batch(ModelKind::light) == 2);
    CHECK(policy->live_batch(ModelKind::heavy) == 1); // untouched

    // End to end with no timeouts, additive increase reaches the cap.
    Trace trace{1.0, std::vector<double>(60, 4.0)};
    auto qs = testutil::make_queries(generate_arrivals(trace, 0, ArrivalMode::uniform),
                                     50.0, 0.9);
    auto fresh = make_policy({.kind = PolicyKind::abl_aimd_batching});
    RunOutput out = run_policy(*fresh, c, trace, qs, 4);
    CHECK(out.plans.front().plan.b1 == 1);
    CHECK(out.plans.back().plan.b1 == 16);
}

} // TEST_SUITE
