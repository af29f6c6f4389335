#include "diffserve/allocator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "diffserve/errors.hpp"

namespace diffserve {

double queuing_delay(long long queue_length, double arrival_rate, double sentinel) {
    if (queue_length < 0) throw std::domain_error("queue length cannot be negative");
    if (arrival_rate < 0.0) throw std::domain_error("arrival rate cannot be negative");
    if (queue_length == 0) return 0.0;
    if (arrival_rate == 0.0) return sentinel;
    return static_cast<double>(queue_length) / arrival_rate;
}

namespace {

void check_problem(const AllocationProblem& p) {
    if (!p.cascade) throw std::invalid_argument("allocation problem has no cascade");
    if (p.total_servers < 1) throw std::domain_error("total_servers must be at least 1");
    if (!(p.demand_qps >= 0.0)) throw std::domain_error("demand must be non-negative");
    if (!(p.overprovision_lambda >= 1.0))
        throw std::domain_error("overprovision lambda must be >= 1");
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty() || grid.front() != 0.0)
        throw InvariantError("threshold grid must be non-empty and start at 0");
    for (size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw InvariantError("threshold grid must be strictly increasing");
}

double queue_wait(const AllocationProblem& p, const QueueState& q) {
    return queuing_delay(q.queue_length, q.arrival_rate, p.queue_sentinel_seconds);
}

// Smallest x with x * per_server >= need, verified against the same float
// comparison the feasibility predicate uses (a plain ceil can land one
// short when the division rounds down).
int min_servers(double need, double per_server, int cap) {
    if (need <= 0.0) return 0;
    int x = static_cast<int>(std::ceil(need / per_server));
    if (x < 1) x = 1;
    while (x <= cap && x * per_server < need) ++x;
    return x; // may exceed cap; caller checks
}

struct Candidate {
    AllocationPlan plan;
    bool valid = false;

    // Tie-break chain at equal threshold: fewer servers, larger batches
    // (fuller GPUs), then fewer light servers.
    bool better_than(const Candidate& o) const {
        if (!o.valid) return valid;
        if (!valid) return false;
        int total = plan.x1 + plan.x2, ototal = o.plan.x1 + o.plan.x2;
        if (total != ototal) return total < ototal;
        if (plan.b1 != o.plan.b1) return plan.b1 > o.plan.b1;
        if (plan.b2 != o.plan.b2) return plan.b2 > o.plan.b2;
        return plan.x1 < o.plan.x1;
    }
};

AllocationPlan best_effort_light(const AllocationProblem& p) {
    // Demand beyond capacity at every threshold: serve everything light with
    // the throughput-maximal batch, zero heavy servers.
    const auto& light = p.cascade->light;
    int best_b = light.min_batch();
    double best_T = throughput(light, best_b);
    for (int b : light.batch_sizes()) {
        double T = throughput(light, b);
        if (T >= best_T) { best_T = T; best_b = b; }
    }
    AllocationPlan plan;
    plan.x1 = p.total_servers;
    plan.x2 = 0;
    plan.b1 = best_b;
    plan.b2 = p.cascade->heavy.min_batch();
    plan.threshold = 0.0;
    plan.feasible = false;
    return plan;
}

// Core search over a given descending threshold sequence and batch sets.
Candidate search(const AllocationProblem& p, const std::vector<double>& thresholds_desc,
                 const std::vector<int>& b1s, const std::vector<int>& b2s) {
    const double need_light = p.overprovision_lambda * p.demand_qps;

    // The latency check does not depend on t or x, so admissible batch
    // pairs are fixed for the whole descent.
    std::vector<std::pair<int, int>> pairs;
    for (int b1 : b1s)
        for (int b2 : b2s)
            if (latency_feasible(p, b1, b2)) pairs.emplace_back(b1, b2);

    for (double t : thresholds_desc) {
        double f = deferral_fraction(p.cascade->deferral, t);
        double need_heavy = need_light * f;
        Candidate best;
        for (auto [b1, b2] : pairs) {
            double T1 = throughput(p.cascade->light, b1);
            double T2 = throughput(p.cascade->heavy, b2);
            int x1 = std::max(1, min_servers(need_light, T1, p.total_servers));
            if (x1 > p.total_servers) continue;
            int x2 = min_servers(need_heavy, T2, p.total_servers);
            if (x1 + x2 > p.total_servers) continue;
            Candidate c;
            c.plan = AllocationPlan{x1, x2, b1, b2, t, true};
            c.valid = true;
            if (c.better_than(best)) best = c;
        }
        if (best.valid) return best; // first feasible t is the maximum
    }
    return Candidate{};
}

std::vector<double> descending(std::vector<double> grid) {
    return {grid.rbegin(), grid.rend()};
}

} // namespace

bool latency_feasible(const AllocationProblem& p, int b1, int b2) {
    check_problem(p);
    double e1 = exec_latency(p.cascade->light, b1);
    double e2 = exec_latency(p.cascade->heavy, b2);
    double q1, q2;
    if (p.queuing == QueuingModel::twice_exec) {
        q1 = 2.0 * e1;
        q2 = 2.0 * e2;
    } else {
        q1 = queue_wait(p, p.light_queue);
        q2 = queue_wait(p, p.heavy_queue);
    }
    return e1 + q1 + e2 + q2 <= p.cascade->slo_seconds;
}

bool throughput_feasible(const AllocationProblem& p, const AllocationPlan& plan) {
    check_problem(p);
    if (plan.x1 + plan.x2 > p.total_servers) return false;
    double need = p.overprovision_lambda * p.demand_qps;
    if (plan.x1 * throughput(p.cascade->light, plan.b1) < need) return false;
    double f = deferral_fraction(p.cascade->deferral, plan.threshold);
    return plan.x2 * throughput(p.cascade->heavy, plan.b2) >= need * f;
}

AllocationPlan solve(const AllocationProblem& p,
                     const std::function<void(const std::string&)>& log) {
    check_problem(p);
    check_grid(p.threshold_grid);
    Candidate best = search(p, descending(p.threshold_grid),
                            p.cascade->light.batch_sizes(), p.cascade->heavy.batch_sizes());
    AllocationPlan plan = best.valid ? best.plan : best_effort_light(p);
    if (log) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "solve D=%.6g t=%.6g x1=%d x2=%d b1=%d b2=%d feasible=%d",
                      p.demand_qps, plan.threshold, plan.x1, plan.x2, plan.b1, plan.b2,
                      plan.feasible ? 1 : 0);
        log(buf);
    }
    return plan;
}

AllocationPlan solve_static_peak(AllocationProblem p, double peak_demand_qps) {
    p.demand_qps = peak_demand_qps;
    return solve(p);
}

AllocationPlan solve_pinned_threshold(const AllocationProblem& p, double fixed_t) {
    check_problem(p);
    if (!(fixed_t >= 0.0) || !(fixed_t <= 1.0))
        throw std::domain_error("fixed threshold must lie in [0, 1]");
    Candidate best = search(p, {fixed_t}, p.cascade->light.batch_sizes(),
                            p.cascade->heavy.batch_sizes());
    if (best.valid) return best.plan;

    // Best effort at the pinned threshold: light servers first (they gate
    // the whole pipeline), leftovers to heavy, smallest combined shortfall.
    double need = p.overprovision_lambda * p.demand_qps;
    double need_heavy = need * deferral_fraction(p.cascade->deferral, fixed_t);
    Candidate pick;
    for (int b1 : p.cascade->light.batch_sizes()) {
        for (int b2 : p.cascade->heavy.batch_sizes()) {
            double T1 = throughput(p.cascade->light, b1);
            double T2 = throughput(p.cascade->heavy, b2);
            int x1 = std::min(p.total_servers, std::max(1, min_servers(need, T1, p.total_servers)));
            int x2 = std::min(p.total_servers - x1,
                              min_servers(need_heavy, T2, p.total_servers));
            double deficit = std::max(0.0, need - x1 * T1) +
                             std::max(0.0, need_heavy - x2 * T2);
            Candidate c;
            c.plan = AllocationPlan{x1, x2, b1, b2, fixed_t, false};
            c.valid = true;
            // Reuse the tie chain with deficit prepended.
            double best_deficit = pick.valid
                ? std::max(0.0, need - pick.plan.x1 * throughput(p.cascade->light, pick.plan.b1)) +
                  std::max(0.0, need_heavy - pick.plan.x2 * throughput(p.cascade->heavy, pick.plan.b2))
                : std::numeric_limits<double>::infinity();
            if (deficit < best_deficit || (deficit == best_deficit && c.better_than(pick)))
                pick = c;
        }
    }
    return pick.plan;
}

AllocationPlan solve_fixed_batches(const AllocationProblem& p, int b1, int b2) {
    check_problem(p);
    check_grid(p.threshold_grid);
    exec_latency(p.cascade->light, b1); // validate the pinned sizes
    exec_latency(p.cascade->heavy, b2);
    Candidate best = search(p, descending(p.threshold_grid), {b1}, {b2});
    if (best.valid) return best.plan;
    double need = p.overprovision_lambda * p.demand_qps;
    double T1 = throughput(p.cascade->light, b1);
    AllocationPlan plan;
    plan.x1 = std::min(p.total_servers, std::max(1, min_servers(need, T1, p.total_servers)));
    plan.x2 = 0;
    plan.b1 = b1;
    plan.b2 = b2;
    plan.threshold = 0.0;
    plan.feasible = false;
    return plan;
}

AllocationPlan solve_single_model(const ModelProfile& m, bool is_light, int total_servers,
                                  double demand_qps, double overprovision_lambda,
                                  double slo_seconds) {
    if (total_servers < 1) throw std::domain_error("total_servers must be at least 1");
    double need = overprovision_lambda * demand_qps;

    // Steady-state headroom: a just-missed query waits one full batch cycle
    // and then executes, so 2*e(b) must fit the SLO for the batch to be
    // sustainable under load.
    std::vector<int> admissible;
    for (int b : m.batch_sizes())
        if (2.0 * exec_latency(m, b) <= slo_seconds) admissible.push_back(b);

    AllocationPlan plan;
    plan.threshold = 0.0;
    auto assign = [&](int b, bool feasible) {
        if (is_light) { plan.x1 = total_servers; plan.x2 = 0; plan.b1 = b; plan.b2 = 0; }
        else          { plan.x1 = 0; plan.x2 = total_servers; plan.b1 = 0; plan.b2 = b; }
        plan.feasible = feasible;
    };

    for (int b : admissible) {
        if (total_servers * throughput(m, b) >= need) {
            assign(b, true); // smallest admissible batch covering demand
            return plan;
        }
    }
    if (!admissible.empty()) {
        int best_b = admissible.front();
        for (int b : admissible)
            if (throughput(m, b) >= throughput(m, best_b)) best_b = b;
        assign(best_b, false);
        return plan;
    }
    assign(m.min_batch(), false); // even batch 1 exceeds the headroom rule
    return plan;
}

AllocationPlan solve_even_split(const AllocationProblem& p) {
    check_problem(p);
    const auto& light = p.cascade->light;
    const auto& heavy = p.cascade->heavy;
    const double slo = p.cascade->slo_seconds;
    const double need = p.overprovision_lambda * p.demand_qps;

    auto admissible = [&](const ModelProfile& m) {
        std::vector<int> out;
        for (int b : m.batch_sizes())
            if (2.0 * exec_latency(m, b) <= slo) out.push_back(b);
        return out;
    };
    auto cheapest = [&](const ModelProfile& m, double side_need, int cap) {
        // (servers, batch) minimizing servers, tie toward the larger batch.
        int best_x = cap + 1, best_b = 0;
        for (int b : admissible(m)) {
            int x = std::max(1, min_servers(side_need, throughput(m, b), cap));
            if (x < best_x || (x == best_x && b > best_b)) { best_x = x; best_b = b; }
        }
        return std::pair<int, int>{best_x, best_b};
    };

    // Heavy-only: quality-maximal when heavy capacity alone covers demand.
    auto [xh, bh] = cheapest(heavy, need, p.total_servers);
    if (bh != 0 && xh <= p.total_servers) {
        AllocationPlan plan{0, xh, 0, bh, 0.0, true};
        return plan;
    }

    // Even split: each hosted variant takes half the demand.
    auto [x1, b1] = cheapest(light, need / 2.0, p.total_servers);
    auto [x2, b2] = cheapest(heavy, need / 2.0, p.total_servers);
    if (b1 != 0 && b2 != 0 && x1 + x2 <= p.total_servers) {
        AllocationPlan plan{x1, x2, b1, b2, 0.0, true};
        return plan;
    }

    // Light-only best effort.
    AllocationPlan plan = solve_single_model(light, true, p.total_servers, p.demand_qps,
                                             p.overprovision_lambda, slo);
    plan.b2 = heavy.min_batch();
    return plan;
}

} // namespace diffserve
