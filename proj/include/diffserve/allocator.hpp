#pragma once

#include <functional>
#include <vector>

#include "diffserve/profiles.hpp"

namespace diffserve {

// Controller-measured state of one model's queues, aggregated over all
// workers hosting that model.
struct QueueState {
    long long queue_length = 0; // queries waiting (not in a running batch)
    double arrival_rate = 0.0;  // queries/sec entering this stage
};

// Little's-law estimate of time spent waiting: queue_length / arrival_rate.
// An empty queue waits 0 regardless of rate; a non-empty queue with zero
// measured arrivals returns `sentinel` (effectively "latency-infeasible").
double queuing_delay(long long queue_length, double arrival_rate, double sentinel = 1e6);

enum class QueuingModel {
    littles_law, // q from measured queue state (default)
    twice_exec,  // q_i replaced by 2*e_i(b_i): the fixed heuristic ablation
};

struct AllocationProblem {
    double demand_qps = 0.0;
    int total_servers = 0;
    const CascadeProfile* cascade = nullptr;
    double overprovision_lambda = 1.05;   // demand is inflated to lambda*D
    std::vector<double> threshold_grid;   // ascending, must contain 0
    QueueState light_queue;
    QueueState heavy_queue;
    QueuingModel queuing = QueuingModel::littles_law;
    double queue_sentinel_seconds = 1e6;
};

struct AllocationPlan {
    int x1 = 0;             // light servers
    int x2 = 0;             // heavy servers
    int b1 = 0;             // light batch size
    int b2 = 0;             // heavy batch size
    double threshold = 0.0; // confidence threshold t
    bool feasible = false;
};

// End-to-end latency check for a (b1, b2) choice: light exec + light queue
// wait + heavy exec + heavy queue wait within the cascade's SLO.
bool latency_feasible(const AllocationProblem& p, int b1, int b2);

// Capacity check: light servers cover lambda*D, heavy servers cover the
// deferred share lambda*D*f(t), and x1+x2 fits the cluster.
bool throughput_feasible(const AllocationProblem& p, const AllocationPlan& plan);

// Exact maximization of the confidence threshold: walks the grid from the
// top, enumerating profiled batch pairs with minimal server counts, and
// returns at the first (= highest) feasible threshold. Ties at equal t
// break toward fewer total servers, then larger b1, larger b2, smaller x1.
// If no threshold is feasible, returns the best-effort t=0 plan (all
// servers light, throughput-maximal batch) with feasible=false.
//
// `log` (optional) receives one line per invocation for diagnostics.
AllocationPlan solve(const AllocationProblem& p,
                     const std::function<void(const std::string&)>& log = nullptr);

// solve() with the demand replaced by the trace's peak rate: provisioning
// that ignores the live demand estimate.
AllocationPlan solve_static_peak(AllocationProblem p, double peak_demand_qps);

// solve() with the threshold pinned (grid collapsed to fixed_t). When
// fixed_t cannot be served, returns the deficit-minimizing split at that
// same threshold with feasible=false.
AllocationPlan solve_pinned_threshold(const AllocationProblem& p, double fixed_t);

// solve() with both batch sizes pinned (externally chosen, e.g. by AIMD).
AllocationPlan solve_fixed_batches(const AllocationProblem& p, int b1, int b2);

// Batch search for a cluster dedicated to one model (Clipper-style): all S
// servers host `m`, pick the smallest profiled batch that covers lambda*D
// while leaving one-batch-cycle headroom under the SLO (2*e(b) <= SLO).
// When demand cannot be covered, picks the throughput-maximal batch under
// that headroom rule and reports feasible=false.
AllocationPlan solve_single_model(const ModelProfile& m, bool is_light, int total_servers,
                                  double demand_qps, double overprovision_lambda,
                                  double slo_seconds);

// Load-aware split for a no-discriminator router: heavy-only when heavy
// capacity alone covers demand (quality-maximal), else an even light/heavy
// split at demand/2 per side, else light-only best effort.
AllocationPlan solve_even_split(const AllocationProblem& p);

} // namespace diffserve
