#pragma once

#include <deque>
#include <functional>
#include <map>
#include <vector>

#include "diffserve/metrics.hpp"
#include "diffserve/policies.hpp"
#include "diffserve/profiles.hpp"
#include "diffserve/simengine.hpp"
#include "diffserve/workload.hpp"

namespace diffserve {

struct WorkerState {
    int id = 0;
    ModelKind hosted = ModelKind::light;
    bool active = false; // in the routing set (plans may leave spares parked)
    int batch_size = 1;
    double busy_until = 0.0;
    bool start_pending = false;     // a BatchStart event is already queued
    std::deque<uint64_t> queue;     // query ids, FIFO
};

struct ClusterConfig {
    int servers = 16;
    double control_interval_seconds = 10.0;
    double ewma_alpha = 0.3;
    double overprovision_lambda = 1.05;
    double threshold_grid_step = 0.01;
    double deferral_decay = 0.999;
    double queue_sentinel_seconds = 1e6;
    // false: partial batches billed at the configured batch's latency.
    // true: billed at the smallest profiled size covering the formed batch.
    bool bill_formed_batch = false;
    double switch_delay_seconds = 0.0; // re-hosting pause per model change
    uint64_t seed = 0;
};

struct ControllerState {
    std::vector<double> demand_history; // per-tick observed rates (qps)
    double demand_estimate = 0.0;
    AllocationPlan current_plan;
    QueueState light_queue; // as measured at the last tick
    QueueState heavy_queue;
};

struct RunOutput {
    std::vector<QueryRecord> records;
    std::vector<IntervalSnapshot> intervals;
    std::vector<PlanLogEntry> plans;
    std::vector<double> solve_micros; // per tick; diagnostics, not CSV data
    uint64_t forced_light = 0;        // deferrals completed light for lack of heavy workers
    double end_time = 0.0;            // clock after the post-trace drain
};

// Join-shortest-queue: appends the query to the candidate with the shortest
// queue (ties to the lowest worker id) and returns that worker's id.
// Candidates must be non-empty.
int route_query(const std::vector<WorkerState*>& candidates, uint64_t query_id);

// Sheds every queued query whose predicted completion (now + its remaining
// pipeline latency) lands strictly past its deadline. Survivors keep FIFO
// order; the dropped ids are returned in queue order.
std::vector<uint64_t> drop_predicted_late(std::deque<uint64_t>& queue, double now,
                                          const std::function<double(uint64_t)>& remaining_latency,
                                          const std::function<double(uint64_t)>& deadline_of);

// Latency a formed batch is billed: the configured batch's latency, or with
// formed-size billing the smallest profiled batch covering the formed count.
double billed_latency(const ModelProfile& m, int configured_batch, int formed_count,
                      bool bill_formed);

// Event-driven model of the serving cluster: load balancer, S workers,
// controller ticking every control interval, and a drain phase after the
// trace ends so accounting is complete. Single-threaded and deterministic:
// the full event sequence is a pure function of (queries, config, policy).
//
// The tick at t=0 bootstraps the demand estimate from the trace's first
// interval (there is no observed history yet); every later tick folds the
// measured per-interval rate into the EWMA estimate.
class Simulation {
public:
    // `queries` must be sorted by arrival and ids must equal their index.
    // The trace is only consulted for its duration, first rate, and tick
    // schedule; arrivals come from `queries`.
    Simulation(const CascadeProfile& cascade, const Trace& trace, std::vector<Query> queries,
               Policy& policy, const ClusterConfig& cfg);

    RunOutput run();

    // Introspection for tests.
    const std::vector<WorkerState>& workers() const { return workers_; }
    const ControllerState& controller() const { return controller_; }
    const DeferralCurve& deferral_curve() const { return cascade_.deferral; }
    double now() const { return events_.now(); }

private:
    struct Batch {
        int worker = 0;
        ModelKind model = ModelKind::light;
        std::vector<uint64_t> ids;
        bool formation_timeout = false; // queries were shed when this batch formed
    };

    struct WindowCounters {
        uint64_t arrived = 0;
        uint64_t served_light = 0, served_heavy = 0, dropped = 0, late = 0;
        uint64_t light_arrivals = 0, heavy_arrivals = 0; // per-stage queue entries
        double quality_sum = 0.0;
        uint64_t quality_n = 0;
    };

    void handle(const Event& e);
    void handle_arrival(uint64_t id);
    void handle_batch_start(int worker);
    void handle_batch_complete(int worker, uint64_t batch_id);
    void handle_control_tick(int tick);
    void handle_trace_end();

    std::vector<WorkerState*> active_set(ModelKind stage);
    void enqueue_stage(ModelKind stage, uint64_t id, bool count_arrival);
    void maybe_start(WorkerState& w);
    void complete_query(uint64_t id, ModelKind stage, double quality, bool& any_late);
    int effective_batch(const WorkerState& w) const;
    double remaining_latency(const WorkerState& w, uint64_t id) const;
    void apply_plan(const AllocationPlan& plan);
    void close_window(double end_time);

    CascadeProfile cascade_; // owned copy; the deferral curve mutates online
    Trace trace_;
    std::vector<Query> queries_;
    Policy& policy_;
    ClusterConfig cfg_;

    EventQueue events_;
    std::vector<WorkerState> workers_;
    std::map<uint64_t, Batch> batches_;
    uint64_t next_batch_id_ = 0;
    RandomStream route_rng_;

    ControllerState controller_;
    std::vector<double> grid_;
    WindowCounters win_;
    double window_start_ = 0.0;
    AllocationPlan window_plan_;
    double window_demand_est_ = 0.0;
    bool draining_ = false;

    std::vector<QueryRecord> records_;
    std::vector<uint8_t> entered_light_, entered_heavy_; // stage-arrival dedup
    std::vector<IntervalSnapshot> intervals_;
    std::vector<PlanLogEntry> plans_;
    std::vector<double> solve_micros_;
    uint64_t forced_light_ = 0;
};

} // namespace diffserve
