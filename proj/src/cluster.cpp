#include "diffserve/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "diffserve/allocator.hpp"
#include "diffserve/errors.hpp"

namespace diffserve {

namespace {

ModelKind opposite(ModelKind k) {
    return k == ModelKind::light ? ModelKind::heavy : ModelKind::light;
}

std::vector<double> make_grid(double step) {
    if (!(step > 0.0) || step > 1.0)
        throw std::invalid_argument("threshold grid step must be in (0, 1]");
    std::vector<double> g;
    const int n = static_cast<int>(std::lround(1.0 / step));
    g.reserve(static_cast<size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) g.push_back(static_cast<double>(k) / n);
    return g;
}

} // namespace

int route_query(const std::vector<WorkerState*>& candidates, uint64_t query_id) {
    if (candidates.empty()) throw InvariantError("route_query: no candidate workers");
    WorkerState* best = candidates.front();
    for (WorkerState* w : candidates) {
        if (w->queue.size() < best->queue.size() ||
            (w->queue.size() == best->queue.size() && w->id < best->id)) {
            best = w;
        }
    }
    best->queue.push_back(query_id);
    return best->id;
}

std::vector<uint64_t> drop_predicted_late(std::deque<uint64_t>& queue, double now,
                                          const std::function<double(uint64_t)>& remaining_latency,
                                          const std::function<double(uint64_t)>& deadline_of) {
    std::vector<uint64_t> dropped;
    std::deque<uint64_t> kept;
    for (uint64_t id : queue) {
        if (now + remaining_latency(id) > deadline_of(id))
            dropped.push_back(id);
        else
            kept.push_back(id);
    }
    queue.swap(kept);
    return dropped;
}

double billed_latency(const ModelProfile& m, int configured_batch, int formed_count,
                      bool bill_formed) {
    if (!bill_formed) return exec_latency(m, configured_batch);
    for (int b : m.batch_sizes())
        if (b >= formed_count) return exec_latency(m, b);
    return exec_latency(m, m.max_batch());
}

Simulation::Simulation(const CascadeProfile& cascade, const Trace& trace,
                       std::vector<Query> queries, Policy& policy, const ClusterConfig& cfg)
    : cascade_(cascade),
      trace_(trace),
      queries_(std::move(queries)),
      policy_(policy),
      cfg_(cfg),
      route_rng_(cfg.seed, "routing"),
      grid_(make_grid(cfg.threshold_grid_step)) {
    if (cfg_.servers < 1) throw std::invalid_argument("cluster needs at least one server");
    if (!(cfg_.control_interval_seconds > 0.0))
        throw std::invalid_argument("control interval must be positive");
    if (trace_.rates.empty()) throw std::invalid_argument("trace has no intervals");
    for (size_t i = 0; i < queries_.size(); ++i) {
        if (queries_[i].id != i)
            throw std::invalid_argument("query ids must equal their position");
        if (i > 0 && queries_[i].arrival < queries_[i - 1].arrival)
            throw std::invalid_argument("queries must be sorted by arrival");
    }
    workers_.resize(static_cast<size_t>(cfg_.servers));
    for (int i = 0; i < cfg_.servers; ++i) workers_[static_cast<size_t>(i)].id = i;
    records_.resize(queries_.size());
    for (size_t i = 0; i < queries_.size(); ++i) {
        records_[i].id = queries_[i].id;
        records_[i].arrival = queries_[i].arrival;
        records_[i].confidence = queries_[i].confidence;
        records_[i].quality_light = queries_[i].quality_light;
        records_[i].quality_heavy = queries_[i].quality_heavy;
        records_[i].deadline = queries_[i].deadline;
    }
    entered_light_.assign(queries_.size(), 0);
    entered_heavy_.assign(queries_.size(), 0);
}

RunOutput Simulation::run() {
    const double duration = trace_.duration();
    for (int k = 0;; ++k) {
        const double t = k * cfg_.control_interval_seconds;
        if (t >= duration) break;
        events_.schedule(t, EventKind::ControlTick, -1, static_cast<uint64_t>(k));
    }
    events_.schedule(duration, EventKind::TraceEnd);
    for (const Query& q : queries_) {
        if (q.arrival >= duration)
            throw std::invalid_argument("query arrives at or after the trace end");
        events_.schedule(q.arrival, EventKind::QueryArrival, -1, q.id);
    }

    events_.run_until(std::numeric_limits<double>::infinity(),
                      [this](const Event& e) { handle(e); });

    // Drain accounting: anything completed or shed after the trace end.
    if (win_.arrived + win_.served_light + win_.served_heavy + win_.dropped + win_.late > 0)
        close_window(events_.now());

    for (const QueryRecord& r : records_)
        if (!r.outcome)
            throw InvariantError("query " + std::to_string(r.id) + " never reached an outcome");
    for (const WorkerState& w : workers_)
        if (!w.queue.empty()) throw InvariantError("worker queue not drained");

    RunOutput out;
    out.records = std::move(records_);
    out.intervals = std::move(intervals_);
    out.plans = std::move(plans_);
    out.solve_micros = std::move(solve_micros_);
    out.forced_light = forced_light_;
    out.end_time = events_.now();
    return out;
}

void Simulation::handle(const Event& e) {
    switch (e.kind) {
    case EventKind::QueryArrival: handle_arrival(e.payload); break;
    case EventKind::BatchStart: handle_batch_start(e.worker); break;
    case EventKind::BatchComplete: handle_batch_complete(e.worker, e.payload); break;
    case EventKind::ControlTick: handle_control_tick(static_cast<int>(e.payload)); break;
    case EventKind::TraceEnd: handle_trace_end(); break;
    }
}

std::vector<WorkerState*> Simulation::active_set(ModelKind stage) {
    std::vector<WorkerState*> out;
    for (WorkerState& w : workers_)
        if (w.active && w.hosted == stage) out.push_back(&w);
    return out;
}

void Simulation::handle_arrival(uint64_t id) {
    win_.arrived++;
    ModelKind stage = policy_.entry_stage(controller_.current_plan, route_rng_);
    enqueue_stage(stage, id, /*count_arrival=*/true);
}

void Simulation::enqueue_stage(ModelKind stage, uint64_t id, bool count_arrival) {
    std::vector<WorkerState*> set = active_set(stage);
    if (set.empty()) {
        // A plan change can leave a stage unstaffed; serve on the other one.
        stage = opposite(stage);
        set = active_set(stage);
        if (set.empty()) throw InvariantError("no active workers on either stage");
    }
    if (count_arrival) {
        auto& flags = stage == ModelKind::light ? entered_light_ : entered_heavy_;
        if (!flags[id]) {
            flags[id] = 1;
            (stage == ModelKind::light ? win_.light_arrivals : win_.heavy_arrivals)++;
        }
    }
    const int w = route_query(set, id);
    maybe_start(workers_[static_cast<size_t>(w)]);
}

void Simulation::maybe_start(WorkerState& w) {
    if (w.start_pending || w.queue.empty()) return;
    events_.schedule(std::max(events_.now(), w.busy_until), EventKind::BatchStart, w.id);
    w.start_pending = true;
}

int Simulation::effective_batch(const WorkerState& w) const {
    const int live = policy_.live_batch(w.hosted);
    return live > 0 ? live : w.batch_size;
}

double Simulation::remaining_latency(const WorkerState& w, uint64_t id) const {
    const ModelProfile& own =
        w.hosted == ModelKind::light ? cascade_.light : cascade_.heavy;
    double lat = exec_latency(own, effective_batch(w));
    if (w.hosted == ModelKind::light) {
        const Query& q = queries_[id];
        const bool would_defer =
            policy_.defers(q.confidence, controller_.current_plan.threshold);
        if (would_defer) {
            bool heavy_hosted = false;
            for (const WorkerState& h : workers_)
                if (h.active && h.hosted == ModelKind::heavy) { heavy_hosted = true; break; }
            if (heavy_hosted) {
                const int live2 = policy_.live_batch(ModelKind::heavy);
                lat += exec_latency(cascade_.heavy,
                                    live2 > 0 ? live2 : controller_.current_plan.b2);
            }
        }
    }
    return lat;
}

void Simulation::handle_batch_start(int worker) {
    WorkerState& w = workers_[static_cast<size_t>(worker)];
    w.start_pending = false;
    const double now = events_.now();
    if (w.busy_until > now) {
        // Re-hosting pushed the idle point past this event; try again then.
        maybe_start(w);
        return;
    }
    if (w.queue.empty()) return;

    auto dropped = drop_predicted_late(
        w.queue, now, [&](uint64_t id) { return remaining_latency(w, id); },
        [&](uint64_t id) { return queries_[id].deadline; });
    for (uint64_t id : dropped) {
        records_[id].outcome = Outcome::dropped;
        win_.dropped++;
    }
    if (w.queue.empty()) {
        if (!dropped.empty()) policy_.observe_batch(w.hosted, true);
        return;
    }

    Batch b;
    b.worker = w.id;
    b.model = w.hosted;
    b.formation_timeout = !dropped.empty();
    const int configured = effective_batch(w);
    const size_t take = std::min(w.queue.size(), static_cast<size_t>(configured));
    for (size_t i = 0; i < take; ++i) {
        b.ids.push_back(w.queue.front());
        w.queue.pop_front();
    }
    const ModelProfile& m = b.model == ModelKind::light ? cascade_.light : cascade_.heavy;
    const double lat =
        billed_latency(m, configured, static_cast<int>(b.ids.size()), cfg_.bill_formed_batch);
    w.busy_until = now + lat;
    for (uint64_t id : b.ids) {
        QueryRecord& r = records_[id];
        (b.model == ModelKind::light ? r.light_start : r.heavy_start) = now;
    }
    const uint64_t bid = next_batch_id_++;
    batches_.emplace(bid, std::move(b));
    events_.schedule(w.busy_until, EventKind::BatchComplete, w.id, bid);
}

void Simulation::complete_query(uint64_t id, ModelKind stage, double quality, bool& any_late) {
    const double now = events_.now();
    QueryRecord& r = records_[id];
    r.completion = now;
    r.delivered_quality = quality;
    const bool late = now > r.deadline;
    if (late) {
        r.outcome = Outcome::late;
        win_.late++;
        any_late = true;
    } else {
        r.outcome = stage == ModelKind::light ? Outcome::served_light : Outcome::served_heavy;
        (stage == ModelKind::light ? win_.served_light : win_.served_heavy)++;
    }
    win_.quality_sum += quality;
    win_.quality_n++;
}

void Simulation::handle_batch_complete(int worker, uint64_t batch_id) {
    WorkerState& w = workers_[static_cast<size_t>(worker)];
    const double now = events_.now();
    if (w.busy_until < now) w.busy_until = now;
    auto it = batches_.find(batch_id);
    if (it == batches_.end()) throw InvariantError("completion for unknown batch");
    Batch batch = std::move(it->second);
    batches_.erase(it);

    bool any_late = false;
    if (batch.model == ModelKind::light) {
        const bool heavy_hosted = !active_set(ModelKind::heavy).empty();
        for (uint64_t id : batch.ids) {
            const Query& q = queries_[id];
            QueryRecord& r = records_[id];
            r.light_end = now;
            if (policy_.uses_discriminator())
                observe_confidence(cascade_.deferral, q.confidence, cfg_.deferral_decay);
            if (policy_.defers(q.confidence, controller_.current_plan.threshold)) {
                if (heavy_hosted) {
                    enqueue_stage(ModelKind::heavy, id, /*count_arrival=*/true);
                } else {
                    forced_light_++;
                    complete_query(id, ModelKind::light, q.quality_light, any_late);
                }
            } else {
                complete_query(id, ModelKind::light, q.quality_light, any_late);
            }
        }
        policy_.observe_batch(ModelKind::light, any_late || batch.formation_timeout);
    } else {
        for (uint64_t id : batch.ids) {
            QueryRecord& r = records_[id];
            r.heavy_end = now;
            complete_query(id, ModelKind::heavy, queries_[id].quality_heavy, any_late);
        }
        policy_.observe_batch(ModelKind::heavy, any_late || batch.formation_timeout);
    }
    maybe_start(w);
}

void Simulation::close_window(double end_time) {
    IntervalSnapshot s;
    s.interval_start = window_start_;
    const double len = end_time - window_start_;
    s.demand_observed = len > 0.0 ? static_cast<double>(win_.arrived) / len : 0.0;
    s.demand_estimated = window_demand_est_;
    s.plan = window_plan_;
    s.arrived = win_.arrived;
    s.served_light = win_.served_light;
    s.served_heavy = win_.served_heavy;
    s.dropped = win_.dropped;
    s.late = win_.late;
    s.threshold = window_plan_.threshold;
    if (win_.quality_n > 0)
        s.mean_delivered_quality = win_.quality_sum / static_cast<double>(win_.quality_n);
    intervals_.push_back(s);
    win_ = WindowCounters{};
    window_start_ = end_time;
}

void Simulation::handle_control_tick(int tick) {
    const double now = events_.now();
    double light_rate = 0.0, heavy_rate = 0.0;
    if (tick == 0) {
        controller_.demand_estimate = trace_.rates.front();
        controller_.demand_history.push_back(controller_.demand_estimate);
    } else {
        const double len = now - window_start_;
        const double observed = len > 0.0 ? static_cast<double>(win_.arrived) / len : 0.0;
        light_rate = len > 0.0 ? static_cast<double>(win_.light_arrivals) / len : 0.0;
        heavy_rate = len > 0.0 ? static_cast<double>(win_.heavy_arrivals) / len : 0.0;
        close_window(now);
        controller_.demand_history.push_back(observed);
        controller_.demand_estimate =
            ewma_step(controller_.demand_estimate, observed, cfg_.ewma_alpha);
    }

    long long light_len = 0, heavy_len = 0;
    for (const WorkerState& w : workers_) {
        if (!w.active) continue;
        if (w.hosted == ModelKind::light)
            light_len += static_cast<long long>(w.queue.size());
        else
            heavy_len += static_cast<long long>(w.queue.size());
    }
    controller_.light_queue = QueueState{light_len, light_rate};
    controller_.heavy_queue = QueueState{heavy_len, heavy_rate};

    AllocationProblem p;
    p.demand_qps = controller_.demand_estimate;
    p.total_servers = cfg_.servers;
    p.cascade = &cascade_;
    p.overprovision_lambda = cfg_.overprovision_lambda;
    p.threshold_grid = grid_;
    p.light_queue = controller_.light_queue;
    p.heavy_queue = controller_.heavy_queue;
    p.queue_sentinel_seconds = cfg_.queue_sentinel_seconds;

    const auto t0 = std::chrono::steady_clock::now();
    const AllocationPlan plan = policy_.plan(p);
    const auto t1 = std::chrono::steady_clock::now();
    solve_micros_.push_back(
        std::chrono::duration_cast<std::chrono::duration<double, std::micro>>(t1 - t0).count());

    if (plan.x1 < 0 || plan.x2 < 0 || plan.x1 + plan.x2 > cfg_.servers)
        throw InvariantError("plan places more workers than the cluster has");

    PlanLogEntry entry;
    entry.tick = tick;
    entry.time = now;
    entry.demand_estimated = controller_.demand_estimate;
    entry.plan = plan;
    plans_.push_back(entry);

    apply_plan(plan);
    controller_.current_plan = plan;
    window_plan_ = plan;
    window_demand_est_ = controller_.demand_estimate;
}

void Simulation::apply_plan(const AllocationPlan& plan) {
    // Stable role assignment: keep workers already in a role, then wake
    // parked spares, then flip workers from the other role. Spares park on
    // the light model with empty queues and take no traffic.
    std::vector<int> role(workers_.size(), -1); // 0 = light, 1 = heavy, -1 = spare
    auto assign = [&](int want, ModelKind kind) {
        int got = 0;
        auto take = [&](bool want_active, bool want_kind_match) {
            for (WorkerState& w : workers_) {
                if (got >= want) return;
                if (role[static_cast<size_t>(w.id)] != -1) continue;
                if (w.active != want_active) continue;
                if (want_kind_match != (w.hosted == kind)) continue;
                role[static_cast<size_t>(w.id)] = kind == ModelKind::light ? 0 : 1;
                ++got;
            }
        };
        take(true, true);   // already doing this job
        take(false, true);  // parked spare hosting the right model
        take(false, false); // parked spare needing a model swap
        take(true, false);  // flip from the other role
    };
    // Assign the smaller pool first so it keeps its incumbents.
    if (plan.x2 <= plan.x1) {
        assign(plan.x2, ModelKind::heavy);
        assign(plan.x1, ModelKind::light);
    } else {
        assign(plan.x1, ModelKind::light);
        assign(plan.x2, ModelKind::heavy);
    }

    std::vector<uint64_t> displaced_light, displaced_heavy;
    const double now = events_.now();
    for (WorkerState& w : workers_) {
        const int r = role[static_cast<size_t>(w.id)];
        const ModelKind new_model =
            r == 1 ? ModelKind::heavy : ModelKind::light; // spares park on light
        const bool new_active = r != -1;
        if (!w.queue.empty() && (!new_active || new_model != w.hosted)) {
            auto& sink = w.hosted == ModelKind::light ? displaced_light : displaced_heavy;
            for (uint64_t id : w.queue) sink.push_back(id);
            w.queue.clear();
        }
        if (new_model != w.hosted) {
            w.hosted = new_model;
            if (cfg_.switch_delay_seconds > 0.0)
                w.busy_until = std::max(w.busy_until, now + cfg_.switch_delay_seconds);
        }
        w.active = new_active;
        w.batch_size = w.hosted == ModelKind::light ? plan.b1 : plan.b2;
    }

    const bool heavy_hosted = !active_set(ModelKind::heavy).empty();
    for (uint64_t id : displaced_light)
        enqueue_stage(ModelKind::light, id, /*count_arrival=*/true);
    for (uint64_t id : displaced_heavy) {
        if (heavy_hosted) {
            enqueue_stage(ModelKind::heavy, id, /*count_arrival=*/true);
        } else {
            // The new plan dropped the heavy pool while deferrals were
            // queued; answer them with the light result already computed.
            bool any_late = false;
            forced_light_++;
            complete_query(id, ModelKind::light, queries_[id].quality_light, any_late);
        }
    }
    for (WorkerState& w : workers_) maybe_start(w);
}

void Simulation::handle_trace_end() {
    close_window(events_.now());
    draining_ = true;
}

} // namespace diffserve
