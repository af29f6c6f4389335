#pragma once

#include <memory>
#include <string>

#include "diffserve/allocator.hpp"
#include "diffserve/rng.hpp"

namespace diffserve {

enum class PolicyKind {
    diffserve,            // cascade + discriminator, full re-optimization per tick
    diffserve_static,     // cascade + discriminator, always provisions for trace peak
    clipper_light,        // light model on all servers, no cascade
    clipper_heavy,        // heavy model on all servers, no cascade
    proteus_like,         // dynamic allocation, random routing, no discriminator
    abl_static_threshold, // threshold pinned, servers/batches still optimized
    abl_aimd_batching,    // batches from AIMD feedback instead of the solver
    abl_no_queuing_model, // queuing delay heuristic 2*e(b) instead of Little's law
};

PolicyKind parse_policy_kind(const std::string& name);
const char* to_string(PolicyKind k);

enum class ModelKind : uint8_t { light, heavy };

// Pluggable control behavior: where queries enter, whether light outputs can
// defer, and how the per-tick plan is produced. One instance per run; the
// cluster calls plan() once per control tick (tick 0 included).
class Policy {
public:
    virtual ~Policy() = default;

    virtual PolicyKind kind() const = 0;

    // Stage a fresh query is routed to. `rng` is the dedicated routing
    // stream (only consumed by policies that randomize).
    virtual ModelKind entry_stage(const AllocationPlan& plan, RandomStream& rng);

    // Whether a light completion with this confidence defers to the heavy
    // model under threshold t. Policies without a discriminator never defer.
    virtual bool defers(double confidence, double threshold) const;

    // Discriminator users feed observed confidences back into the cascade's
    // deferral curve; baselines without one leave the curve untouched.
    virtual bool uses_discriminator() const { return true; }

    virtual AllocationPlan plan(const AllocationProblem& p) = 0;

    // Feedback per batch (`slo_timeout` = some query in the batch finished
    // past its deadline, or the worker shed predicted-late queries when the
    // batch formed). Only the AIMD ablation listens.
    virtual void observe_batch(ModelKind model, bool slo_timeout);

    // Reactive batch-size override consulted at every batch formation.
    // Returns 0 to follow the planned batch size; the AIMD ablation returns
    // its live value so updates take effect mid-window, ahead of the next
    // control tick.
    virtual int live_batch(ModelKind model) const;
};

struct PolicyParams {
    PolicyKind kind = PolicyKind::diffserve;
    double peak_demand_qps = 0.0; // static policies provision for this
    double fixed_threshold = 0.5; // abl_static_threshold
    int aimd_add_step = 1;        // abl_aimd_batching
    double aimd_mult_factor = 0.5;
};

std::unique_ptr<Policy> make_policy(const PolicyParams& params);

// AIMD batch update over the model's profiled sizes: on an SLO timeout,
// multiplicative decrease to the largest profiled batch <= current*mult
// (floor: smallest profiled); otherwise additive increase to the smallest
// profiled batch >= current+add (cap: largest profiled).
int aimd_update(const ModelProfile& m, int current_batch, bool slo_timeout, int add_step,
                double mult_factor);

} // namespace diffserve
