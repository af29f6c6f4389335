#include "diffserve/policies.hpp"

#include <stdexcept>

namespace diffserve {

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "diffserve") return PolicyKind::diffserve;
    if (name == "diffserve_static") return PolicyKind::diffserve_static;
    if (name == "clipper_light") return PolicyKind::clipper_light;
    if (name == "clipper_heavy") return PolicyKind::clipper_heavy;
    if (name == "proteus_like") return PolicyKind::proteus_like;
    if (name == "abl_static_threshold") return PolicyKind::abl_static_threshold;
    if (name == "abl_aimd_batching") return PolicyKind::abl_aimd_batching;
    if (name == "abl_no_queuing_model") return PolicyKind::abl_no_queuing_model;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::diffserve: return "diffserve";
        case PolicyKind::diffserve_static: return "diffserve_static";
        case PolicyKind::clipper_light: return "clipper_light";
        case PolicyKind::clipper_heavy: return "clipper_heavy";
        case PolicyKind::proteus_like: return "proteus_like";
        case PolicyKind::abl_static_threshold: return "abl_static_threshold";
        case PolicyKind::abl_aimd_batching: return "abl_aimd_batching";
        case PolicyKind::abl_no_queuing_model: return "abl_no_queuing_model";
    }
    return "?";
}

ModelKind Policy::entry_stage(const AllocationPlan&, RandomStream&) {
    return ModelKind::light;
}

bool Policy::defers(double confidence, double threshold) const {
    return confidence < threshold; // boundary serves light
}

void Policy::observe_batch(ModelKind, bool) {}

int Policy::live_batch(ModelKind) const { return 0; }

int aimd_update(const ModelProfile& m, int current_batch, bool slo_timeout, int add_step,
                double mult_factor) {
    auto sizes = m.batch_sizes(); // ascending
    if (slo_timeout) {
        double target = current_batch * mult_factor;
        int next = sizes.front(); // floor at the smallest profiled batch
        for (int b : sizes)
            if (b <= target) next = b;
        return next;
    }
    int want = current_batch + add_step;
    for (int b : sizes)
        if (b >= want) return b;
    return sizes.back(); // cap at the largest profiled batch
}

namespace {

class DiffServePolicy : public Policy {
public:
    PolicyKind kind() const override { return PolicyKind::diffserve; }
    AllocationPlan plan(const AllocationProblem& p) override { return solve(p); }
};

// Peak-provisioned variant: every tick solves with the demand pinned to the
// trace peak instead of the controller's estimate. Demand-blind by design,
// but the live deferral curve and queue state still flow into each solve, so
// whenever the estimate equals the peak (any constant trace) it chooses
// exactly the plans the adaptive policy does.
class DiffServeStaticPolicy : public Policy {
public:
    explicit DiffServeStaticPolicy(double peak) : peak_(peak) {}
    PolicyKind kind() const override { return PolicyKind::diffserve_static; }

    AllocationPlan plan(const AllocationProblem& p) override {
        return solve_static_peak(p, peak_);
    }

private:
    double peak_;
};

class ClipperPolicy : public Policy {
public:
    ClipperPolicy(bool light, double peak) : light_(light), peak_(peak) {}
    PolicyKind kind() const override {
        return light_ ? PolicyKind::clipper_light : PolicyKind::clipper_heavy;
    }
    ModelKind entry_stage(const AllocationPlan&, RandomStream&) override {
        return light_ ? ModelKind::light : ModelKind::heavy;
    }
    bool defers(double, double) const override { return false; }
    bool uses_discriminator() const override { return false; }

    AllocationPlan plan(const AllocationProblem& p) override {
        if (!solved_) {
            const ModelProfile& m = light_ ? p.cascade->light : p.cascade->heavy;
            frozen_ = solve_single_model(m, light_, p.total_servers, peak_,
                                         p.overprovision_lambda, p.cascade->slo_seconds);
            // Give the unused stage a harmless batch size so downstream
            // lookups never see 0.
            if (light_) frozen_.b2 = p.cascade->heavy.min_batch();
            else frozen_.b1 = p.cascade->light.min_batch();
            solved_ = true;
        }
        return frozen_;
    }

private:
    bool light_;
    double peak_;
    bool solved_ = false;
    AllocationPlan frozen_;
};

class ProteusLikePolicy : public Policy {
public:
    PolicyKind kind() const override { return PolicyKind::proteus_like; }

    ModelKind entry_stage(const AllocationPlan& plan, RandomStream& rng) override {
        // Uniform over currently hosted variants; one-sided plans route all.
        if (plan.x1 > 0 && plan.x2 > 0)
            return rng.bernoulli(0.5) ? ModelKind::heavy : ModelKind::light;
        return plan.x2 > 0 ? ModelKind::heavy : ModelKind::light;
    }
    bool defers(double, double) const override { return false; }
    bool uses_discriminator() const override { return false; }

    AllocationPlan plan(const AllocationProblem& p) override {
        AllocationPlan out = solve_even_split(p);
        if (out.b1 == 0) out.b1 = p.cascade->light.min_batch();
        if (out.b2 == 0) out.b2 = p.cascade->heavy.min_batch();
        return out;
    }
};

class StaticThresholdPolicy : public Policy {
public:
    explicit StaticThresholdPolicy(double t) : t_(t) {}
    PolicyKind kind() const override { return PolicyKind::abl_static_threshold; }
    AllocationPlan plan(const AllocationProblem& p) override {
        return solve_pinned_threshold(p, t_);
    }

private:
    double t_;
};

class AimdBatchingPolicy : public Policy {
public:
    AimdBatchingPolicy(int add, double mult) : add_(add), mult_(mult) {}
    PolicyKind kind() const override { return PolicyKind::abl_aimd_batching; }

    AllocationPlan plan(const AllocationProblem& p) override {
        cascade_ = p.cascade;
        if (b1_ == 0) { // slow start at the smallest profiled batches
            b1_ = p.cascade->light.min_batch();
            b2_ = p.cascade->heavy.min_batch();
        }
        return solve_fixed_batches(p, b1_, b2_);
    }

    void observe_batch(ModelKind model, bool slo_timeout) override {
        if (!cascade_ || b1_ == 0) return;
        if (model == ModelKind::light)
            b1_ = aimd_update(cascade_->light, b1_, slo_timeout, add_, mult_);
        else
            b2_ = aimd_update(cascade_->heavy, b2_, slo_timeout, add_, mult_);
    }

    int live_batch(ModelKind model) const override {
        return model == ModelKind::light ? b1_ : b2_;
    }

private:
    int add_;
    double mult_;
    const CascadeProfile* cascade_ = nullptr;
    int b1_ = 0, b2_ = 0;
};

class NoQueuingModelPolicy : public Policy {
public:
    PolicyKind kind() const override { return PolicyKind::abl_no_queuing_model; }
    AllocationPlan plan(const AllocationProblem& p) override {
        AllocationProblem heuristic = p;
        heuristic.queuing = QueuingModel::twice_exec;
        return solve(heuristic);
    }
};

} // namespace

std::unique_ptr<Policy> make_policy(const PolicyParams& params) {
    switch (params.kind) {
        case PolicyKind::diffserve:
            return std::make_unique<DiffServePolicy>();
        case PolicyKind::diffserve_static:
            return std::make_unique<DiffServeStaticPolicy>(params.peak_demand_qps);
        case PolicyKind::clipper_light:
            return std::make_unique<ClipperPolicy>(true, params.peak_demand_qps);
        case PolicyKind::clipper_heavy:
            return std::make_unique<ClipperPolicy>(false, params.peak_demand_qps);
        case PolicyKind::proteus_like:
            return std::make_unique<ProteusLikePolicy>();
        case PolicyKind::abl_static_threshold:
            return std::make_unique<StaticThresholdPolicy>(params.fixed_threshold);
        case PolicyKind::abl_aimd_batching:
            return std::make_unique<AimdBatchingPolicy>(params.aimd_add_step,
                                                        params.aimd_mult_factor);
        case PolicyKind::abl_no_queuing_model:
            return std::make_unique<NoQueuingModelPolicy>();
    }
    throw std::invalid_argument("unhandled policy kind");
}

} // namespace diffserve
