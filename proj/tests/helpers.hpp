#pragma once

// Shared fixtures for the test suites: throwaway directories/files, small
// hand-built cascades with easily checked arithmetic, and a policy that
// applies one fixed plan so cluster behavior can be probed in isolation.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "diffserve/allocator.hpp"
#include "diffserve/policies.hpp"
#include "diffserve/profiles.hpp"
#include "diffserve/workload.hpp"

namespace testutil {

// Fresh empty directory under the system temp dir; unique per call.
inline std::string temp_dir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    auto base = std::filesystem::temp_directory_path() /
                ("diffserve_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(base);
    return base.string();
}

inline std::string write_file(const std::string& dir, const std::string& name,
                              const std::string& content) {
    auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    return path;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Light serves 10 qps/server at b=1, heavy 1 qps/server at b=1; generous
// SLO. With the uniform prior (f(t) = t) feasibility arithmetic is exact.
inline diffserve::CascadeProfile toy_cascade(double slo = 100.0) {
    diffserve::CascadeProfile c;
    c.name = "toy";
    c.light = {"toy-light", {{1, 0.1}}};
    c.heavy = {"toy-heavy", {{1, 1.0}}};
    c.deferral = diffserve::DeferralCurve::uniform_prior();
    c.slo_seconds = slo;
    return c;
}

// Batch-profiled pair shaped like the shipped cascade 1 tables.
inline diffserve::CascadeProfile batched_cascade(double slo = 5.0) {
    diffserve::CascadeProfile c;
    c.name = "batched";
    c.light = {"b-light", {{1, 0.10}, {2, 0.13}, {4, 0.18}, {8, 0.30}, {16, 0.52}}};
    c.heavy = {"b-heavy", {{1, 1.78}, {2, 1.90}}};
    c.deferral = diffserve::DeferralCurve::uniform_prior();
    c.slo_seconds = slo;
    return c;
}

inline std::vector<double> full_grid(double step = 0.01) {
    std::vector<double> g;
    for (int k = 0;; ++k) {
        double t = k * step;
        if (t > 1.0 + 1e-12) break;
        g.push_back(std::min(t, 1.0));
    }
    return g;
}

// Hand-built query stream: fixed confidence and qualities, deadline at
// arrival + slo, ids equal to positions as the simulation requires.
inline std::vector<diffserve::Query> make_queries(const std::vector<double>& arrivals,
                                                  double slo, double confidence,
                                                  double quality_light = 0.6,
                                                  double quality_heavy = 1.0) {
    std::vector<diffserve::Query> qs;
    qs.reserve(arrivals.size());
    for (size_t i = 0; i < arrivals.size(); ++i) {
        diffserve::Query q;
        q.id = i;
        q.arrival = arrivals[i];
        q.deadline = arrivals[i] + slo;
        q.confidence = confidence;
        q.quality_light = quality_light;
        q.quality_heavy = quality_heavy;
        qs.push_back(q);
    }
    return qs;
}

inline std::vector<double> spaced(double start, double step, int n) {
    std::vector<double> a;
    a.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) a.push_back(start + step * i);
    return a;
}

// Applies the same plan at every tick; lets cluster tests pin routing,
// batching, and threshold without the solver in the loop.
class PinnedPlanPolicy : public diffserve::Policy {
public:
    explicit PinnedPlanPolicy(diffserve::AllocationPlan plan) : plan_(plan) {}
    diffserve::PolicyKind kind() const override { return diffserve::PolicyKind::diffserve; }
    diffserve::AllocationPlan plan(const diffserve::AllocationProblem&) override {
        return plan_;
    }

private:
    diffserve::AllocationPlan plan_;
};

} // namespace testutil
