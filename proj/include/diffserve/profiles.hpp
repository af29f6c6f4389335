#pragma once

#include <map>
#include <string>
#include <vector>

namespace diffserve {

// Offline-measured batch execution latency for one model variant.
// Lookups are exact: only profiled batch sizes are legal.
struct ModelProfile {
    std::string name;
    std::map<int, double> latency_table; // batch size -> seconds, keyed ascending

    std::vector<int> batch_sizes() const;
    int min_batch() const { return latency_table.begin()->first; }
    int max_batch() const { return latency_table.rbegin()->first; }
};

// Seconds to execute a batch of `batch` queries. Throws std::out_of_range
// (naming the model and batch) for an unprofiled size.
double exec_latency(const ModelProfile& m, int batch);

// Steady-state throughput in queries/sec at the given batch size.
double throughput(const ModelProfile& m, int batch);

// Validates a single profile: non-empty, positive batches and latencies,
// e(b) non-decreasing and e(b)/b non-increasing across profiled sizes.
void validate_profile(const ModelProfile& m);

// Empirical distribution of discriminator confidence scores, kept as 101
// uniform bins with lower edges 0.00, 0.01, ..., 1.00 (the last bin holds
// only exact 1.0 scores). Grid-aligned with the allocator's threshold grid:
// deferral_fraction(k/100) is exact mass strictly below k/100.
struct DeferralCurve {
    std::vector<double> bin_edges; // lower edge of each bin
    std::vector<double> bin_mass;  // non-negative mass per bin
    double total_mass = 0.0;

    static constexpr int kBins = 101;

    // All-zero-mass curve; deferral_fraction is 0 everywhere on it.
    static DeferralCurve empty();
    static DeferralCurve from_samples(const std::vector<double>& confidences);
    // Flat prior over [0,1): f(t) == t on the grid. Used when a profile file
    // ships no offline samples, so a fresh cascade never plans with f == 0.
    static DeferralCurve uniform_prior();
};

// Fraction of observed mass with confidence strictly below t, t in [0,1].
// Mass within a bin counts as sitting at the bin's lower edge.
double deferral_fraction(const DeferralCurve& curve, double threshold);

// Online update: scales all existing mass by `decay` (0 < decay <= 1), then
// adds mass 1 at `confidence`'s bin. Insertion order is irrelevant at decay=1.
void observe_confidence(DeferralCurve& curve, double confidence, double decay);

void validate_curve(const DeferralCurve& curve);

// One two-stage serving pipeline: light model + discriminator, heavy model,
// a latency SLO, and the current deferral curve.
struct CascadeProfile {
    std::string name;
    ModelProfile light;
    ModelProfile heavy;
    DeferralCurve deferral;
    double slo_seconds = 0.0;
};

// Cross-model checks: light strictly faster than heavy at the smallest
// shared batch size, and the SLO admits at least one full light+heavy pass.
void validate_cascade(const CascadeProfile& c);

// Parses a profile file (format documented in README: `cascade { ... }`
// blocks with name, slo_seconds, light.latency, heavy.latency, optional
// light.name / heavy.name / deferral.samples). Unknown keys are errors;
// all errors carry the file name and line number. Every returned cascade
// has passed the validators above.
std::vector<CascadeProfile> load_profiles(const std::string& path);

// Convenience: load_profiles + pick one cascade by name.
CascadeProfile load_cascade(const std::string& path, const std::string& name);

} // namespace diffserve
