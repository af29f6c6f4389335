#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffserve {

// Offered demand: one rate per fixed-length interval.
struct Trace {
    double interval_seconds = 1.0;
    std::vector<double> rates; // queries/sec, one per interval

    double duration() const { return interval_seconds * static_cast<double>(rates.size()); }
    double peak() const;
};

// Reads one non-negative rate per line (blank lines skipped, '#' comments
// allowed). Errors carry the file name and 1-based line number.
Trace load_trace(const std::string& path, double interval_seconds = 1.0);

// Affine re-scale so min(rates) -> new_min and max(rates) -> new_max, shape
// preserved, endpoints exact. A constant trace only admits new_min == new_max.
Trace scale_trace(const Trace& t, double new_min, double new_max);

enum class ArrivalMode { poisson, uniform };

// Arrival timestamps over [0, duration), strictly increasing.
//
// Both modes run a unit-rate point process through the trace's cumulative
// rate function R(t) (piecewise linear), so interval boundaries are handled
// exactly: uniform places points at R(t) = 0, 1, 2, ...; poisson uses
// cumulative Exp(1) gaps, which is the standard time-change construction of
// an inhomogeneous Poisson process.
std::vector<double> generate_arrivals(const Trace& trace, uint64_t seed, ArrivalMode mode);

// Latent per-query ground truth, fixed at arrival. delivered quality later
// depends on which model actually served the query.
struct Query {
    uint64_t id = 0;
    double arrival = 0.0;
    double deadline = 0.0;      // arrival + SLO
    double quality_light = 0.0; // quality if the light model's output is delivered
    double quality_heavy = 0.0; // quality if deferred to the heavy model
    double confidence = 0.0;    // discriminator score for the light output, in [0,1]
};

// Generative model tying query difficulty, quality gap, and discriminator
// confidence together. Heavy output quality is the 1.0 baseline; the light
// model beats it on easy queries (P = easy_fraction) and loses on the rest,
// with confidence positively correlated to the gap.
struct QueryOutcomeModel {
    double easy_fraction = 0.3;
    double quality_gap_scale = 1.0;   // half-normal scale of |quality gap|
    double confidence_fidelity = 1.5; // gap -> confidence slope
    double noise_sigma = 0.15;        // Gaussian noise on the confidence
    uint64_t seed = 0;
};

// Deterministic in (model.seed, id): the query stream does not depend on
// sampling order, policies, or simulation interleaving.
Query sample_query(const QueryOutcomeModel& model, uint64_t id, double arrival_time,
                   double slo_seconds);

// Single EWMA update; written as d + alpha*(obs - d) so a constant sequence
// is an exact fixed point in floating point.
double ewma_step(double prev, double obs, double alpha);

// Folds ewma_step over the history (first element seeds the estimate).
// Empty history is an error; alpha must lie in (0, 1].
double ewma_estimate(const std::vector<double>& history, double alpha);

} // namespace diffserve
