#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffserve/allocator.hpp"

namespace diffserve {

enum class Outcome : uint8_t {
    served_light, // light output delivered within the deadline
    served_heavy, // deferred, heavy output delivered within the deadline
    dropped,      // shed before execution (predicted to miss its deadline)
    late,         // completed after its deadline (still delivered)
};

const char* to_string(Outcome o);

// Full life of one query. Optionals stay empty for stages the query never
// reached; a dropped query has no completion and no delivered quality.
struct QueryRecord {
    uint64_t id = 0;
    double arrival = 0.0;
    double deadline = 0.0;
    double confidence = 0.0;
    double quality_light = 0.0;
    double quality_heavy = 0.0;
    std::optional<double> light_start;
    std::optional<double> light_end;
    std::optional<double> heavy_start;
    std::optional<double> heavy_end;
    std::optional<double> completion;
    std::optional<Outcome> outcome;
    std::optional<double> delivered_quality;
};

// One control interval's worth of accounting, under the plan chosen at its
// opening tick. Completion counts are events inside the window, so they may
// refer to queries that arrived earlier (balanced by in-flight carryover).
struct IntervalSnapshot {
    double interval_start = 0.0;
    double demand_observed = 0.0;  // arrivals in window / window length
    double demand_estimated = 0.0; // EWMA estimate the plan was solved with
    AllocationPlan plan;
    uint64_t arrived = 0;
    uint64_t served_light = 0;
    uint64_t served_heavy = 0;
    uint64_t dropped = 0;
    uint64_t late = 0;
    double threshold = 0.0; // == plan.threshold, kept explicit
    std::optional<double> mean_delivered_quality;
};

// Deterministic per-tick plan log (one row per control tick).
struct PlanLogEntry {
    int tick = 0;
    double time = 0.0;
    double demand_estimated = 0.0;
    AllocationPlan plan;
};

// Fraction of queries arriving in [window_start, window_end) that violated
// the SLO (dropped or late). Empty when nothing arrived in the window.
std::optional<double> slo_violation_ratio(const std::vector<QueryRecord>& records,
                                          double window_start, double window_end);
std::optional<double> slo_violation_ratio(const std::vector<QueryRecord>& records);

// Mean delivered quality over completed queries (late ones included, dropped
// excluded) arriving in the window. Empty when nothing completed.
std::optional<double> quality_aggregate(const std::vector<QueryRecord>& records,
                                        double window_start, double window_end);
std::optional<double> quality_aggregate(const std::vector<QueryRecord>& records);

// Locale-independent "%.6g" (6 significant digits), used for every real
// number the CSV writers emit so outputs are byte-stable.
std::string fmt6(double v);

// Writes intervals.csv, queries.csv and plans.csv into out_dir (created if
// missing). Schemas are documented in the README; all values deterministic
// for a fixed config and seed.
void write_csv(const std::string& out_dir, const std::vector<IntervalSnapshot>& intervals,
               const std::vector<QueryRecord>& records, const std::vector<PlanLogEntry>& plans);

// Parses a file produced by write_csv's intervals.csv writer. Values round-
// trip within formatting precision; an empty mean-quality field stays empty.
std::vector<IntervalSnapshot> read_intervals_csv(const std::string& path);

} // namespace diffserve
