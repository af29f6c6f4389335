#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diffserve/cluster.hpp"
#include "diffserve/config.hpp"

namespace diffserve {

struct ExperimentResult {
    RunOutput output;
    uint64_t arrived = 0;
    uint64_t served_light = 0;
    uint64_t served_heavy = 0;
    uint64_t dropped = 0;
    uint64_t late = 0;
    std::optional<double> violation_ratio;
    std::optional<double> mean_quality;
    int ticks = 0;
    int feasible_ticks = 0;
    double mean_solve_micros = 0.0;
    double max_solve_micros = 0.0;
    double wall_seconds = 0.0;
    std::string summary_line;
};

// One end-to-end run: load profiles and trace, generate the workload,
// simulate under the configured policy, compute metrics. With
// `write_outputs` it also writes intervals/queries/plans CSVs, summary.txt,
// and (if configured) the SVG charts into cfg.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs = true);

struct SweepRow {
    std::string key;
    std::string value;
    std::string out_dir;
    bool ok = false;
    std::string error;              // empty when ok
    ExperimentResult result;        // valid when ok
};

// Runs one experiment per value of `key`, each into its own subdirectory of
// base.out_dir, and writes base.out_dir/sweep.csv joining the summaries.
// Failures are recorded per point and do not stop the sweep. Points share no
// state, so reordering `values` cannot change any per-point output.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& key,
                                const std::vector<std::string>& values);

// Renders threshold/violation/quality-over-time SVGs from a run directory's
// intervals.csv into out_dir (created if needed).
void plot_run(const std::string& run_dir, const std::string& out_dir);

} // namespace diffserve
