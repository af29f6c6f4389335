#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "diffserve/workload.hpp"

namespace diffserve {

// Everything one experiment needs, assembled from a config file plus CLI
// overrides. Paths are resolved relative to the process working directory.
struct ExperimentConfig {
    std::string profiles_path;
    std::string cascade; // cascade name inside the profiles file
    std::string trace_path;
    std::optional<double> trace_scale_min; // both set: affinely rescale the trace
    std::optional<double> trace_scale_max;
    std::string arrival_mode = "poisson"; // or "uniform"
    std::string policy = "diffserve";
    int servers = 16;
    uint64_t seed = 1;
    std::string out_dir = "out";

    double control_interval_seconds = 10.0;
    double ewma_alpha = 0.3;
    double overprovision_lambda = 1.05;
    double threshold_grid_step = 0.01;
    double deferral_decay = 0.999;
    double queue_sentinel_seconds = 1e6;
    bool bill_formed_batch = false;
    double switch_delay_seconds = 0.0;

    // policy parameters
    double fixed_threshold = 0.5; // abl_static_threshold
    int aimd_add_step = 1;        // abl_aimd_batching
    double aimd_mult_factor = 0.5;

    // query outcome model
    double easy_fraction = 0.3;
    double quality_gap_scale = 1.0;
    double confidence_fidelity = 1.5;
    double noise_sigma = 0.15;

    bool plots = false;   // also render SVG charts
    bool verbose = false; // per-tick plan log on stderr
};

// Applies one "key = value" assignment. file/line only shape error messages
// (CLI overrides pass a pseudo-filename). Unknown keys are errors.
void set_config_field(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const std::string& file, int line);

// Reads a config file: one `key = value` per line, '#' comments, blank lines
// ignored. Returns defaults overlaid with the file's assignments.
ExperimentConfig load_config(const std::string& path);

// Range/consistency checks; throws std::invalid_argument naming the field.
void validate_config(const ExperimentConfig& cfg);

ArrivalMode parse_arrival_mode(const std::string& s);

} // namespace diffserve
