#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diffserve/experiment.hpp"

namespace {

// file config first, then --set pairs in order, then dedicated flags.
void apply_sets(diffserve::ExperimentConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        diffserve::set_config_field(cfg, kv.substr(0, eq), kv.substr(eq + 1), "<cli>", 0);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage cascade serving simulator: trace-driven runs, sweeps, and plots"};
    app.require_subcommand(1);

    std::string config_path, policy, trace, out_dir, vary_key, run_dir, plot_out;
    std::vector<std::string> sets, values;
    uint64_t seed = 0;
    int servers = 0;
    bool plots = false, verbose = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (key = value lines)");
        sub->add_option("--seed", seed, "master seed for workload and routing streams");
        sub->add_option("--policy", policy,
                        "diffserve | diffserve_static | clipper_light | clipper_heavy | "
                        "proteus_like | abl_static_threshold | abl_aimd_batching | "
                        "abl_no_queuing_model");
        sub->add_option("--trace", trace, "demand trace file (one rate per line)");
        sub->add_option("--servers", servers, "cluster size");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--set", sets, "extra config override, key=value (repeatable)")
            ->take_all();
        sub->add_flag("--plots", plots, "also render SVG charts");
        sub->add_flag("--verbose", verbose, "log every control tick's plan to stderr");
        return sub;
    };

    CLI::App* run = add_common(app.add_subcommand("run", "execute one experiment"));
    CLI::App* sweep =
        add_common(app.add_subcommand("sweep", "run one experiment per value of a config key"));
    sweep->add_option("--vary", vary_key, "config key to vary")->required();
    sweep->add_option("--values", values, "comma-separated values for --vary")
        ->required()
        ->delimiter(',');

    CLI::App* plot = app.add_subcommand("plot", "render SVG charts from a finished run");
    plot->add_option("--run", run_dir, "directory containing intervals.csv")->required();
    plot->add_option("--out", plot_out, "output directory (default: the run directory)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plot->parsed()) {
            const std::string dst = plot_out.empty() ? run_dir : plot_out;
            diffserve::plot_run(run_dir, dst);
            std::cout << "charts written to " << dst << '\n';
            return 0;
        }

        CLI::App* sub = run->parsed() ? run : sweep;
        diffserve::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = diffserve::load_config(config_path);
        apply_sets(cfg, sets);
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--policy")) cfg.policy = policy;
        if (sub->count("--trace")) cfg.trace_path = trace;
        if (sub->count("--servers")) cfg.servers = servers;
        if (sub->count("--out")) cfg.out_dir = out_dir;
        if (plots) cfg.plots = true;
        if (verbose) cfg.verbose = true;

        if (run->parsed()) {
            const diffserve::ExperimentResult res = diffserve::run_experiment(cfg);
            std::cout << res.summary_line << '\n';
            std::cout << "outputs in " << cfg.out_dir << '\n';
            return 0;
        }

        const auto rows = diffserve::run_sweep(cfg, vary_key, values);
        int failures = 0;
        for (const auto& r : rows) {
            if (r.ok) {
                std::cout << vary_key << "=" << r.value << ": " << r.result.summary_line << '\n';
            } else {
                ++failures;
                std::cout << vary_key << "=" << r.value << ": FAILED: " << r.error << '\n';
            }
        }
        std::cout << "sweep summary in " << cfg.out_dir << "/sweep.csv\n";
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
