#include "diffserve/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "diffserve/svg.hpp"

namespace diffserve {

namespace {

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out += ok ? c : '_';
    }
    return out;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt6(*v) : "n/a"; }

void write_charts(const std::string& out_dir, const std::vector<IntervalSnapshot>& intervals) {
    std::vector<double> xs;
    for (const auto& s : intervals) xs.push_back(s.interval_start);

    ChartSeries threshold{"confidence threshold", xs, {}, ""};
    for (const auto& s : intervals) threshold.ys.push_back(s.threshold);
    write_line_chart(out_dir + "/threshold_over_time.svg", "Confidence threshold over time",
                     "time (s)", "threshold", {threshold});

    ChartSeries violation{"violation ratio", {}, {}, ""};
    for (const auto& s : intervals) {
        if (s.arrived == 0) continue; // ratio undefined for an empty window
        violation.xs.push_back(s.interval_start);
        violation.ys.push_back(static_cast<double>(s.dropped + s.late) /
                               static_cast<double>(s.arrived));
    }
    write_line_chart(out_dir + "/violation_over_time.svg", "SLO violation ratio over time",
                     "time (s)", "violation ratio", {violation});

    ChartSeries quality{"mean delivered quality", {}, {}, ""};
    for (const auto& s : intervals) {
        if (!s.mean_delivered_quality) continue;
        quality.xs.push_back(s.interval_start);
        quality.ys.push_back(*s.mean_delivered_quality);
    }
    write_line_chart(out_dir + "/quality_over_time.svg", "Delivered quality over time",
                     "time (s)", "mean quality", {quality});
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs) {
    validate_config(cfg);

    CascadeProfile cascade = load_cascade(cfg.profiles_path, cfg.cascade);
    Trace trace = load_trace(cfg.trace_path);
    if (cfg.trace_scale_min)
        trace = scale_trace(trace, *cfg.trace_scale_min, *cfg.trace_scale_max);

    const std::vector<double> arrivals =
        generate_arrivals(trace, cfg.seed, parse_arrival_mode(cfg.arrival_mode));
    QueryOutcomeModel qmodel;
    qmodel.easy_fraction = cfg.easy_fraction;
    qmodel.quality_gap_scale = cfg.quality_gap_scale;
    qmodel.confidence_fidelity = cfg.confidence_fidelity;
    qmodel.noise_sigma = cfg.noise_sigma;
    qmodel.seed = cfg.seed;
    std::vector<Query> queries;
    queries.reserve(arrivals.size());
    for (size_t i = 0; i < arrivals.size(); ++i)
        queries.push_back(sample_query(qmodel, i, arrivals[i], cascade.slo_seconds));

    PolicyParams pp;
    pp.kind = parse_policy_kind(cfg.policy);
    pp.peak_demand_qps = trace.peak();
    pp.fixed_threshold = cfg.fixed_threshold;
    pp.aimd_add_step = cfg.aimd_add_step;
    pp.aimd_mult_factor = cfg.aimd_mult_factor;
    std::unique_ptr<Policy> policy = make_policy(pp);

    ClusterConfig cc;
    cc.servers = cfg.servers;
    cc.control_interval_seconds = cfg.control_interval_seconds;
    cc.ewma_alpha = cfg.ewma_alpha;
    cc.overprovision_lambda = cfg.overprovision_lambda;
    cc.threshold_grid_step = cfg.threshold_grid_step;
    cc.deferral_decay = cfg.deferral_decay;
    cc.queue_sentinel_seconds = cfg.queue_sentinel_seconds;
    cc.bill_formed_batch = cfg.bill_formed_batch;
    cc.switch_delay_seconds = cfg.switch_delay_seconds;
    cc.seed = cfg.seed;

    Simulation sim(cascade, trace, std::move(queries), *policy, cc);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    res.output = sim.run();
    const auto t1 = std::chrono::steady_clock::now();
    res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

    for (const QueryRecord& r : res.output.records) {
        ++res.arrived;
        if (r.outcome == Outcome::served_light) ++res.served_light;
        else if (r.outcome == Outcome::served_heavy) ++res.served_heavy;
        else if (r.outcome == Outcome::dropped) ++res.dropped;
        else if (r.outcome == Outcome::late) ++res.late;
    }
    res.violation_ratio = slo_violation_ratio(res.output.records);
    res.mean_quality = quality_aggregate(res.output.records);
    res.ticks = static_cast<int>(res.output.plans.size());
    for (const PlanLogEntry& e : res.output.plans)
        if (e.plan.feasible) ++res.feasible_ticks;
    for (double us : res.output.solve_micros) {
        res.mean_solve_micros += us;
        res.max_solve_micros = std::max(res.max_solve_micros, us);
    }
    if (!res.output.solve_micros.empty())
        res.mean_solve_micros /= static_cast<double>(res.output.solve_micros.size());

    std::ostringstream line;
    line << "policy=" << cfg.policy << " cascade=" << sanitize(cfg.cascade)
         << " servers=" << cfg.servers << " seed=" << cfg.seed << " arrived=" << res.arrived
         << " served_light=" << res.served_light << " served_heavy=" << res.served_heavy
         << " dropped=" << res.dropped << " late=" << res.late
         << " violation=" << opt_str(res.violation_ratio)
         << " quality=" << opt_str(res.mean_quality)
         << " forced_light=" << res.output.forced_light << " ticks=" << res.ticks
         << " feasible_ticks=" << res.feasible_ticks
         << " solve_mean_us=" << fmt6(res.mean_solve_micros)
         << " wall_s=" << fmt6(res.wall_seconds);
    res.summary_line = line.str();

    if (cfg.verbose) {
        for (const PlanLogEntry& e : res.output.plans) {
            std::fprintf(stderr,
                         "tick=%d t=%s demand_est=%s -> t*=%s x1=%d x2=%d b1=%d b2=%d%s\n",
                         e.tick, fmt6(e.time).c_str(), fmt6(e.demand_estimated).c_str(),
                         fmt6(e.plan.threshold).c_str(), e.plan.x1, e.plan.x2, e.plan.b1,
                         e.plan.b2, e.plan.feasible ? "" : " (infeasible: best effort)");
        }
    }

    if (write_outputs) {
        write_csv(cfg.out_dir, res.output.intervals, res.output.records, res.output.plans);
        std::ofstream summary(cfg.out_dir + "/summary.txt", std::ios::binary);
        if (!summary) throw std::runtime_error("cannot write " + cfg.out_dir + "/summary.txt");
        summary << res.summary_line << '\n';
        summary << "solve_max_us=" << fmt6(res.max_solve_micros) << '\n';
        if (cfg.plots) write_charts(cfg.out_dir, res.output.intervals);
    }
    return res;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::string& key,
                                const std::vector<std::string>& values) {
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    std::vector<SweepRow> rows;
    for (const std::string& value : values) {
        SweepRow row;
        row.key = key;
        row.value = value;
        ExperimentConfig cfg = base;
        try {
            set_config_field(cfg, key, value, "<sweep>", 0);
            cfg.out_dir = base.out_dir + "/" + sanitize(key) + "_" + sanitize(value);
            row.out_dir = cfg.out_dir;
            row.result = run_experiment(cfg);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }

    std::filesystem::create_directories(base.out_dir);
    const std::string path = base.out_dir + "/sweep.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "key,value,out_dir,status,arrived,served_light,served_heavy,dropped,late,"
           "violation_ratio,mean_quality,forced_light,feasible_ticks,ticks,error\n";
    for (const SweepRow& r : rows) {
        out << r.key << ',' << r.value << ',' << r.out_dir << ','
            << (r.ok ? "ok" : "error") << ',';
        if (r.ok) {
            const ExperimentResult& x = r.result;
            out << x.arrived << ',' << x.served_light << ',' << x.served_heavy << ','
                << x.dropped << ',' << x.late << ','
                << (x.violation_ratio ? fmt6(*x.violation_ratio) : "") << ','
                << (x.mean_quality ? fmt6(*x.mean_quality) : "") << ','
                << x.output.forced_light << ',' << x.feasible_ticks << ',' << x.ticks << ',';
        } else {
            out << ",,,,,,,,,,";
        }
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        out << err << '\n';
    }
    return rows;
}

void plot_run(const std::string& run_dir, const std::string& out_dir) {
    const auto intervals = read_intervals_csv(run_dir + "/intervals.csv");
    std::filesystem::create_directories(out_dir);
    write_charts(out_dir, intervals);
}

} // namespace diffserve
