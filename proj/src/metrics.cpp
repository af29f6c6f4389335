#include "diffserve/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace diffserve {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::served_light: return "served_light";
        case Outcome::served_heavy: return "served_heavy";
        case Outcome::dropped: return "dropped";
        case Outcome::late: return "late";
    }
    return "?";
}

namespace {

bool in_window(double t, double a, double b) { return t >= a && t < b; }

bool violated(const QueryRecord& r) {
    return r.outcome == Outcome::dropped || r.outcome == Outcome::late;
}

} // namespace

std::optional<double> slo_violation_ratio(const std::vector<QueryRecord>& records,
                                          double window_start, double window_end) {
    uint64_t arrived = 0, bad = 0;
    for (const auto& r : records) {
        if (!in_window(r.arrival, window_start, window_end)) continue;
        ++arrived;
        if (violated(r)) ++bad;
    }
    if (arrived == 0) return std::nullopt;
    return static_cast<double>(bad) / static_cast<double>(arrived);
}

std::optional<double> slo_violation_ratio(const std::vector<QueryRecord>& records) {
    return slo_violation_ratio(records, -std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity());
}

std::optional<double> quality_aggregate(const std::vector<QueryRecord>& records,
                                        double window_start, double window_end) {
    double sum = 0.0;
    uint64_t n = 0;
    for (const auto& r : records) {
        if (!in_window(r.arrival, window_start, window_end)) continue;
        if (!r.delivered_quality) continue; // dropped or still in flight
        sum += *r.delivered_quality;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::optional<double> quality_aggregate(const std::vector<QueryRecord>& records) {
    return quality_aggregate(records, -std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity());
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

namespace {

std::string opt6(const std::optional<double>& v) { return v ? fmt6(*v) : ""; }

std::ofstream open_out(const std::string& dir, const char* name) {
    std::filesystem::create_directories(dir);
    std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary); // '\n' endings on all platforms
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

} // namespace

void write_csv(const std::string& out_dir, const std::vector<IntervalSnapshot>& intervals,
               const std::vector<QueryRecord>& records,
               const std::vector<PlanLogEntry>& plans) {
    {
        auto out = open_out(out_dir, "intervals.csv");
        out << "interval_start,demand_observed,demand_estimated,threshold,x1,x2,b1,b2,"
               "feasible,arrived,served_light,served_heavy,dropped,late,"
               "mean_delivered_quality\n";
        for (const auto& s : intervals) {
            out << fmt6(s.interval_start) << ',' << fmt6(s.demand_observed) << ','
                << fmt6(s.demand_estimated) << ',' << fmt6(s.threshold) << ',' << s.plan.x1
                << ',' << s.plan.x2 << ',' << s.plan.b1 << ',' << s.plan.b2 << ','
                << (s.plan.feasible ? 1 : 0) << ',' << s.arrived << ',' << s.served_light
                << ',' << s.served_heavy << ',' << s.dropped << ',' << s.late << ','
                << opt6(s.mean_delivered_quality) << '\n';
        }
    }
    {
        auto out = open_out(out_dir, "queries.csv");
        out << "id,arrival,confidence,quality_light,quality_heavy,deadline,light_start,"
               "light_end,heavy_start,heavy_end,completion,outcome,delivered_quality\n";
        for (const auto& r : records) {
            out << r.id << ',' << fmt6(r.arrival) << ',' << fmt6(r.confidence) << ','
                << fmt6(r.quality_light) << ',' << fmt6(r.quality_heavy) << ','
                << fmt6(r.deadline) << ',' << opt6(r.light_start) << ',' << opt6(r.light_end)
                << ',' << opt6(r.heavy_start) << ',' << opt6(r.heavy_end) << ','
                << opt6(r.completion) << ',' << (r.outcome ? to_string(*r.outcome) : "") << ','
                << opt6(r.delivered_quality) << '\n';
        }
    }
    {
        auto out = open_out(out_dir, "plans.csv");
        out << "tick,time,demand_estimated,threshold,x1,x2,b1,b2,feasible\n";
        for (const auto& e : plans) {
            out << e.tick << ',' << fmt6(e.time) << ',' << fmt6(e.demand_estimated) << ','
                << fmt6(e.plan.threshold) << ',' << e.plan.x1 << ',' << e.plan.x2 << ','
                << e.plan.b1 << ',' << e.plan.b2 << ',' << (e.plan.feasible ? 1 : 0) << '\n';
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double to_num(const std::string& s, const std::string& path, size_t line_no) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected a number, got '" + s + "'");
    }
}

} // namespace

std::vector<IntervalSnapshot> read_intervals_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() != 15 || header[0] != "interval_start")
        throw std::runtime_error(path + ": unrecognized intervals.csv header");
    std::vector<IntervalSnapshot> out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": wrong field count");
        IntervalSnapshot s;
        s.interval_start = to_num(f[0], path, line_no);
        s.demand_observed = to_num(f[1], path, line_no);
        s.demand_estimated = to_num(f[2], path, line_no);
        s.threshold = to_num(f[3], path, line_no);
        s.plan.threshold = s.threshold;
        s.plan.x1 = static_cast<int>(to_num(f[4], path, line_no));
        s.plan.x2 = static_cast<int>(to_num(f[5], path, line_no));
        s.plan.b1 = static_cast<int>(to_num(f[6], path, line_no));
        s.plan.b2 = static_cast<int>(to_num(f[7], path, line_no));
        s.plan.feasible = to_num(f[8], path, line_no) != 0.0;
        s.arrived = static_cast<uint64_t>(to_num(f[9], path, line_no));
        s.served_light = static_cast<uint64_t>(to_num(f[10], path, line_no));
        s.served_heavy = static_cast<uint64_t>(to_num(f[11], path, line_no));
        s.dropped = static_cast<uint64_t>(to_num(f[12], path, line_no));
        s.late = static_cast<uint64_t>(to_num(f[13], path, line_no));
        if (!f[14].empty()) s.mean_delivered_quality = to_num(f[14], path, line_no);
        out.push_back(s);
    }
    return out;
}

} // namespace diffserve
