#include "diffserve/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "diffserve/errors.hpp"
#include "diffserve/rng.hpp"

namespace diffserve {

double Trace::peak() const {
    if (rates.empty()) return 0.0;
    return *std::max_element(rates.begin(), rates.end());
}

Trace load_trace(const std::string& path, double interval_seconds) {
    if (!(interval_seconds > 0.0))
        throw std::domain_error("trace interval must be positive");
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open trace file");

    Trace t;
    t.interval_seconds = interval_seconds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(a, b - a + 1);
        double rate;
        try {
            size_t used = 0;
            rate = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError(path, lineno, "expected a rate in queries/sec, got '" + tok + "'");
        }
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw ParseError(path, lineno, "rate must be a non-negative finite number");
        t.rates.push_back(rate);
    }
    if (t.rates.empty()) throw ParseError(path, lineno, "trace file holds no rates");
    return t;
}

Trace scale_trace(const Trace& t, double new_min, double new_max) {
    if (t.rates.empty()) throw std::domain_error("cannot scale an empty trace");
    if (!(new_min >= 0.0) || new_max < new_min)
        throw std::domain_error("scale targets must satisfy 0 <= new_min <= new_max");
    double old_min = *std::min_element(t.rates.begin(), t.rates.end());
    double old_max = *std::max_element(t.rates.begin(), t.rates.end());

    Trace out;
    out.interval_seconds = t.interval_seconds;
    out.rates.reserve(t.rates.size());

    if (old_min == old_max) {
        if (new_min != new_max)
            throw std::domain_error("constant trace cannot be scaled to a non-trivial range");
        out.rates.assign(t.rates.size(), new_min);
        return out;
    }

    double span = (new_max - new_min) / (old_max - old_min);
    for (double r : t.rates) {
        double v;
        if (r == old_min) v = new_min;        // endpoints exact by construction
        else if (r == old_max) v = new_max;
        else v = new_min + (r - old_min) * span;
        out.rates.push_back(v);
    }
    return out;
}

std::vector<double> generate_arrivals(const Trace& trace, uint64_t seed, ArrivalMode mode) {
    std::vector<double> arrivals;
    RandomStream rng(seed, "arrivals");

    // Walk the piecewise-linear cumulative rate R(t); place the next point
    // once R reaches `target` (unit spacing or Exp(1) gaps).
    double target = mode == ArrivalMode::uniform ? 0.0 : rng.exponential(1.0);
    double cum = 0.0; // R at the start of the current interval
    const double dt = trace.interval_seconds;
    for (size_t k = 0; k < trace.rates.size(); ++k) {
        double rate = trace.rates[k];
        double start = dt * static_cast<double>(k);
        double cum_end = cum + rate * dt;
        while (rate > 0.0 && target < cum_end - 1e-12) {
            double t = start + (target - cum) / rate;
            if (!arrivals.empty() && t <= arrivals.back())
                t = std::nextafter(arrivals.back(), std::numeric_limits<double>::infinity());
            if (t >= trace.duration()) break;
            arrivals.push_back(t);
            target += mode == ArrivalMode::uniform ? 1.0 : rng.exponential(1.0);
        }
        cum = cum_end;
    }
    return arrivals;
}

Query sample_query(const QueryOutcomeModel& model, uint64_t id, double arrival_time,
                   double slo_seconds) {
    if (!(model.easy_fraction >= 0.0) || !(model.easy_fraction <= 1.0))
        throw std::domain_error("easy_fraction must lie in [0, 1]");
    if (!(slo_seconds > 0.0)) throw std::domain_error("slo_seconds must be positive");

    RandomStream rng(splitmix64(model.seed) ^ splitmix64(id), "query");

    bool easy = rng.bernoulli(model.easy_fraction);
    double gap = model.quality_gap_scale * std::abs(rng.normal()); // |light - heavy|
    double dq = easy ? gap : -gap;
    double noise = rng.normal(0.0, model.noise_sigma);

    Query q;
    q.id = id;
    q.arrival = arrival_time;
    q.deadline = arrival_time + slo_seconds;
    q.quality_heavy = 1.0;
    q.quality_light = 1.0 + dq;
    q.confidence = std::clamp(0.5 + model.confidence_fidelity * dq + noise, 0.0, 1.0);
    return q;
}

double ewma_step(double prev, double obs, double alpha) {
    return prev + alpha * (obs - prev);
}

double ewma_estimate(const std::vector<double>& history, double alpha) {
    if (history.empty())
        throw std::invalid_argument("ewma_estimate: demand history is empty");
    if (!(alpha > 0.0) || !(alpha <= 1.0))
        throw std::domain_error("ewma_estimate: alpha must lie in (0, 1]");
    double d = history.front();
    for (size_t i = 1; i < history.size(); ++i) d = ewma_step(d, history[i], alpha);
    return d;
}

} // namespace diffserve
