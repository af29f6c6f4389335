#include "diffserve/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "diffserve/errors.hpp"
#include "diffserve/policies.hpp"

namespace diffserve {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_bool(const std::string& v, const std::string& file, int line, const std::string& key) {
    std::string s = v;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ParseError(file, line, key + ": expected a boolean, got '" + v + "'");
}

double parse_num(const std::string& v, const std::string& file, int line,
                 const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(file, line, key + ": expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& v, const std::string& file, int line, const std::string& key) {
    const double d = parse_num(v, file, line, key);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ParseError(file, line, key + ": expected an integer, got '" + v + "'");
    return i;
}

uint64_t parse_u64(const std::string& v, const std::string& file, int line,
                   const std::string& key) {
    try {
        size_t pos = 0;
        unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<uint64_t>(u);
    } catch (const std::exception&) {
        throw ParseError(file, line, key + ": expected an unsigned integer, got '" + v + "'");
    }
}

} // namespace

void set_config_field(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const std::string& file, int line) {
    if (key == "profiles") cfg.profiles_path = value;
    else if (key == "cascade") cfg.cascade = value;
    else if (key == "trace") cfg.trace_path = value;
    else if (key == "trace_scale_min") cfg.trace_scale_min = parse_num(value, file, line, key);
    else if (key == "trace_scale_max") cfg.trace_scale_max = parse_num(value, file, line, key);
    else if (key == "arrival_mode") cfg.arrival_mode = value;
    else if (key == "policy") cfg.policy = value;
    else if (key == "servers") cfg.servers = parse_int(value, file, line, key);
    else if (key == "seed") cfg.seed = parse_u64(value, file, line, key);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "control_interval_seconds")
        cfg.control_interval_seconds = parse_num(value, file, line, key);
    else if (key == "ewma_alpha") cfg.ewma_alpha = parse_num(value, file, line, key);
    else if (key == "overprovision_lambda")
        cfg.overprovision_lambda = parse_num(value, file, line, key);
    else if (key == "threshold_grid_step")
        cfg.threshold_grid_step = parse_num(value, file, line, key);
    else if (key == "deferral_decay") cfg.deferral_decay = parse_num(value, file, line, key);
    else if (key == "queue_sentinel_seconds")
        cfg.queue_sentinel_seconds = parse_num(value, file, line, key);
    else if (key == "bill_formed_batch") cfg.bill_formed_batch = parse_bool(value, file, line, key);
    else if (key == "switch_delay_seconds")
        cfg.switch_delay_seconds = parse_num(value, file, line, key);
    else if (key == "fixed_threshold") cfg.fixed_threshold = parse_num(value, file, line, key);
    else if (key == "aimd_add_step") cfg.aimd_add_step = parse_int(value, file, line, key);
    else if (key == "aimd_mult_factor") cfg.aimd_mult_factor = parse_num(value, file, line, key);
    else if (key == "easy_fraction") cfg.easy_fraction = parse_num(value, file, line, key);
    else if (key == "quality_gap_scale") cfg.quality_gap_scale = parse_num(value, file, line, key);
    else if (key == "confidence_fidelity")
        cfg.confidence_fidelity = parse_num(value, file, line, key);
    else if (key == "noise_sigma") cfg.noise_sigma = parse_num(value, file, line, key);
    else if (key == "plots") cfg.plots = parse_bool(value, file, line, key);
    else if (key == "verbose") cfg.verbose = parse_bool(value, file, line, key);
    else throw ParseError(file, line, "unknown config key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(path, line_no, "empty key");
        set_config_field(cfg, key, value, path, line_no);
    }
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
    if (cfg.profiles_path.empty()) fail("profiles path is required");
    if (cfg.cascade.empty()) fail("cascade name is required");
    if (cfg.trace_path.empty()) fail("trace path is required");
    if (cfg.servers < 1) fail("servers must be >= 1");
    if (!(cfg.control_interval_seconds > 0)) fail("control_interval_seconds must be > 0");
    if (!(cfg.ewma_alpha > 0) || cfg.ewma_alpha > 1) fail("ewma_alpha must be in (0, 1]");
    if (cfg.overprovision_lambda < 1) fail("overprovision_lambda must be >= 1");
    if (!(cfg.threshold_grid_step > 0) || cfg.threshold_grid_step > 1)
        fail("threshold_grid_step must be in (0, 1]");
    if (!(cfg.deferral_decay > 0) || cfg.deferral_decay > 1)
        fail("deferral_decay must be in (0, 1]");
    if (!(cfg.queue_sentinel_seconds > 0)) fail("queue_sentinel_seconds must be > 0");
    if (cfg.switch_delay_seconds < 0) fail("switch_delay_seconds must be >= 0");
    if (cfg.fixed_threshold < 0 || cfg.fixed_threshold > 1)
        fail("fixed_threshold must be in [0, 1]");
    if (cfg.aimd_add_step < 1) fail("aimd_add_step must be >= 1");
    if (!(cfg.aimd_mult_factor > 0) || cfg.aimd_mult_factor >= 1)
        fail("aimd_mult_factor must be in (0, 1)");
    if (cfg.easy_fraction < 0 || cfg.easy_fraction > 1)
        fail("easy_fraction must be in [0, 1]");
    if (cfg.quality_gap_scale < 0) fail("quality_gap_scale must be >= 0");
    if (cfg.noise_sigma < 0) fail("noise_sigma must be >= 0");
    if (cfg.trace_scale_min.has_value() != cfg.trace_scale_max.has_value())
        fail("trace_scale_min and trace_scale_max must be set together");
    parse_arrival_mode(cfg.arrival_mode);
    parse_policy_kind(cfg.policy);
}

ArrivalMode parse_arrival_mode(const std::string& s) {
    if (s == "poisson") return ArrivalMode::poisson;
    if (s == "uniform") return ArrivalMode::uniform;
    throw std::invalid_argument("unknown arrival mode '" + s + "' (poisson|uniform)");
}

} // namespace diffserve
