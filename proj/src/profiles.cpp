#include "diffserve/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "diffserve/errors.hpp"

namespace diffserve {

std::vector<int> ModelProfile::batch_sizes() const {
    std::vector<int> out;
    out.reserve(latency_table.size());
    for (const auto& [b, e] : latency_table) out.push_back(b);
    return out;
}

double exec_latency(const ModelProfile& m, int batch) {
    auto it = m.latency_table.find(batch);
    if (it == m.latency_table.end())
        throw std::out_of_range("model '" + m.name + "' has no profiled batch size " +
                                std::to_string(batch));
    return it->second;
}

double throughput(const ModelProfile& m, int batch) {
    return static_cast<double>(batch) / exec_latency(m, batch);
}

void validate_profile(const ModelProfile& m) {
    if (m.latency_table.empty())
        throw InvariantError("profile '" + m.name + "': latency table is empty");
    double prev_e = 0.0;
    double prev_per_query = std::numeric_limits<double>::infinity();
    for (const auto& [b, e] : m.latency_table) {
        if (b <= 0)
            throw InvariantError("profile '" + m.name + "': non-positive batch size");
        if (!(e > 0.0) || !std::isfinite(e))
            throw InvariantError("profile '" + m.name + "': latency for batch " +
                                 std::to_string(b) + " must be positive and finite");
        if (e < prev_e)
            throw InvariantError("profile '" + m.name + "': latency must be non-decreasing "
                                 "in batch size (violated at batch " + std::to_string(b) + ")");
        double per_query = e / b;
        if (per_query > prev_per_query + 1e-12)
            throw InvariantError("profile '" + m.name + "': per-query latency must be "
                                 "non-increasing in batch size (throughput dipped at batch " +
                                 std::to_string(b) + ")");
        prev_e = e;
        prev_per_query = per_query;
    }
}

// ---- deferral curve ----------------------------------------------------

namespace {

// Bin index for a confidence score. The +1e-9 nudge keeps grid-aligned
// values (0.29 reads as 28.999999...) in their intended bin.
int bin_of(double confidence) {
    int idx = static_cast<int>(std::floor(confidence * 100.0 + 1e-9));
    return std::clamp(idx, 0, DeferralCurve::kBins - 1);
}

// Number of bins whose lower edge lies strictly below t, same nudge.
int bins_below(double t) {
    int k = static_cast<int>(std::ceil(t * 100.0 - 1e-9));
    return std::clamp(k, 0, DeferralCurve::kBins);
}

} // namespace

DeferralCurve DeferralCurve::empty() {
    DeferralCurve c;
    c.bin_edges.resize(kBins);
    c.bin_mass.assign(kBins, 0.0);
    for (int i = 0; i < kBins; ++i) c.bin_edges[i] = i / 100.0;
    c.total_mass = 0.0;
    return c;
}

DeferralCurve DeferralCurve::from_samples(const std::vector<double>& confidences) {
    DeferralCurve c = empty();
    for (double s : confidences) observe_confidence(c, s, 1.0);
    return c;
}

DeferralCurve DeferralCurve::uniform_prior() {
    DeferralCurve c = empty();
    // One unit per centile bin below 1.0; exact f(k/100) = k/100.
    for (int i = 0; i < kBins - 1; ++i) c.bin_mass[i] = 1.0;
    c.total_mass = kBins - 1;
    return c;
}

double deferral_fraction(const DeferralCurve& curve, double threshold) {
    if (!(threshold >= 0.0) || !(threshold <= 1.0))
        throw std::domain_error("deferral threshold must lie in [0, 1]");
    if (curve.total_mass <= 0.0) return 0.0;
    int k = bins_below(threshold);
    double below = 0.0;
    for (int i = 0; i < k; ++i) below += curve.bin_mass[i];
    return below / curve.total_mass;
}

void observe_confidence(DeferralCurve& curve, double confidence, double decay) {
    if (!(confidence >= 0.0) || !(confidence <= 1.0))
        throw std::domain_error("confidence must lie in [0, 1]");
    if (!(decay > 0.0) || !(decay <= 1.0))
        throw std::domain_error("curve decay must lie in (0, 1]");
    if (curve.bin_mass.empty()) curve = DeferralCurve::empty();
    if (decay != 1.0) {
        for (double& m : curve.bin_mass) m *= decay;
        curve.total_mass *= decay;
    }
    curve.bin_mass[bin_of(confidence)] += 1.0;
    curve.total_mass += 1.0;
}

void validate_curve(const DeferralCurve& curve) {
    if (curve.bin_edges.size() != DeferralCurve::kBins ||
        curve.bin_mass.size() != DeferralCurve::kBins)
        throw InvariantError("deferral curve must have exactly 101 bins");
    if (!std::is_sorted(curve.bin_edges.begin(), curve.bin_edges.end()))
        throw InvariantError("deferral curve bin edges must be sorted");
    double sum = 0.0;
    for (double m : curve.bin_mass) {
        if (m < 0.0) throw InvariantError("deferral curve bin mass must be non-negative");
        sum += m;
    }
    double tol = 1e-9 * std::max(1.0, std::abs(curve.total_mass));
    if (std::abs(sum - curve.total_mass) > tol)
        throw InvariantError("deferral curve total_mass does not match bin masses");
}

// ---- cascade -----------------------------------------------------------

void validate_cascade(const CascadeProfile& c) {
    validate_profile(c.light);
    validate_profile(c.heavy);
    validate_curve(c.deferral);
    if (!(c.slo_seconds > 0.0))
        throw InvariantError("cascade '" + c.name + "': slo_seconds must be positive");

    int shared = 0;
    for (const auto& [b, e] : c.light.latency_table)
        if (c.heavy.latency_table.count(b)) { shared = b; break; }
    if (shared == 0)
        throw InvariantError("cascade '" + c.name + "': light and heavy share no batch size");
    if (!(exec_latency(c.light, shared) < exec_latency(c.heavy, shared)))
        throw InvariantError("cascade '" + c.name + "': light model must be faster than heavy "
                             "at batch " + std::to_string(shared));

    if (!c.light.latency_table.count(1) || !c.heavy.latency_table.count(1))
        throw InvariantError("cascade '" + c.name + "': both models must profile batch size 1");
    if (!(c.slo_seconds > exec_latency(c.heavy, 1) + exec_latency(c.light, 1)))
        throw InvariantError("cascade '" + c.name + "': SLO does not admit even an unqueued "
                             "light+heavy pass at batch 1");
}

// ---- profile file parser -----------------------------------------------
//
// Line-oriented grammar, one cascade per block:
//
//   cascade {
//     name = cascade1
//     slo_seconds = 5.0
//     light.name = light-1               # optional
//     light.latency = { 1: 0.10, 2: 0.13 }
//     heavy.name = heavy-1               # optional
//     heavy.latency = { 1: 1.78, 2: 2.40 }
//     deferral.samples = [ 0.91, 0.13 ]  # optional
//   }
//
// '#' starts a comment; blank lines are ignored; unknown keys are errors.

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
    size_t pos = s.find('#');
    return pos == std::string::npos ? s : s.substr(0, pos);
}

double parse_real(const std::string& file, int line, const std::string& tok) {
    try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line, "expected a real number, got '" + tok + "'");
    }
}

int parse_int(const std::string& file, int line, const std::string& tok) {
    try {
        size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line, "expected an integer, got '" + tok + "'");
    }
}

// "{ 1: 0.10, 2: 0.13 }" -> latency table
std::map<int, double> parse_latency_map(const std::string& file, int line, std::string body) {
    body = trim(body);
    if (body.size() < 2 || body.front() != '{' || body.back() != '}')
        throw ParseError(file, line, "latency table must be wrapped in { }");
    body = body.substr(1, body.size() - 2);
    std::map<int, double> out;
    std::stringstream ss(body);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        entry = trim(entry);
        if (entry.empty()) continue;
        size_t colon = entry.find(':');
        if (colon == std::string::npos)
            throw ParseError(file, line, "latency entry '" + entry + "' is missing ':'");
        int b = parse_int(file, line, trim(entry.substr(0, colon)));
        double e = parse_real(file, line, trim(entry.substr(colon + 1)));
        if (out.count(b))
            throw ParseError(file, line, "duplicate batch size " + std::to_string(b));
        out[b] = e;
    }
    if (out.empty()) throw ParseError(file, line, "latency table is empty");
    return out;
}

// "[ 0.9, 0.1 ]" -> samples
std::vector<double> parse_sample_list(const std::string& file, int line, std::string body) {
    body = trim(body);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
        throw ParseError(file, line, "sample list must be wrapped in [ ]");
    body = body.substr(1, body.size() - 2);
    std::vector<double> out;
    std::stringstream ss(body);
    std::string entry;
    while (std::getline(ss, entry, ',')) {
        entry = trim(entry);
        if (entry.empty()) continue;
        double c = parse_real(file, line, entry);
        if (c < 0.0 || c > 1.0)
            throw ParseError(file, line, "confidence sample out of [0, 1]: " + entry);
        out.push_back(c);
    }
    return out;
}

} // namespace

std::vector<CascadeProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open profile file");

    std::vector<CascadeProfile> cascades;
    std::string raw;
    int lineno = 0;
    bool in_block = false;
    int block_line = 0;
    CascadeProfile cur;
    bool have_slo = false, have_light = false, have_heavy = false, have_samples = false;
    std::vector<double> samples;

    auto finish_block = [&](int line) {
        if (cur.name.empty()) throw ParseError(path, line, "cascade block is missing 'name'");
        if (!have_slo) throw ParseError(path, line, "cascade '" + cur.name + "' missing slo_seconds");
        if (!have_light) throw ParseError(path, line, "cascade '" + cur.name + "' missing light.latency");
        if (!have_heavy) throw ParseError(path, line, "cascade '" + cur.name + "' missing heavy.latency");
        if (cur.light.name.empty()) cur.light.name = cur.name + "-light";
        if (cur.heavy.name.empty()) cur.heavy.name = cur.name + "-heavy";
        cur.deferral = have_samples ? DeferralCurve::from_samples(samples)
                                    : DeferralCurve::uniform_prior();
        validate_cascade(cur);
        for (const auto& existing : cascades)
            if (existing.name == cur.name)
                throw ParseError(path, line, "duplicate cascade name '" + cur.name + "'");
        cascades.push_back(std::move(cur));
    };

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (!in_block) {
            if (line == "cascade {") {
                in_block = true;
                block_line = lineno;
                cur = CascadeProfile{};
                samples.clear();
                have_slo = have_light = have_heavy = have_samples = false;
                continue;
            }
            throw ParseError(path, lineno, "expected 'cascade {', got '" + line + "'");
        }

        if (line == "}") {
            finish_block(lineno);
            in_block = false;
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, lineno, "expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ParseError(path, lineno, "empty value for '" + key + "'");

        if (key == "name") {
            cur.name = value;
        } else if (key == "slo_seconds") {
            cur.slo_seconds = parse_real(path, lineno, value);
            have_slo = true;
        } else if (key == "light.name") {
            cur.light.name = value;
        } else if (key == "heavy.name") {
            cur.heavy.name = value;
        } else if (key == "light.latency") {
            cur.light.latency_table = parse_latency_map(path, lineno, value);
            have_light = true;
        } else if (key == "heavy.latency") {
            cur.heavy.latency_table = parse_latency_map(path, lineno, value);
            have_heavy = true;
        } else if (key == "deferral.samples") {
            samples = parse_sample_list(path, lineno, value);
            have_samples = true;
        } else {
            throw ParseError(path, lineno, "unknown key '" + key + "'");
        }
    }
    if (in_block)
        throw ParseError(path, block_line, "unterminated cascade block (missing '}')");
    if (cascades.empty()) throw ParseError(path, lineno, "profile file defines no cascades");
    return cascades;
}

CascadeProfile load_cascade(const std::string& path, const std::string& name) {
    for (auto& c : load_profiles(path))
        if (c.name == name) return c;
    throw InvariantError("profile file '" + path + "' has no cascade named '" + name + "'");
}

} // namespace diffserve
