#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace jptrack {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Association, recovery and scheduling parameters. Field names follow the
/// config-file keys one to one.
struct TrackerConfig {
    // confidence cascade
    double t_h = 0.5;
    double t_l = 0.1;
    // composite-cost weights
    double omega_1 = 0.3;
    double omega_2 = 0.3;
    double omega_3 = 0.2;
    double omega_4 = 0.2;
    // motion-cost weights
    double beta_1 = 0.4;
    double beta_2 = 0.4;
    double beta_3 = 0.2;
    // memory recovery
    double gamma = 0.1;
    double tau_t = 0.6;
    // detection-mode scheduling
    int n_g = 30;
    int n_l = 120;
    int n_m = 5;
    double tau_o = 0.2;
    double tau_d = 700.0;
    double tau_s = 0.8;
    // feature-fusion residual weight
    double alpha = 0.1;
    // association gate and lifecycle
    double gate_max_cost = 0.8;
    int max_lost_age = 30;
    int h_max = 30;
    double frame_w = 1920.0;
    double frame_h = 1080.0;
};

struct Occlusion {
    int target = 0;  // ground-truth id
    int start = 0;   // first occluded frame
    int duration = 0;
};

struct ScenarioConfig {
    int n_targets = 2;
    int frames = 300;
    double frame_w = 1920.0;
    double frame_h = 1080.0;
    double mix_cv = 0.4;
    double mix_hover = 0.2;
    double mix_dive = 0.2;
    double mix_maneuver = 0.2;
    double size_min = 8.0;
    double size_max = 40.0;
    std::uint64_t seed = 1;
};

struct NoiseModel {
    double p_miss = 0.15;        // global-detector miss probability
    double p_miss_local = 0.05;  // ROI-detector miss probability
    double loc_noise_std = 1.0;
    double size_noise_std = 0.5;
    double fp_rate = 0.2;  // expected clutter boxes per frame
    double conf_base = 0.9;
    double conf_penalty = 0.5;
    std::vector<Occlusion> occlusions;
};

struct RunConfig {
    TrackerConfig tracker;
    ScenarioConfig scenario;
    NoiseModel noise;
};

inline void validate(const TrackerConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (!(c.t_l < c.t_h)) fail("t_l must be below t_h");
    if (c.t_l < 0.0 || c.t_h > 1.0) fail("confidence thresholds must lie in [0,1]");
    const double wsum = c.omega_1 + c.omega_2 + c.omega_3 + c.omega_4;
    if (std::abs(wsum - 1.0) > 1e-9) fail("omega_1..omega_4 must sum to 1");
    if (c.omega_1 < 0 || c.omega_2 < 0 || c.omega_3 < 0 || c.omega_4 < 0)
        fail("omega weights must be non-negative");
    const double bsum = c.beta_1 + c.beta_2 + c.beta_3;
    if (std::abs(bsum - 1.0) > 1e-9) fail("beta_1..beta_3 must sum to 1");
    if (c.beta_1 < 0 || c.beta_2 < 0 || c.beta_3 < 0) fail("beta weights must be non-negative");
    if (c.gamma <= 0.0) fail("gamma must be positive");
    if (c.tau_t <= 0.0 || c.tau_t > 1.0) fail("tau_t must lie in (0,1]");
    if (c.n_g < 1 || c.n_l < 1 || c.n_m < 1) fail("n_g, n_l, n_m must be positive");
    if (c.tau_o <= 0.0 || c.tau_o >= 1.0) fail("tau_o must lie in (0,1)");
    if (c.tau_d <= 0.0) fail("tau_d must be positive");
    if (c.tau_s <= 0.0 || c.tau_s > 1.0) fail("tau_s must lie in (0,1]");
    if (c.alpha < 0.0 || c.alpha > 1.0) fail("alpha must lie in [0,1]");
    if (c.gate_max_cost <= 0.0 || c.gate_max_cost > 1.0) fail("gate_max_cost must lie in (0,1]");
    if (c.max_lost_age < 1) fail("max_lost_age must be positive");
    if (c.h_max < 2) fail("h_max must be at least 2");
    if (c.frame_w <= 0.0 || c.frame_h <= 0.0) fail("frame dimensions must be positive");
}

inline void validate(const ScenarioConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (c.n_targets < 1 || c.n_targets > 3) fail("n_targets must lie in 1..3");
    if (c.frames < 1) fail("frames must be positive");
    if (c.frame_w <= 0.0 || c.frame_h <= 0.0) fail("frame dimensions must be positive");
    const double msum = c.mix_cv + c.mix_hover + c.mix_dive + c.mix_maneuver;
    if (c.mix_cv < 0 || c.mix_hover < 0 || c.mix_dive < 0 || c.mix_maneuver < 0)
        fail("motion mix weights must be non-negative");
    if (std::abs(msum - 1.0) > 1e-9) fail("motion mix weights must sum to 1");
    if (c.size_min <= 0.0 || c.size_max < c.size_min) fail("target size range invalid");
    if (c.size_max > std::min(c.frame_w, c.frame_h) / 4.0)
        fail("size_max too large for the frame");
}

inline void validate(const NoiseModel& c) {
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (c.p_miss < 0.0 || c.p_miss > 1.0) fail("p_miss must lie in [0,1]");
    if (c.p_miss_local < 0.0 || c.p_miss_local > 1.0) fail("p_miss_local must lie in [0,1]");
    if (c.loc_noise_std < 0.0 || c.size_noise_std < 0.0) fail("noise stds must be non-negative");
    if (c.fp_rate < 0.0) fail("fp_rate must be non-negative");
    if (c.conf_base <= 0.0 || c.conf_base > 1.0) fail("conf_base must lie in (0,1]");
    if (c.conf_penalty < 0.0) fail("conf_penalty must be non-negative");
    for (const auto& o : c.occlusions) {
        if (o.duration < 1) fail("occlusion duration must be at least 1");
        if (o.start < 1) fail("occlusion start must be at least 1");
    }
}

inline void validate(const RunConfig& c) {
    validate(c.tracker);
    validate(c.scenario);
    validate(c.noise);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<Occlusion> parse_occlusions(const std::string& value, int line_no) {
    std::vector<Occlusion> out;
    const std::string v = trim(value);
    if (v.empty() || v == "none") return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        Occlusion o;
        if (std::sscanf(trim(item).c_str(), "%d:%d:%d", &o.target, &o.start, &o.duration) != 3)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": occlusion entries must look like target:start:duration");
        out.push_back(o);
    }
    return out;
}

}  // namespace detail

/// Parses the flat `key = value` run-configuration format. Unknown keys are
/// rejected; absent keys keep the values of `base` (defaults, usually).
inline RunConfig parse_config_stream(std::istream& in, RunConfig base = RunConfig{}) {
    RunConfig rc = std::move(base);
    std::map<std::string, std::function<void(double)>> num_keys = {
        {"t_h", [&](double v) { rc.tracker.t_h = v; }},
        {"t_l", [&](double v) { rc.tracker.t_l = v; }},
        {"omega_1", [&](double v) { rc.tracker.omega_1 = v; }},
        {"omega_2", [&](double v) { rc.tracker.omega_2 = v; }},
        {"omega_3", [&](double v) { rc.tracker.omega_3 = v; }},
        {"omega_4", [&](double v) { rc.tracker.omega_4 = v; }},
        {"beta_1", [&](double v) { rc.tracker.beta_1 = v; }},
        {"beta_2", [&](double v) { rc.tracker.beta_2 = v; }},
        {"beta_3", [&](double v) { rc.tracker.beta_3 = v; }},
        {"gamma", [&](double v) { rc.tracker.gamma = v; }},
        {"tau_t", [&](double v) { rc.tracker.tau_t = v; }},
        {"n_g", [&](double v) { rc.tracker.n_g = static_cast<int>(v); }},
        {"n_l", [&](double v) { rc.tracker.n_l = static_cast<int>(v); }},
        {"n_m", [&](double v) { rc.tracker.n_m = static_cast<int>(v); }},
        {"tau_o", [&](double v) { rc.tracker.tau_o = v; }},
        {"tau_d", [&](double v) { rc.tracker.tau_d = v; }},
        {"tau_s", [&](double v) { rc.tracker.tau_s = v; }},
        {"alpha", [&](double v) { rc.tracker.alpha = v; }},
        {"gate_max_cost", [&](double v) { rc.tracker.gate_max_cost = v; }},
        {"max_lost_age", [&](double v) { rc.tracker.max_lost_age = static_cast<int>(v); }},
        {"h_max", [&](double v) { rc.tracker.h_max = static_cast<int>(v); }},
        {"frame_w",
         [&](double v) {
             rc.tracker.frame_w = v;
             rc.scenario.frame_w = v;
         }},
        {"frame_h",
         [&](double v) {
             rc.tracker.frame_h = v;
             rc.scenario.frame_h = v;
         }},
        {"n_targets", [&](double v) { rc.scenario.n_targets = static_cast<int>(v); }},
        {"frames", [&](double v) { rc.scenario.frames = static_cast<int>(v); }},
        {"seed", [&](double v) { rc.scenario.seed = static_cast<std::uint64_t>(v); }},
        {"size_min", [&](double v) { rc.scenario.size_min = v; }},
        {"size_max", [&](double v) { rc.scenario.size_max = v; }},
        {"mix_cv", [&](double v) { rc.scenario.mix_cv = v; }},
        {"mix_hover", [&](double v) { rc.scenario.mix_hover = v; }},
        {"mix_dive", [&](double v) { rc.scenario.mix_dive = v; }},
        {"mix_maneuver", [&](double v) { rc.scenario.mix_maneuver = v; }},
        {"p_miss", [&](double v) { rc.noise.p_miss = v; }},
        {"p_miss_local", [&](double v) { rc.noise.p_miss_local = v; }},
        {"loc_noise_std", [&](double v) { rc.noise.loc_noise_std = v; }},
        {"size_noise_std", [&](double v) { rc.noise.size_noise_std = v; }},
        {"fp_rate", [&](double v) { rc.noise.fp_rate = v; }},
        {"conf_base", [&](double v) { rc.noise.conf_base = v; }},
        {"conf_penalty", [&](double v) { rc.noise.conf_penalty = v; }},
    };

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "occlusions") {
            rc.noise.occlusions = detail::parse_occlusions(value, line_no);
            continue;
        }
        const auto it = num_keys.find(key);
        if (it == num_keys.end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                              "'");
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            it->second(v);
        } catch (const std::exception&) {
            throw ConfigError("config line " + std::to_string(line_no) + ": bad value '" + value +
                              "' for key '" + key + "'");
        }
    }
    validate(rc);
    return rc;
}

inline RunConfig parse_config_file(const std::string& path, RunConfig base = RunConfig{}) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    return parse_config_stream(f, std::move(base));
}

inline std::string serialize_config(const RunConfig& rc) {
    std::ostringstream out;
    out.precision(12);
    auto kv = [&](const char* k, auto v) { out << k << " = " << v << "\n"; };
    kv("t_h", rc.tracker.t_h);
    kv("t_l", rc.tracker.t_l);
    kv("omega_1", rc.tracker.omega_1);
    kv("omega_2", rc.tracker.omega_2);
    kv("omega_3", rc.tracker.omega_3);
    kv("omega_4", rc.tracker.omega_4);
    kv("beta_1", rc.tracker.beta_1);
    kv("beta_2", rc.tracker.beta_2);
    kv("beta_3", rc.tracker.beta_3);
    kv("gamma", rc.tracker.gamma);
    kv("tau_t", rc.tracker.tau_t);
    kv("n_g", rc.tracker.n_g);
    kv("n_l", rc.tracker.n_l);
    kv("n_m", rc.tracker.n_m);
    kv("tau_o", rc.tracker.tau_o);
    kv("tau_d", rc.tracker.tau_d);
    kv("tau_s", rc.tracker.tau_s);
    kv("alpha", rc.tracker.alpha);
    kv("gate_max_cost", rc.tracker.gate_max_cost);
    kv("max_lost_age", rc.tracker.max_lost_age);
    kv("h_max", rc.tracker.h_max);
    kv("frame_w", rc.tracker.frame_w);
    kv("frame_h", rc.tracker.frame_h);
    kv("n_targets", rc.scenario.n_targets);
    kv("frames", rc.scenario.frames);
    kv("seed", rc.scenario.seed);
    kv("size_min", rc.scenario.size_min);
    kv("size_max", rc.scenario.size_max);
    kv("mix_cv", rc.scenario.mix_cv);
    kv("mix_hover", rc.scenario.mix_hover);
    kv("mix_dive", rc.scenario.mix_dive);
    kv("mix_maneuver", rc.scenario.mix_maneuver);
    kv("p_miss", rc.noise.p_miss);
    kv("p_miss_local", rc.noise.p_miss_local);
    kv("loc_noise_std", rc.noise.loc_noise_std);
    kv("size_noise_std", rc.noise.size_noise_std);
    kv("fp_rate", rc.noise.fp_rate);
    kv("conf_base", rc.noise.conf_base);
    kv("conf_penalty", rc.noise.conf_penalty);
    if (!rc.noise.occlusions.empty()) {
        out << "occlusions = ";
        for (std::size_t i = 0; i < rc.noise.occlusions.size(); ++i) {
            const auto& o = rc.noise.occlusions[i];
            if (i) out << ", ";
            out << o.target << ":" << o.start << ":" << o.duration;
        }
        out << "\n";
    }
    return out.str();
}

inline void write_config_file(const std::string& path, const RunConfig& rc) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write config file: " + path);
    f << serialize_config(rc);
}

}  // namespace jptrack
