#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "jptrack/config.hpp"
#include "jptrack/metrics.hpp"
#include "jptrack/scheduler.hpp"
#include "jptrack/sim.hpp"
#include "jptrack/tracker.hpp"

namespace jptrack {

struct RunOptions {
    bool baseline = false;  // IoU-only association, no recovery
    bool use_pmr = true;
    bool use_ld = true;  // enable the local-detection mode switch
};

struct RunOutput {
    metrics::TrajectorySet predictions;
    std::vector<Mode> mode_trace;  // detection mode used on each frame
    double steps_per_sec = 0.0;
    int frames = 0;
};

/// Drives tracker + scheduler over a scenario. Global-mode frames read the
/// pre-rendered detection stream; local-mode frames query the ROI detector
/// oracle on the fly.
inline RunOutput run_tracking(const metrics::TrajectorySet& gt,
                              const std::map<int, std::vector<Detection>>& det_global,
                              const RunConfig& rc, RunOptions opt = {}) {
    TrackerOptions topt;
    topt.baseline = opt.baseline;
    topt.use_pmr = opt.use_pmr && !opt.baseline;
    Tracker tracker(rc.tracker, topt);
    Scheduler sched(rc.tracker);

    RunOutput out;
    int last_frame = gt.frames.empty() ? 0 : gt.frames.rbegin()->first;
    if (!det_global.empty()) last_frame = std::max(last_frame, det_global.rbegin()->first);
    const auto t0 = std::chrono::steady_clock::now();

    for (int frame = 1; frame <= last_frame; ++frame) {
        const Mode mode = opt.use_ld ? sched.mode() : Mode::GD;
        out.mode_trace.push_back(mode);

        std::vector<Detection> dets;
        std::map<int, int> found_per_roi;
        if (mode == Mode::LD) {
            const auto local =
                sim::roi_detector_oracle(sched.rois(), frame, gt, rc.noise, rc.tracker.frame_w,
                                         rc.tracker.frame_h, rc.scenario.seed);
            for (const auto& d : local) {
                ++found_per_roi[d.roi_id];
                for (const auto& roi : sched.rois())
                    if (roi.id == d.roi_id) {
                        dets.push_back(to_global(d, roi));
                        break;
                    }
            }
        } else {
            const auto it = det_global.find(frame);
            if (it != det_global.end()) dets = it->second;
        }

        const FrameResult res = tracker.step(dets, frame);
        for (const auto& o : res.outputs) out.predictions.add(frame, o.id, o.box);
        if (opt.use_ld) sched.advance(tracker.tracks(), found_per_roi, frame);
    }

    const auto t1 = std::chrono::steady_clock::now();
    out.frames = last_frame;
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    out.steps_per_sec = secs > 0.0 ? last_frame / secs : 0.0;
    return out;
}

struct SuiteScenario {
    ScenarioConfig scenario;
    NoiseModel noise;
};

/// Seeded scenario suites for the ablation comparison. "occlusion" injects
/// per-target dropout windows, "crossing" uses busy intersecting paths,
/// "mixed" does both.
inline std::vector<SuiteScenario> make_suite(const std::string& name, int count,
                                             std::uint64_t base_seed) {
    const bool with_occlusions = name == "occlusion" || name == "mixed";
    const bool with_crossings = name == "crossing" || name == "mixed";
    if (!with_occlusions && !with_crossings)
        throw ConfigError("unknown suite '" + name + "' (use occlusion, crossing or mixed)");

    std::vector<SuiteScenario> suite;
    for (int i = 0; i < count; ++i) {
        SuiteScenario s;
        s.scenario.n_targets = 3;
        s.scenario.frames = 600;
        s.scenario.seed = base_seed + static_cast<std::uint64_t>(i);
        if (with_crossings) {
            s.scenario.mix_cv = 0.5;
            s.scenario.mix_hover = 0.1;
            s.scenario.mix_dive = 0.0;
            s.scenario.mix_maneuver = 0.4;
        } else {
            s.scenario.mix_cv = 0.5;
            s.scenario.mix_hover = 0.3;
            s.scenario.mix_dive = 0.1;
            s.scenario.mix_maneuver = 0.1;
        }
        // the detector contrast the scheduler exploits: full-frame scans of
        // tiny targets miss often, cropped windows rarely
        s.noise.p_miss = 0.18;
        s.noise.p_miss_local = 0.03;
        s.noise.loc_noise_std = 1.0;
        s.noise.size_noise_std = 0.5;
        s.noise.fp_rate = 0.5;
        if (with_occlusions) {
            std::mt19937_64 rng(sim::mix_seed(s.scenario.seed, 0x0cc1));
            std::uniform_int_distribution<int> start1(80, 250), start2(330, 500), dur(8, 12);
            for (int target = 1; target <= s.scenario.n_targets; ++target) {
                s.noise.occlusions.push_back({target, start1(rng), dur(rng)});
                s.noise.occlusions.push_back({target, start2(rng), dur(rng)});
            }
        }
        suite.push_back(s);
    }
    return suite;
}

struct AblationRow {
    std::string label;
    RunOptions options;
    long idsw = 0;
    double idf1 = 0.0, mota = 0.0, motp = 0.0, hota = 0.0;  // suite means
};

inline std::vector<std::pair<std::string, RunOptions>> ablation_rows() {
    return {
        {"iou-baseline", {true, false, false}},
        {"+jcma", {false, false, false}},
        {"+jcma+pmr", {false, true, false}},
        {"+jcma+pmr+gd/ld", {false, true, true}},
    };
}

inline AblationRow run_suite(const std::vector<SuiteScenario>& suite, const TrackerConfig& tcfg,
                             const std::string& label, RunOptions opt) {
    AblationRow row;
    row.label = label;
    row.options = opt;
    for (const auto& s : suite) {
        RunConfig rc;
        rc.tracker = tcfg;
        rc.tracker.frame_w = s.scenario.frame_w;
        rc.tracker.frame_h = s.scenario.frame_h;
        rc.scenario = s.scenario;
        rc.noise = s.noise;
        const auto gt = sim::gen_scenario(s.scenario);
        const auto dets = sim::render_detections(gt, s.noise, s.scenario.frame_w,
                                                 s.scenario.frame_h, s.scenario.seed);
        const auto run = run_tracking(gt, dets, rc, opt);
        const auto rep = metrics::evaluate(gt, run.predictions);
        row.idsw += rep.idsw;
        row.idf1 += rep.idf1;
        row.mota += rep.mota;
        row.motp += rep.motp;
        row.hota += rep.hota;
    }
    const double n = static_cast<double>(suite.size());
    row.idf1 /= n;
    row.mota /= n;
    row.motp /= n;
    row.hota /= n;
    return row;
}

inline std::vector<AblationRow> run_ablation(const std::vector<SuiteScenario>& suite,
                                             const TrackerConfig& tcfg) {
    std::vector<AblationRow> rows;
    for (const auto& [label, opt] : ablation_rows())
        rows.push_back(run_suite(suite, tcfg, label, opt));
    return rows;
}

}  // namespace jptrack
