#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "jptrack/config.hpp"
#include "jptrack/geometry.hpp"
#include "jptrack/metrics.hpp"
#include "jptrack/scheduler.hpp"

namespace jptrack::sim {

/// splitmix64 step; gives every (seed, salt) pair its own RNG stream so
/// frames can be rendered independently.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class MotionPattern { ConstantVelocity, Hover, Dive, Maneuver };

namespace detail {

inline constexpr double kHoverCap = 1.9;  // px/frame, keeps hover displacement under 2

/// Reflects p into [lo, hi], flipping the velocity on each bounce.
inline void reflect(double& p, double& v, double lo, double hi) {
    if (hi <= lo) {
        p = lo;
        return;
    }
    while (p < lo || p > hi) {
        if (p < lo) {
            p = 2.0 * lo - p;
            v = -v;
        } else {
            p = 2.0 * hi - p;
            v = -v;
        }
    }
}

struct TargetWalk {
    MotionPattern pattern;
    double w, h;
    Vec2 pos, vel, anchor;
    double dive_ramp = 0.0;
    double maneuver_rate = 0.0;
};

}  // namespace detail

/// Seeded ground-truth generator. Targets move with one of four patterns and
/// bounce off the frame bounds, so every box stays inside the frame.
inline metrics::TrajectorySet gen_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x5ce9a410));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::vector<detail::TargetWalk> targets;
    for (int i = 0; i < cfg.n_targets; ++i) {
        detail::TargetWalk t;
        t.w = cfg.size_min + u01(rng) * (cfg.size_max - cfg.size_min);
        t.h = cfg.size_min + u01(rng) * (cfg.size_max - cfg.size_min);
        t.pos = {cfg.frame_w * (0.15 + 0.7 * u01(rng)), cfg.frame_h * (0.15 + 0.7 * u01(rng))};
        t.anchor = t.pos;

        const double pick = u01(rng);
        if (pick < cfg.mix_cv)
            t.pattern = MotionPattern::ConstantVelocity;
        else if (pick < cfg.mix_cv + cfg.mix_hover)
            t.pattern = MotionPattern::Hover;
        else if (pick < cfg.mix_cv + cfg.mix_hover + cfg.mix_dive)
            t.pattern = MotionPattern::Dive;
        else
            t.pattern = MotionPattern::Maneuver;

        const double speed = 2.0 + 10.0 * u01(rng);
        const double heading = 2.0 * std::numbers::pi * u01(rng);
        t.vel = {speed * std::cos(heading), speed * std::sin(heading)};
        switch (t.pattern) {
            case MotionPattern::Hover:
                t.vel = {0.0, 0.0};
                break;
            case MotionPattern::Dive:
                t.vel = {t.vel.x * 0.3, 0.5 + 1.5 * u01(rng)};
                t.dive_ramp = 0.05 + 0.15 * u01(rng);
                break;
            case MotionPattern::Maneuver:
                t.maneuver_rate = 1.0 / 30.0;
                break;
            default:
                break;
        }
        targets.push_back(t);
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    metrics::TrajectorySet gt;
    for (int frame = 1; frame <= cfg.frames; ++frame) {
        for (int i = 0; i < cfg.n_targets; ++i) {
            auto& t = targets[static_cast<std::size_t>(i)];
            switch (t.pattern) {
                case MotionPattern::Hover: {
                    t.vel = t.vel * 0.85 + (t.anchor - t.pos) * 0.05 +
                            Vec2{gauss(rng) * 0.6, gauss(rng) * 0.6};
                    const double n = t.vel.norm();
                    if (n > detail::kHoverCap) t.vel = t.vel * (detail::kHoverCap / n);
                    break;
                }
                case MotionPattern::Dive:
                    t.vel.y += t.dive_ramp * (t.vel.y >= 0 ? 1.0 : -1.0);
                    t.vel.y = std::clamp(t.vel.y, -15.0, 15.0);
                    break;
                case MotionPattern::Maneuver:
                    if (u01(rng) < t.maneuver_rate) {
                        const double turn = (u01(rng) - 0.5) * std::numbers::pi;  // up to 90 deg
                        const double c = std::cos(turn), s = std::sin(turn);
                        t.vel = {t.vel.x * c - t.vel.y * s, t.vel.x * s + t.vel.y * c};
                    }
                    break;
                default:
                    break;
            }
            t.pos = t.pos + t.vel;
            detail::reflect(t.pos.x, t.vel.x, t.w / 2.0, cfg.frame_w - t.w / 2.0);
            detail::reflect(t.pos.y, t.vel.y, t.h / 2.0, cfg.frame_h - t.h / 2.0);
            gt.add(frame, i + 1, box_from_center(t.pos, t.w, t.h));
        }
    }
    return gt;
}

namespace detail {

inline bool occluded(const NoiseModel& nm, int target, int frame) {
    for (const auto& o : nm.occlusions)
        if (o.target == target && frame >= o.start && frame < o.start + o.duration) return true;
    return false;
}

inline Detection jittered_detection(const BoundingBox& box, int frame, const NoiseModel& nm,
                                    std::mt19937_64& rng) {
    std::normal_distribution<double> loc(0.0, std::max(1e-12, nm.loc_noise_std));
    std::normal_distribution<double> size(0.0, std::max(1e-12, nm.size_noise_std));
    const double dx = nm.loc_noise_std > 0 ? loc(rng) : 0.0;
    const double dy = nm.loc_noise_std > 0 ? loc(rng) : 0.0;
    const double dw = nm.size_noise_std > 0 ? size(rng) : 0.0;
    const double dh = nm.size_noise_std > 0 ? size(rng) : 0.0;

    Detection d;
    d.frame = frame;
    d.box = {box.x + dx, box.y + dy, std::max(1.0, box.w + dw), std::max(1.0, box.h + dh)};
    const double jitter = std::hypot(dx, dy);
    const double scale = (box.w + box.h) / 2.0;
    d.confidence = std::clamp(nm.conf_base - nm.conf_penalty * (jitter / std::max(1.0, scale)),
                              0.05, 1.0);
    return d;
}

inline constexpr double kClutterSizeLo = 6.0;
inline constexpr double kClutterSizeHi = 40.0;

inline Detection clutter_detection(int frame, double x0, double y0, double w, double h,
                                   std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double bw = kClutterSizeLo + (kClutterSizeHi - kClutterSizeLo) * u01(rng);
    const double bh = kClutterSizeLo + (kClutterSizeHi - kClutterSizeLo) * u01(rng);
    Detection d;
    d.frame = frame;
    d.box = {x0 + u01(rng) * std::max(1.0, w - bw), y0 + u01(rng) * std::max(1.0, h - bh), bw, bh};
    d.confidence = 0.05 + 0.3 * u01(rng);
    return d;
}

}  // namespace detail

/// Full-frame detector stand-in for one frame: misses, jitter,
/// confidence shaping and Poisson clutter, deterministic in (seed, frame).
inline std::vector<Detection> render_frame(const metrics::TrajectorySet& gt, int frame,
                                           const NoiseModel& nm, double frame_w, double frame_h,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(frame)));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Detection> out;

    const auto it = gt.frames.find(frame);
    if (it != gt.frames.end()) {
        for (const auto& [id, box] : it->second) {
            if (detail::occluded(nm, id, frame)) continue;
            if (u01(rng) < nm.p_miss) continue;
            out.push_back(detail::jittered_detection(box, frame, nm, rng));
        }
    }
    if (nm.fp_rate > 0.0) {
        std::poisson_distribution<int> pois(nm.fp_rate);
        const int n = pois(rng);
        for (int i = 0; i < n; ++i)
            out.push_back(detail::clutter_detection(frame, 0.0, 0.0, frame_w, frame_h, rng));
    }
    return out;
}

inline std::map<int, std::vector<Detection>> render_detections(const metrics::TrajectorySet& gt,
                                                               const NoiseModel& nm,
                                                               double frame_w, double frame_h,
                                                               std::uint64_t seed) {
    std::map<int, std::vector<Detection>> out;
    for (const auto& [frame, boxes] : gt.frames)
        out[frame] = render_frame(gt, frame, nm, frame_w, frame_h, seed);
    return out;
}

/// ROI detector stand-in: each ground-truth box is reported (ROI-local, at
/// the reduced local miss rate) by the single ROI owning it — the one with
/// the largest overlap. Clutter is scaled to each window's area.
inline std::vector<Detection> roi_detector_oracle(const std::vector<ROI>& rois, int frame,
                                                  const metrics::TrajectorySet& gt,
                                                  const NoiseModel& nm, double frame_w,
                                                  double frame_h, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed ^ 0x10ca1u, static_cast<std::uint64_t>(frame)));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Detection> out;

    const auto it = gt.frames.find(frame);
    if (it != gt.frames.end()) {
        for (const auto& [id, box] : it->second) {
            if (detail::occluded(nm, id, frame)) continue;
            int owner = -1;
            double best = 0.0;
            for (std::size_t r = 0; r < rois.size(); ++r) {
                const double inter = intersection_area(rois[r].rect, box);
                if (inter > best) {
                    best = inter;
                    owner = static_cast<int>(r);
                }
            }
            if (owner < 0) continue;
            if (u01(rng) < nm.p_miss_local) continue;
            Detection d = detail::jittered_detection(box, frame, nm, rng);
            d.box.x -= rois[static_cast<std::size_t>(owner)].rect.x;
            d.box.y -= rois[static_cast<std::size_t>(owner)].rect.y;
            d.source = DetectionSource::Local;
            d.roi_id = rois[static_cast<std::size_t>(owner)].id;
            out.push_back(d);
        }
    }

    if (nm.fp_rate > 0.0) {
        const double frame_area = frame_w * frame_h;
        for (const auto& roi : rois) {
            const double rate = nm.fp_rate * roi.rect.area() / frame_area;
            std::poisson_distribution<int> pois(std::max(1e-12, rate));
            const int n = rate > 0.0 ? pois(rng) : 0;
            for (int i = 0; i < n; ++i) {
                Detection d =
                    detail::clutter_detection(frame, 0.0, 0.0, roi.rect.w, roi.rect.h, rng);
                d.source = DetectionSource::Local;
                d.roi_id = roi.id;
                out.push_back(d);
            }
        }
    }
    return out;
}

}  // namespace jptrack::sim
