#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "jptrack/assignment.hpp"
#include "jptrack/config.hpp"
#include "jptrack/geometry.hpp"
#include "jptrack/track.hpp"

namespace jptrack {

inline double cost_iou(const BoundingBox& t_pred, const BoundingBox& d) {
    return 1.0 - iou(t_pred, d);
}

inline double cost_dist(const BoundingBox& t_pred, const BoundingBox& d) {
    const double scale = (t_pred.w + t_pred.h + d.w + d.h) / 4.0 * 2.0;
    const double dist = (center(t_pred) - center(d)).norm();
    return std::min(1.0, dist / scale);
}

/// Speed/direction/acceleration consistency between a track's observed
/// motion and the displacement implied by taking detection `d`. Undefined
/// (returns 0) before the track has an observed velocity; the composite
/// cost drops the term in that case instead of using the 0.
inline double cost_motion(const Track& t, const Detection& d, const TrackerConfig& cfg) {
    if (t.history.size() < 2) return 0.0;

    const Vec2 c_last = t.last_center();
    const Vec2 c_det = center(d.box);
    const double dt = std::max(1, d.frame - t.newest().frame);
    const Vec2 displacement = (c_det - c_last) / dt;

    const double v_expected = displacement.norm();
    const double v_avg = t.avg_speed(5);
    const double c_speed = std::min(1.0, std::abs(v_expected - v_avg) / std::max(50.0, 2.0 + v_avg));

    const Vec2 v_last = t.last_velocity();
    double c_direction = 0.0;
    if (displacement.norm() > 1e-9 && v_last.norm() > 1e-9) {
        double dtheta = std::atan2(displacement.y, displacement.x) -
                        std::atan2(v_last.y, v_last.x);
        while (dtheta > std::numbers::pi) dtheta -= 2.0 * std::numbers::pi;
        while (dtheta < -std::numbers::pi) dtheta += 2.0 * std::numbers::pi;
        c_direction = std::min(1.0, std::abs(dtheta) / (std::numbers::pi / 2.0));
    }

    const double a_expected = (displacement - v_last).norm();
    const double c_acceleration = std::min(1.0, a_expected / 30.0);

    return cfg.beta_1 * c_speed + cfg.beta_2 * c_direction + cfg.beta_3 * c_acceleration;
}

/// Structural term: how similarly the rest of the scene is arranged around
/// the predicted track position and around the candidate detection.
inline double cost_rel(Vec2 c_i, Vec2 c_j, const std::vector<Vec2>& others) {
    if (others.empty()) return 0.0;
    double sum = 0.0;
    int m = 0;
    for (const Vec2& c_k : others) {
        const Vec2 a = c_k - c_i;
        const Vec2 b = c_k - c_j;
        const double na = a.norm();
        const double nb = b.norm();
        if (na < 1e-12 || nb < 1e-12) continue;  // reference point coincides with an endpoint
        sum += a.dot(b) / (na * nb);
        ++m;
    }
    if (m == 0) return 0.0;
    const double raw = 1.0 - sum / m;  // in [0,2]
    return std::clamp(raw, 0.0, 1.0);
}

/// Predicted box for costing. The track's motion state must already hold
/// the current-frame prior (kf_predict applied by the pipeline).
inline BoundingBox predicted_box_of(const Track& t) { return state_box(t.motion); }

namespace detail {

/// Scene constellation: detection centers plus predicted track centers,
/// with track points dropped when they coincide with a detection (the same
/// object reported twice).
inline std::vector<std::pair<Vec2, int>> rel_point_pool(const std::vector<const Track*>& tracks,
                                                        const std::vector<Detection>& dets) {
    std::vector<std::pair<Vec2, int>> pool;  // (point, det index or ~track index)
    pool.reserve(tracks.size() + dets.size());
    for (std::size_t j = 0; j < dets.size(); ++j)
        pool.emplace_back(center(dets[j].box), static_cast<int>(j));
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const Vec2 c = center(predicted_box_of(*tracks[i]));
        bool duplicate = false;
        for (const auto& d : dets)
            if ((center(d.box) - c).norm() < 1.0) {
                duplicate = true;
                break;
            }
        if (!duplicate) pool.emplace_back(c, ~static_cast<int>(i));
    }
    return pool;
}

}  // namespace detail

/// Composite association cost over predicted tracks and detections. Terms
/// that are undefined for a pair (no observed velocity yet, or no other
/// objects in the scene) give their weight back to the defined ones.
inline CostMatrix jcma_cost(const std::vector<const Track*>& tracks,
                            const std::vector<Detection>& dets, const TrackerConfig& cfg) {
    CostMatrix m(static_cast<int>(tracks.size()), static_cast<int>(dets.size()));
    const auto pool = detail::rel_point_pool(tracks, dets);

    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const Track& t = *tracks[i];
        const BoundingBox pred = predicted_box_of(t);
        const Vec2 c_i = center(pred);
        const bool has_motion = t.history.size() >= 2;

        for (std::size_t j = 0; j < dets.size(); ++j) {
            const Detection& d = dets[j];
            const Vec2 c_j = center(d.box);

            std::vector<Vec2> others;
            others.reserve(pool.size());
            for (const auto& [pt, tag] : pool) {
                if (tag == static_cast<int>(j)) continue;
                if (tag == ~static_cast<int>(i)) continue;
                others.push_back(pt);
            }

            const double c_rel = cost_rel(c_i, c_j, others);
            const bool has_rel = !others.empty();

            double w1 = cfg.omega_1, w2 = cfg.omega_2;
            double w3 = has_motion ? cfg.omega_3 : 0.0;
            double w4 = has_rel ? cfg.omega_4 : 0.0;
            const double wsum = w1 + w2 + w3 + w4;

            double cost = w1 * cost_iou(pred, d.box) + w2 * cost_dist(pred, d.box);
            if (has_motion) cost += w3 * cost_motion(t, d, cfg);
            if (has_rel) cost += w4 * c_rel;
            m.at(static_cast<int>(i), static_cast<int>(j)) = cost / wsum;
        }
    }
    return m;
}

/// IoU-only cost matrix for the ablation baseline.
inline CostMatrix iou_cost(const std::vector<const Track*>& tracks,
                           const std::vector<Detection>& dets) {
    CostMatrix m(static_cast<int>(tracks.size()), static_cast<int>(dets.size()));
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const BoundingBox pred = predicted_box_of(*tracks[i]);
        for (std::size_t j = 0; j < dets.size(); ++j)
            m.at(static_cast<int>(i), static_cast<int>(j)) = cost_iou(pred, dets[j].box);
    }
    return m;
}

}  // namespace jptrack
