#pragma once

#include <cmath>
#include <deque>
#include <vector>

#include "jptrack/geometry.hpp"
#include "jptrack/kalman.hpp"

namespace jptrack {

enum class TrackState { Tentative, Active, Lost, Removed };

struct HistoryEntry {
    int frame = 0;
    BoundingBox box;
    Vec2 center;
    Vec2 velocity;  // px/frame, finite difference to the previous entry; zero for the first
};

/// Identity-bearing trajectory. History holds observed states only (no
/// coasted predictions) and is capped at h_max entries.
struct Track {
    int id = 0;
    TrackState state = TrackState::Tentative;
    MotionState motion;
    std::deque<HistoryEntry> history;
    std::deque<double> direction_history;  // radians of each observed velocity
    int last_update_frame = 0;
    int consecutive_matched = 0;
    double last_confidence = 0.0;

    bool has_history() const { return !history.empty(); }
    const HistoryEntry& newest() const { return history.back(); }
    Vec2 last_center() const { return history.back().center; }
    BoundingBox last_box() const { return history.back().box; }

    /// Most recent observed velocity; zero before the second observation.
    Vec2 last_velocity() const {
        if (history.size() < 2) return {0.0, 0.0};
        return history.back().velocity;
    }

    /// Mean observed speed over the newest `window` velocity samples.
    double avg_speed(int window) const {
        if (history.size() < 2) return 0.0;
        double sum = 0.0;
        int n = 0;
        for (auto it = history.rbegin(); it != history.rend() && n < window; ++it) {
            if (it + 1 == history.rend()) break;  // the first entry has no velocity
            sum += it->velocity.norm();
            ++n;
        }
        return n > 0 ? sum / n : 0.0;
    }

    void push_observation(int frame, const BoundingBox& box, double confidence, int h_max) {
        HistoryEntry e;
        e.frame = frame;
        e.box = box;
        e.center = jptrack::center(box);
        if (!history.empty()) {
            const auto& prev = history.back();
            const double dt = std::max(1, frame - prev.frame);
            e.velocity = (e.center - prev.center) / dt;
            direction_history.push_back(std::atan2(e.velocity.y, e.velocity.x));
            while (static_cast<int>(direction_history.size()) > h_max) direction_history.pop_front();
        }
        history.push_back(e);
        while (static_cast<int>(history.size()) > h_max) history.pop_front();
        last_update_frame = frame;
        last_confidence = confidence;
    }
};

}  // namespace jptrack
