#pragma once

#include <stdexcept>
#include <vector>

#include "jptrack/assoc.hpp"
#include "jptrack/config.hpp"
#include "jptrack/pmr.hpp"
#include "jptrack/track.hpp"

namespace jptrack {

struct TrackerOptions {
    bool baseline = false;  // IoU-only cost, no memory recovery
    bool use_pmr = true;
};

struct FrameEvents {
    int births = 0;
    int recoveries = 0;
    int losses = 0;
    int removals = 0;
    int id_assignments = 0;
    // stage bookkeeping
    int stage1_candidates = 0;
    int stage1_pairs = 0;
    int stage2_candidates = 0;
    int stage2_pairs = 0;
    int stage3_candidates = 0;
};

struct TrackOutput {
    int id = 0;
    BoundingBox box;
    double confidence = 0.0;
};

struct FrameResult {
    int frame = 0;
    std::vector<TrackOutput> outputs;  // Active tracks only
    FrameEvents events;
};

inline std::pair<std::vector<Detection>, std::vector<Detection>> split_by_confidence(
    const std::vector<Detection>& dets, double t_h, double t_l) {
    if (!(t_l < t_h)) throw ConfigError("split_by_confidence: t_l must be below t_h");
    std::pair<std::vector<Detection>, std::vector<Detection>> out;
    for (const auto& d : dets) {
        if (d.confidence >= t_h)
            out.first.push_back(d);
        else if (d.confidence >= t_l)
            out.second.push_back(d);
    }
    return out;
}

/// Three-stage tracker: composite-cost matching of high then low confidence
/// detections against live tracks, then mixture-model recovery of lost
/// identities from the high-confidence leftovers.
class Tracker {
  public:
    explicit Tracker(TrackerConfig cfg, TrackerOptions opt = {}) : cfg_(cfg), opt_(opt) {
        validate(cfg_);
        if (opt_.baseline) opt_.use_pmr = false;
    }

    const TrackerConfig& config() const { return cfg_; }
    const std::vector<Track>& tracks() const { return tracks_; }
    int frame() const { return frame_; }

    FrameResult step(const std::vector<Detection>& dets, int frame) {
        if (frame <= frame_)
            throw std::invalid_argument("step: frame index must advance");
        for (const auto& d : dets)
            if (d.frame != frame)
                throw std::invalid_argument("step: detection carries a foreign frame index");
        frame_ = frame;

        FrameResult res;
        res.frame = frame;

        // Predict all live + lost states to the current frame. Stages 1-2
        // only see Active/Tentative; Lost states stay current for ROI
        // placement and recovery bookkeeping.
        for (auto& t : tracks_)
            if (t.state != TrackState::Removed) t.motion = kf_predict(t.motion);

        auto [high, low] = split_by_confidence(dets, cfg_.t_h, cfg_.t_l);

        std::vector<int> live;  // indices into tracks_, Active + Tentative
        for (std::size_t i = 0; i < tracks_.size(); ++i)
            if (tracks_[i].state == TrackState::Active || tracks_[i].state == TrackState::Tentative)
                live.push_back(static_cast<int>(i));

        std::vector<char> track_matched(tracks_.size(), 0);
        std::vector<char> det_used_high(high.size(), 0), det_used_low(low.size(), 0);

        // Stage 1: high-confidence detections vs live tracks.
        res.events.stage1_candidates = static_cast<int>(high.size());
        {
            std::vector<const Track*> pool;
            for (int i : live) pool.push_back(&tracks_[i]);
            const CostMatrix m = opt_.baseline ? iou_cost(pool, high) : jcma_cost(pool, high, cfg_);
            const Assignment a = solve_assignment(m, cfg_.gate_max_cost);
            for (const auto& [r, c] : a.pairs) {
                apply_match(tracks_[live[r]], high[c], frame);
                track_matched[live[r]] = 1;
                det_used_high[c] = 1;
                ++res.events.stage1_pairs;
            }
        }

        // Stage 2: remaining live tracks vs low-confidence detections.
        res.events.stage2_candidates = static_cast<int>(low.size());
        {
            std::vector<int> remaining;
            for (int i : live)
                if (!track_matched[i]) remaining.push_back(i);
            std::vector<const Track*> pool;
            for (int i : remaining) pool.push_back(&tracks_[i]);
            const CostMatrix m = opt_.baseline ? iou_cost(pool, low) : jcma_cost(pool, low, cfg_);
            const Assignment a = solve_assignment(m, cfg_.gate_max_cost);
            for (const auto& [r, c] : a.pairs) {
                apply_match(tracks_[remaining[r]], low[c], frame);
                track_matched[remaining[r]] = 1;
                det_used_low[c] = 1;
                ++res.events.stage2_pairs;
            }
        }

        // Stage 3: recovery of lost tracks from unmatched high-confidence
        // detections, then births from whatever is still free.
        std::vector<Detection> leftovers;
        for (std::size_t c = 0; c < high.size(); ++c)
            if (!det_used_high[c]) leftovers.push_back(high[c]);
        res.events.stage3_candidates = static_cast<int>(leftovers.size());

        std::vector<char> leftover_used(leftovers.size(), 0);
        if (opt_.use_pmr && !leftovers.empty()) {
            std::vector<int> lost;
            for (std::size_t i = 0; i < tracks_.size(); ++i)
                if (tracks_[i].state == TrackState::Lost) lost.push_back(static_cast<int>(i));
            std::vector<const Track*> pool;
            for (int i : lost) pool.push_back(&tracks_[i]);
            const Assignment a = recover(pool, leftovers, cfg_, frame);
            for (const auto& [r, c] : a.pairs) {
                Track& t = tracks_[lost[r]];
                reactivate(t, leftovers[c], frame);
                track_matched[lost[r]] = 1;
                leftover_used[c] = 1;
                ++res.events.recoveries;
            }
        }

        // Lifecycle for tracks that saw nothing this frame; newborns are
        // added afterwards so the pass only covers pre-existing tracks.
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            Track& t = tracks_[i];
            if (track_matched[i] || t.state == TrackState::Removed) continue;
            if (t.state == TrackState::Active) {
                t.state = TrackState::Lost;
                t.consecutive_matched = 0;
                ++res.events.losses;
            } else if (t.state == TrackState::Tentative) {
                t.state = TrackState::Removed;
                ++res.events.removals;
            } else if (t.state == TrackState::Lost) {
                if (frame - t.last_update_frame > cfg_.max_lost_age) {
                    t.state = TrackState::Removed;
                    ++res.events.removals;
                }
            }
        }

        for (std::size_t c = 0; c < leftovers.size(); ++c) {
            if (leftover_used[c]) continue;
            birth(leftovers[c], frame);
            ++res.events.births;
        }

        res.events.id_assignments =
            res.events.stage1_pairs + res.events.stage2_pairs + res.events.recoveries;

        for (const auto& t : tracks_)
            if (t.state == TrackState::Active)
                res.outputs.push_back({t.id, t.last_box(), t.last_confidence});

        prune_removed();
        return res;
    }

  private:
    void apply_match(Track& t, const Detection& d, int frame) {
        t.push_observation(frame, d.box, d.confidence, cfg_.h_max);
        t.motion = kf_update(t.motion, d.box);
        ++t.consecutive_matched;
        if (t.state == TrackState::Tentative && t.consecutive_matched >= 2)
            t.state = TrackState::Active;
    }

    void reactivate(Track& t, const Detection& d, int frame) {
        const double gap = std::max(1, frame - t.last_update_frame);
        const Vec2 v = (center(d.box) - t.last_center()) / gap;
        t.push_observation(frame, d.box, d.confidence, cfg_.h_max);
        t.motion = kf_init(d.box);
        t.motion.mean(4) = v.x;
        t.motion.mean(5) = v.y;
        t.state = TrackState::Active;
        t.consecutive_matched = 1;
    }

    void birth(const Detection& d, int frame) {
        Track t;
        t.id = next_id_++;
        // A track born on the very first frame is trusted immediately, so a
        // clean sequence has no warm-up gap in the output.
        t.state = frame == 1 ? TrackState::Active : TrackState::Tentative;
        t.motion = kf_init(d.box);
        t.push_observation(frame, d.box, d.confidence, cfg_.h_max);
        t.consecutive_matched = 1;
        tracks_.push_back(std::move(t));
    }

    void prune_removed() {
        std::erase_if(tracks_, [](const Track& t) { return t.state == TrackState::Removed; });
    }

    TrackerConfig cfg_;
    TrackerOptions opt_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    int frame_ = 0;
};

}  // namespace jptrack
