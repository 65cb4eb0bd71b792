#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "jptrack/config.hpp"
#include "jptrack/geometry.hpp"
#include "jptrack/kalman.hpp"
#include "jptrack/track.hpp"

namespace jptrack {

enum class Mode { GD, LD };

inline constexpr double kRoiWindow = 300.0;

/// Local-detection window. Member tracks give the ROI its identity across
/// per-frame rebuilds; `misses` counts consecutive frames it yielded nothing.
struct ROI {
    int id = 0;
    BoundingBox rect;
    std::vector<int> member_tracks;
    int misses = 0;
};

inline BoundingBox clamp_to_frame(const BoundingBox& r, double frame_w, double frame_h) {
    BoundingBox out = r;
    out.w = std::min(out.w, frame_w);
    out.h = std::min(out.h, frame_h);
    out.x = std::clamp(out.x, 0.0, frame_w - out.w);
    out.y = std::clamp(out.y, 0.0, frame_h - out.h);
    return out;
}

/// Central sub-rect covering fraction tau_s of the ROI's area, same aspect.
inline BoundingBox safe_zone(const BoundingBox& rect, double tau_s) {
    const double s = std::sqrt(tau_s);
    return box_from_center(center(rect), rect.w * s, rect.h * s);
}

inline bool inside(const BoundingBox& r, Vec2 p) {
    return p.x >= r.x && p.x <= r.right() && p.y >= r.y && p.y <= r.bottom();
}

/// Re-centers the ROI on the member centroid when anyone drifted out of the
/// safe zone, growing it as needed so every member ends up inside.
inline ROI enforce_safe_zone(const ROI& roi, const std::vector<Vec2>& member_centers,
                             double tau_s) {
    if (member_centers.empty()) return roi;
    const BoundingBox zone = safe_zone(roi.rect, tau_s);
    bool ok = true;
    for (const Vec2& c : member_centers)
        if (!inside(zone, c)) {
            ok = false;
            break;
        }
    if (ok) return roi;

    Vec2 centroid{0.0, 0.0};
    for (const Vec2& c : member_centers) centroid = centroid + c;
    centroid = centroid / static_cast<double>(member_centers.size());

    const double s = std::sqrt(tau_s);
    double max_dx = 0.0, max_dy = 0.0;
    for (const Vec2& c : member_centers) {
        max_dx = std::max(max_dx, std::abs(c.x - centroid.x));
        max_dy = std::max(max_dy, std::abs(c.y - centroid.y));
    }
    ROI out = roi;
    const double w = std::max(roi.rect.w, 2.0 * max_dx / s + 1e-6);
    const double h = std::max(roi.rect.h, 2.0 * max_dy / s + 1e-6);
    out.rect = box_from_center(centroid, w, h);
    return out;
}

/// Transitive merge of overlapping ROIs: IoU above tau_o joins two windows
/// into their union rect until no overlapping pair remains.
inline std::vector<ROI> merge_rois(std::vector<ROI> rois, double tau_o) {
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < rois.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < rois.size() && !merged; ++j) {
                if (iou(rois[i].rect, rois[j].rect) <= tau_o) continue;
                const double x0 = std::min(rois[i].rect.x, rois[j].rect.x);
                const double y0 = std::min(rois[i].rect.y, rois[j].rect.y);
                const double x1 = std::max(rois[i].rect.right(), rois[j].rect.right());
                const double y1 = std::max(rois[i].rect.bottom(), rois[j].rect.bottom());
                rois[i].rect = {x0, y0, x1 - x0, y1 - y0};
                rois[i].member_tracks.insert(rois[i].member_tracks.end(),
                                             rois[j].member_tracks.begin(),
                                             rois[j].member_tracks.end());
                rois[i].misses = std::min(rois[i].misses, rois[j].misses);
                rois.erase(rois.begin() + static_cast<long>(j));
                merged = true;
            }
        }
    }
    return rois;
}

/// Splits a multi-target ROI once members spread past tau_d, one window per
/// single-linkage cluster; otherwise grows the window to keep everyone in
/// the safe zone.
inline std::vector<ROI> split_roi(const ROI& roi, const std::map<int, Vec2>& track_centers,
                                  double tau_d, double tau_s, int& next_roi_id) {
    std::vector<int> members;
    std::vector<Vec2> centers;
    for (int id : roi.member_tracks) {
        const auto it = track_centers.find(id);
        if (it == track_centers.end()) continue;
        members.push_back(id);
        centers.push_back(it->second);
    }
    if (members.size() < 2) {
        ROI out = roi;
        return {enforce_safe_zone(out, centers, tau_s)};
    }

    double max_dist = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            max_dist = std::max(max_dist, (centers[i] - centers[j]).norm());

    if (max_dist <= tau_d) {
        ROI out = roi;
        return {enforce_safe_zone(out, centers, tau_s)};
    }

    // agglomerative clustering, bounded cluster diameter tau_d
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < members.size(); ++i) clusters.push_back({i});
    auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double worst = 0.0;
        for (std::size_t i : a)
            for (std::size_t j : b) worst = std::max(worst, (centers[i] - centers[j]).norm());
        return worst;
    };
    while (clusters.size() > 1) {
        std::size_t best_a = 0, best_b = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a)
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                const double d = linkage(clusters[a], clusters[b]);
                if (d < best) {
                    best = d;
                    best_a = a;
                    best_b = b;
                }
            }
        if (best > tau_d) break;
        clusters[best_a].insert(clusters[best_a].end(), clusters[best_b].begin(),
                                clusters[best_b].end());
        clusters.erase(clusters.begin() + static_cast<long>(best_b));
    }

    std::vector<ROI> out;
    for (const auto& cluster : clusters) {
        ROI r;
        r.id = next_roi_id++;
        r.misses = roi.misses;
        Vec2 centroid{0.0, 0.0};
        std::vector<Vec2> cluster_centers;
        for (std::size_t j : cluster) {
            r.member_tracks.push_back(members[j]);
            cluster_centers.push_back(centers[j]);
            centroid = centroid + centers[j];
        }
        centroid = centroid / static_cast<double>(cluster_centers.size());
        r.rect = box_from_center(centroid, kRoiWindow, kRoiWindow);
        out.push_back(enforce_safe_zone(r, cluster_centers, tau_s));
    }
    return out;
}

/// Detection windows for the next frame: one per covered track, centered on
/// the one-step motion prediction, then merged/split/safe-zoned and clamped.
/// Lost tracks keep a window until they age out so a dropped target can be
/// reacquired without leaving local mode.
inline std::vector<ROI> make_rois(const std::vector<Track>& tracks, int frame,
                                  const TrackerConfig& cfg, int& next_roi_id) {
    std::map<int, Vec2> centers;
    std::vector<ROI> rois;
    for (const auto& t : tracks) {
        const bool covered =
            t.state == TrackState::Active ||
            (t.state == TrackState::Lost && frame - t.last_update_frame <= cfg.max_lost_age);
        if (!covered) continue;
        const Vec2 c = state_center(kf_predict(t.motion));
        centers[t.id] = c;
        ROI r;
        r.id = next_roi_id++;
        r.rect = clamp_to_frame(box_from_center(c, kRoiWindow, kRoiWindow), cfg.frame_w,
                                cfg.frame_h);
        r.member_tracks = {t.id};
        rois.push_back(r);
    }

    rois = merge_rois(std::move(rois), cfg.tau_o);
    std::vector<ROI> processed;
    for (const auto& r : rois) {
        auto parts = split_roi(r, centers, cfg.tau_d, cfg.tau_s, next_roi_id);
        processed.insert(processed.end(), parts.begin(), parts.end());
    }
    for (auto& r : processed) r.rect = clamp_to_frame(r.rect, cfg.frame_w, cfg.frame_h);
    return processed;
}

/// Maps an ROI-local detection back to frame coordinates.
inline Detection to_global(const Detection& d, const ROI& roi) {
    if (d.source != DetectionSource::Local || d.roi_id != roi.id)
        throw std::invalid_argument("to_global: detection does not belong to this ROI");
    Detection out = d;
    out.box.x += roi.rect.x;
    out.box.y += roi.rect.y;
    return out;
}

inline Detection to_local(const Detection& d, const ROI& roi) {
    Detection out = d;
    out.box.x -= roi.rect.x;
    out.box.y -= roi.rect.y;
    out.source = DetectionSource::Local;
    out.roi_id = roi.id;
    return out;
}

/// Frame-ordered detection-mode state machine. Call advance() once per frame
/// after tracking; rois() then holds the windows to scan on the next frame.
class Scheduler {
  public:
    explicit Scheduler(TrackerConfig cfg) : cfg_(cfg) {}

    Mode mode() const { return mode_; }
    int frames_in_mode() const { return frames_in_mode_; }
    const std::vector<ROI>& rois() const { return rois_; }

    /// True once some Active track has been matched in three or more
    /// consecutive frames.
    static bool stable_tracking(const std::vector<Track>& tracks) {
        for (const auto& t : tracks)
            if (t.state == TrackState::Active && t.consecutive_matched >= 3) return true;
        return false;
    }

    void advance(const std::vector<Track>& tracks, const std::map<int, int>& found_per_roi,
                 int frame) {
        ++frames_in_mode_;
        if (mode_ == Mode::GD) {
            if (frames_in_mode_ >= cfg_.n_g && stable_tracking(tracks)) {
                mode_ = Mode::LD;
                frames_in_mode_ = 0;
                all_miss_streak_ = 0;
                rois_ = make_rois(tracks, frame, cfg_, next_roi_id_);
            }
            return;
        }

        int total_found = 0;
        for (auto& r : rois_) {
            const auto it = found_per_roi.find(r.id);
            const int found = it == found_per_roi.end() ? 0 : it->second;
            r.misses = found > 0 ? 0 : r.misses + 1;
            total_found += found;
        }
        all_miss_streak_ = (rois_.empty() || total_found == 0) ? all_miss_streak_ + 1 : 0;

        if (all_miss_streak_ >= cfg_.n_m || frames_in_mode_ >= cfg_.n_l) {
            mode_ = Mode::GD;
            frames_in_mode_ = 0;
            rois_.clear();
            return;
        }

        auto fresh = make_rois(tracks, frame, cfg_, next_roi_id_);
        for (auto& nr : fresh) {
            int inherited = 0;
            bool found_prev = false;
            for (const auto& old : rois_) {
                for (int id : nr.member_tracks) {
                    if (std::find(old.member_tracks.begin(), old.member_tracks.end(), id) ==
                        old.member_tracks.end())
                        continue;
                    inherited = found_prev ? std::min(inherited, old.misses) : old.misses;
                    found_prev = true;
                    break;
                }
            }
            nr.misses = inherited;
        }
        rois_ = std::move(fresh);
    }

  private:
    TrackerConfig cfg_;
    Mode mode_ = Mode::GD;
    int frames_in_mode_ = 0;
    int all_miss_streak_ = 0;
    int next_roi_id_ = 1;
    std::vector<ROI> rois_;
};

}  // namespace jptrack
