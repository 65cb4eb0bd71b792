#pragma once

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "jptrack/assignment.hpp"
#include "jptrack/geometry.hpp"

namespace jptrack::metrics {

/// Frame-indexed id/box lists for either ground truth or tracker output.
struct TrajectorySet {
    std::map<int, std::vector<std::pair<int, BoundingBox>>> frames;

    void add(int frame, int id, const BoundingBox& box) { frames[frame].emplace_back(id, box); }

    long total_boxes() const {
        long n = 0;
        for (const auto& [f, v] : frames) n += static_cast<long>(v.size());
        return n;
    }

    bool empty() const { return total_boxes() == 0; }
};

struct FramePair {
    int gt_id = 0;
    int pred_id = 0;
    double iou = 0.0;
};

struct FrameMatch {
    int frame = 0;
    std::vector<FramePair> pairs;
    int unmatched_gt = 0;    // false negatives this frame
    int unmatched_pred = 0;  // false positives this frame
};

namespace detail {

/// Min-cost matching of one frame restricted to IoU >= threshold. Pairs in
/// `keep` (gt_id -> pred_id) are retained first when still above threshold.
inline FrameMatch match_one_frame(int frame, const std::vector<std::pair<int, BoundingBox>>& gt,
                                  const std::vector<std::pair<int, BoundingBox>>& pred,
                                  double iou_threshold, const std::map<int, int>* keep) {
    FrameMatch out;
    out.frame = frame;
    std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);

    if (keep) {
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const auto it = keep->find(gt[i].first);
            if (it == keep->end()) continue;
            for (std::size_t j = 0; j < pred.size(); ++j) {
                if (pred_used[j] || pred[j].first != it->second) continue;
                const double v = iou(gt[i].second, pred[j].second);
                if (v >= iou_threshold) {
                    out.pairs.push_back({gt[i].first, pred[j].first, v});
                    gt_used[i] = 1;
                    pred_used[j] = 1;
                }
                break;
            }
        }
    }

    std::vector<int> gs, ps;
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (!gt_used[i]) gs.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < pred.size(); ++j)
        if (!pred_used[j]) ps.push_back(static_cast<int>(j));

    if (!gs.empty() && !ps.empty()) {
        CostMatrix m(static_cast<int>(gs.size()), static_cast<int>(ps.size()));
        for (std::size_t a = 0; a < gs.size(); ++a)
            for (std::size_t b = 0; b < ps.size(); ++b)
                m.at(static_cast<int>(a), static_cast<int>(b)) =
                    1.0 - iou(gt[gs[a]].second, pred[ps[b]].second);
        const Assignment asg = solve_assignment(m, 1.0 - iou_threshold);
        for (const auto& [a, b] : asg.pairs) {
            const double v = iou(gt[gs[a]].second, pred[ps[b]].second);
            out.pairs.push_back({gt[gs[a]].first, pred[ps[b]].first, v});
            gt_used[gs[a]] = 1;
            pred_used[ps[b]] = 1;
        }
    }

    for (std::size_t i = 0; i < gt.size(); ++i)
        if (!gt_used[i]) ++out.unmatched_gt;
    for (std::size_t j = 0; j < pred.size(); ++j)
        if (!pred_used[j]) ++out.unmatched_pred;
    return out;
}

inline std::set<int> all_frames(const TrajectorySet& a, const TrajectorySet& b) {
    std::set<int> fs;
    for (const auto& [f, v] : a.frames) fs.insert(f);
    for (const auto& [f, v] : b.frames) fs.insert(f);
    return fs;
}

static const std::vector<std::pair<int, BoundingBox>> kNoBoxes{};

inline const std::vector<std::pair<int, BoundingBox>>& boxes_at(const TrajectorySet& s, int f) {
    const auto it = s.frames.find(f);
    return it == s.frames.end() ? kNoBoxes : it->second;
}

}  // namespace detail

/// Frame-by-frame correspondence with previous-frame matches kept while they
/// still clear the threshold, so identity switches are well defined.
inline std::vector<FrameMatch> match_frames(const TrajectorySet& gt, const TrajectorySet& pred,
                                            double iou_threshold) {
    std::vector<FrameMatch> out;
    std::map<int, int> carry;  // gt id -> pred id from the previous frames
    for (int f : detail::all_frames(gt, pred)) {
        FrameMatch fm = detail::match_one_frame(f, detail::boxes_at(gt, f),
                                                detail::boxes_at(pred, f), iou_threshold, &carry);
        for (const auto& p : fm.pairs) carry[p.gt_id] = p.pred_id;
        out.push_back(std::move(fm));
    }
    return out;
}

/// Number of times a ground-truth id changes its matched prediction id
/// between consecutive matched frames; unmatched gaps do not reset identity.
inline long idsw_count(const std::vector<FrameMatch>& matches) {
    long switches = 0;
    std::map<int, int> last;
    for (const auto& fm : matches)
        for (const auto& p : fm.pairs) {
            const auto it = last.find(p.gt_id);
            if (it != last.end() && it->second != p.pred_id) ++switches;
            last[p.gt_id] = p.pred_id;
        }
    return switches;
}

inline double mota(long fp, long fn, long idsw, long gt_total) {
    if (gt_total <= 0) throw std::invalid_argument("mota: no ground-truth objects");
    return 1.0 - static_cast<double>(fp + fn + idsw) / static_cast<double>(gt_total);
}

/// Mean IoU over matched pairs. The default similarity convention reads
/// higher as better; the distance convention reports 1 - IoU instead.
inline double motp(const std::vector<FrameMatch>& matches, bool distance_convention = false) {
    double sum = 0.0;
    long n = 0;
    for (const auto& fm : matches)
        for (const auto& p : fm.pairs) {
            sum += p.iou;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("motp: no matches");
    const double similarity = sum / static_cast<double>(n);
    return distance_convention ? 1.0 - similarity : similarity;
}

/// Identity scores under the globally optimal id correspondence, with
/// per-frame co-location at IoU >= 0.5.
inline std::tuple<double, double, double> idf1(const TrajectorySet& gt,
                                               const TrajectorySet& pred) {
    if (gt.empty()) throw std::invalid_argument("idf1: empty ground truth");
    std::map<int, int> gt_ids, pred_ids;  // id -> dense index
    for (const auto& [f, v] : gt.frames)
        for (const auto& [id, b] : v) gt_ids.emplace(id, 0);
    for (const auto& [f, v] : pred.frames)
        for (const auto& [id, b] : v) pred_ids.emplace(id, 0);
    int gi = 0, pi = 0;
    for (auto& [id, idx] : gt_ids) idx = gi++;
    for (auto& [id, idx] : pred_ids) idx = pi++;

    CostMatrix overlap(gi, std::max(pi, 1));
    for (int f : detail::all_frames(gt, pred)) {
        for (const auto& [g, gb] : detail::boxes_at(gt, f))
            for (const auto& [p, pb] : detail::boxes_at(pred, f))
                if (iou(gb, pb) >= 0.5) overlap.at(gt_ids[g], pred_ids[p]) += 1.0;
    }

    double idtp = 0.0;
    if (pi > 0)
        for (const auto& [a, b] : max_weight_assignment(overlap)) idtp += overlap.at(a, b);

    const double total_gt = static_cast<double>(gt.total_boxes());
    const double total_pred = static_cast<double>(pred.total_boxes());
    const double idp = total_pred > 0 ? idtp / total_pred : 0.0;
    const double idr = total_gt > 0 ? idtp / total_gt : 0.0;
    const double f1 = (idp + idr) > 0 ? 2.0 * idp * idr / (idp + idr) : 0.0;
    return {f1, idp, idr};
}

namespace detail {

struct HotaAlpha {
    double hota = 0.0, deta = 0.0, assa = 0.0;
};

inline HotaAlpha hota_at(const TrajectorySet& gt, const TrajectorySet& pred, double alpha) {
    long tp = 0, fn = 0, fp = 0;
    std::map<std::pair<int, int>, long> pair_count;
    std::map<int, long> gt_boxes, pred_boxes;
    for (const auto& [f, v] : gt.frames)
        for (const auto& [id, b] : v) ++gt_boxes[id];
    for (const auto& [f, v] : pred.frames)
        for (const auto& [id, b] : v) ++pred_boxes[id];

    std::vector<std::pair<int, int>> tps;
    for (int f : all_frames(gt, pred)) {
        const FrameMatch fm = match_one_frame(f, boxes_at(gt, f), boxes_at(pred, f), alpha, nullptr);
        for (const auto& p : fm.pairs) {
            ++pair_count[{p.gt_id, p.pred_id}];
            tps.emplace_back(p.gt_id, p.pred_id);
        }
        tp += static_cast<long>(fm.pairs.size());
        fn += fm.unmatched_gt;
        fp += fm.unmatched_pred;
    }

    HotaAlpha out;
    const double denom = static_cast<double>(tp + fn + fp);
    if (denom <= 0.0) return out;
    out.deta = static_cast<double>(tp) / denom;
    if (tp > 0) {
        double acc = 0.0;
        for (const auto& [g, p] : tps) {
            const double tpa = static_cast<double>(pair_count[{g, p}]);
            const double fna = static_cast<double>(gt_boxes[g]) - tpa;
            const double fpa = static_cast<double>(pred_boxes[p]) - tpa;
            acc += tpa / (tpa + fna + fpa);
        }
        out.assa = acc / static_cast<double>(tp);
    }
    out.hota = std::sqrt(out.deta * out.assa);
    return out;
}

}  // namespace detail

inline const std::vector<double>& hota_alphas() {
    static const std::vector<double> alphas = [] {
        std::vector<double> a;
        for (int i = 1; i <= 19; ++i) a.push_back(0.05 * i);
        return a;
    }();
    return alphas;
}

/// Detection/association decomposition averaged over the 19 localization
/// thresholds 0.05..0.95.
inline std::tuple<double, double, double> hota(const TrajectorySet& gt,
                                               const TrajectorySet& pred) {
    if (gt.empty()) throw std::invalid_argument("hota: empty ground truth");
    double h = 0.0, d = 0.0, a = 0.0;
    for (double alpha : hota_alphas()) {
        const auto r = detail::hota_at(gt, pred, alpha);
        h += r.hota;
        d += r.deta;
        a += r.assa;
    }
    const double n = static_cast<double>(hota_alphas().size());
    return {h / n, d / n, a / n};
}

struct MetricsReport {
    long idsw = 0;
    double idf1 = 0.0, idp = 0.0, idr = 0.0;
    double mota = 0.0;
    double motp = 0.0;
    double hota = 0.0, deta = 0.0, assa = 0.0;
    long fp = 0, fn = 0, tp = 0;
};

inline MetricsReport evaluate(const TrajectorySet& gt, const TrajectorySet& pred) {
    if (gt.empty()) throw std::invalid_argument("evaluate: empty ground truth");
    MetricsReport r;
    const auto matches = match_frames(gt, pred, 0.5);
    for (const auto& fm : matches) {
        r.tp += static_cast<long>(fm.pairs.size());
        r.fn += fm.unmatched_gt;
        r.fp += fm.unmatched_pred;
    }
    r.idsw = idsw_count(matches);
    r.mota = mota(r.fp, r.fn, r.idsw, gt.total_boxes());
    r.motp = r.tp > 0 ? motp(matches) : 0.0;
    std::tie(r.idf1, r.idp, r.idr) = idf1(gt, pred);
    std::tie(r.hota, r.deta, r.assa) = hota(gt, pred);
    return r;
}

}  // namespace jptrack::metrics
