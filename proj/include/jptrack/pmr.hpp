#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jptrack/assignment.hpp"
#include "jptrack/config.hpp"
#include "jptrack/geometry.hpp"
#include "jptrack/track.hpp"

#include <Eigen/Dense>

namespace jptrack {

inline constexpr int kFeatureDim = 8;
inline constexpr int kFeatureWindow = 10;  // newest history entries used for recovery
inline constexpr double kCovFloor = 1e-3;

/// Per-history-sample descriptor of a trajectory state: global position,
/// window-relative position, velocity, heading and a time-decay weight.
struct TrackFeature {
    double x_abs = 0.0;
    double y_abs = 0.0;
    double x_rel = 0.0;
    double y_rel = 0.0;
    double v_x = 0.0;
    double v_y = 0.0;
    double theta = 0.0;
    double w = 1.0;

    std::array<double, kFeatureDim> as_array() const {
        return {x_abs, y_abs, x_rel, y_rel, v_x, v_y, theta, w};
    }
};

inline double decay_weight(int t_current, int t_i, double gamma) {
    if (t_current < t_i) throw std::invalid_argument("decay_weight: negative time gap");
    return std::exp(-gamma * static_cast<double>(t_current - t_i));
}

/// One feature per history entry (newest kFeatureWindow), positions
/// normalized against `roi` when given, against the frame otherwise.
inline std::vector<TrackFeature> extract_features(const Track& t,
                                                  const std::optional<BoundingBox>& roi,
                                                  double frame_w, double frame_h, int t_current,
                                                  double gamma) {
    if (t.history.empty()) throw std::invalid_argument("extract_features: empty history");
    const BoundingBox ref = roi.value_or(BoundingBox{0.0, 0.0, frame_w, frame_h});

    const int n = static_cast<int>(t.history.size());
    const int first = std::max(0, n - kFeatureWindow);
    std::vector<TrackFeature> out;
    out.reserve(n - first);
    for (int i = first; i < n; ++i) {
        const HistoryEntry& e = t.history[static_cast<std::size_t>(i)];
        TrackFeature f;
        f.x_abs = e.center.x;
        f.y_abs = e.center.y;
        f.x_rel = std::clamp((e.center.x - ref.x) / ref.w, 0.0, 1.0);
        f.y_rel = std::clamp((e.center.y - ref.y) / ref.h, 0.0, 1.0);
        f.v_x = e.velocity.x;
        f.v_y = e.velocity.y;
        f.theta = std::atan2(e.velocity.y, e.velocity.x);
        f.w = decay_weight(t_current, e.frame, gamma);
        out.push_back(f);
    }
    return out;
}

inline int adaptive_k(int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("adaptive_k: need at least one sample");
    return std::min(2, std::max(1, n_samples / 3));
}

struct GaussianMixture {
    int k = 0;
    std::array<double, 2> weight{};
    std::array<std::array<double, kFeatureDim>, 2> mean{};
    std::array<std::array<double, kFeatureDim>, 2> var{};  // diagonal covariances
    std::vector<double> loglik_trace;                      // log-likelihood after each EM pass
    int iterations = 0;
};

namespace detail {

inline double diag_log_density(const std::array<double, kFeatureDim>& x,
                               const std::array<double, kFeatureDim>& mu,
                               const std::array<double, kFeatureDim>& var) {
    double lp = 0.0;
    for (int d = 0; d < kFeatureDim; ++d) {
        const double diff = x[d] - mu[d];
        lp += -0.5 * (std::log(2.0 * std::numbers::pi * var[d]) + diff * diff / var[d]);
    }
    return lp;
}

inline void moments(const std::vector<std::array<double, kFeatureDim>>& xs,
                    const std::vector<double>& resp, double total,
                    std::array<double, kFeatureDim>& mu, std::array<double, kFeatureDim>& var) {
    mu.fill(0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (int d = 0; d < kFeatureDim; ++d) mu[d] += resp[i] * xs[i][d];
    for (int d = 0; d < kFeatureDim; ++d) mu[d] /= total;
    var.fill(0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (int d = 0; d < kFeatureDim; ++d) {
            const double diff = xs[i][d] - mu[d];
            var[d] += resp[i] * diff * diff;
        }
    for (int d = 0; d < kFeatureDim; ++d) var[d] = std::max(kCovFloor, var[d] / total);
}

/// Dominant eigenvector of the sample covariance by power iteration.
inline Eigen::VectorXd principal_axis(const std::vector<std::array<double, kFeatureDim>>& xs) {
    const int n = static_cast<int>(xs.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kFeatureDim);
    for (const auto& x : xs)
        for (int d = 0; d < kFeatureDim; ++d) mean(d) += x[d];
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(kFeatureDim, kFeatureDim);
    for (const auto& x : xs) {
        Eigen::VectorXd c(kFeatureDim);
        for (int d = 0; d < kFeatureDim; ++d) c(d) = x[d] - mean(d);
        cov += c * c.transpose();
    }
    cov /= n;

    Eigen::Index max_d;
    cov.diagonal().maxCoeff(&max_d);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kFeatureDim);
    v(max_d) = 1.0;
    for (int it = 0; it < 64; ++it) {
        Eigen::VectorXd next = cov * v;
        const double norm = next.norm();
        if (norm < 1e-15) break;
        v = next / norm;
    }
    return v;
}

}  // namespace detail

/// Diagonal-covariance EM fit. Initialization is deterministic (mean/variance
/// for one component, a median split on the first principal axis for two), so
/// the seed does not alter the result.
inline GaussianMixture fit_gmm(const std::vector<TrackFeature>& samples, int k,
                               std::uint64_t /*seed*/) {
    const int n = static_cast<int>(samples.size());
    if (k < 1 || k > 2) throw std::invalid_argument("fit_gmm: k must be 1 or 2");
    if (n < k) throw std::invalid_argument("fit_gmm: fewer samples than components");

    std::vector<std::array<double, kFeatureDim>> xs;
    xs.reserve(samples.size());
    for (const auto& s : samples) xs.push_back(s.as_array());

    GaussianMixture g;
    g.k = k;
    if (k == 1) {
        std::vector<double> ones(n, 1.0);
        detail::moments(xs, ones, n, g.mean[0], g.var[0]);
        g.weight[0] = 1.0;
    } else {
        const Eigen::VectorXd axis = detail::principal_axis(xs);
        std::vector<double> proj(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < kFeatureDim; ++d) proj[i] += xs[i][d] * axis(d);
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return proj[a] < proj[b]; });
        // Split where the projections jump the most; a plain median split
        // puts a cluster member on the wrong side whenever the clusters are
        // uneven, and EM cannot climb out of that. Degenerate data falls
        // back to the median.
        int split = n / 2;
        double best_gap = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            const double gap = proj[order[i + 1]] - proj[order[i]];
            if (gap > best_gap) {
                best_gap = gap;
                split = i + 1;
            }
        }
        for (int c = 0; c < 2; ++c) {
            std::vector<double> resp(n, 0.0);
            int cnt = 0;
            for (int r = (c == 0 ? 0 : split); r < (c == 0 ? split : n); ++r) {
                resp[order[r]] = 1.0;
                ++cnt;
            }
            detail::moments(xs, resp, cnt, g.mean[c], g.var[c]);
            g.weight[c] = static_cast<double>(cnt) / n;
        }
    }

    constexpr int kMaxIters = 50;
    constexpr double kTol = 1e-4;
    std::vector<double> resp(static_cast<std::size_t>(n) * k);
    for (int iter = 0; iter < kMaxIters; ++iter) {
        // E step
        double loglik = 0.0;
        for (int i = 0; i < n; ++i) {
            std::array<double, 2> lw{};
            double lmax = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                lw[c] = std::log(g.weight[c]) + detail::diag_log_density(xs[i], g.mean[c], g.var[c]);
                lmax = std::max(lmax, lw[c]);
            }
            double sum = 0.0;
            for (int c = 0; c < k; ++c) sum += std::exp(lw[c] - lmax);
            const double ll = lmax + std::log(sum);
            loglik += ll;
            for (int c = 0; c < k; ++c) resp[static_cast<std::size_t>(i) * k + c] = std::exp(lw[c] - ll);
        }
        g.loglik_trace.push_back(loglik);
        g.iterations = iter + 1;
        if (iter > 0 && std::abs(loglik - g.loglik_trace[iter - 1]) < kTol) break;

        // M step
        for (int c = 0; c < k; ++c) {
            std::vector<double> rc(n);
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                rc[i] = resp[static_cast<std::size_t>(i) * k + c];
                total += rc[i];
            }
            total = std::max(total, 1e-9);
            detail::moments(xs, rc, total, g.mean[c], g.var[c]);
            g.weight[c] = total / n;
        }
        double wsum = 0.0;
        for (int c = 0; c < k; ++c) wsum += g.weight[c];
        for (int c = 0; c < k; ++c) g.weight[c] /= wsum;
    }
    return g;
}

/// Peak-normalized kernel score in [0,1]. The Mahalanobis distance runs over
/// the state dimensions only; the decay slot is the time constraint's job and
/// would otherwise mark every current-frame candidate as an outlier.
inline double match_probability(const GaussianMixture& g, const TrackFeature& z) {
    const auto x = z.as_array();
    double p = 0.0;
    for (int c = 0; c < g.k; ++c) {
        double d2 = 0.0;
        for (int d = 0; d < kFeatureDim - 1; ++d) {
            double diff = x[d] - g.mean[c][d];
            if (d == 6) {  // heading is circular
                while (diff > std::numbers::pi) diff -= 2.0 * std::numbers::pi;
                while (diff < -std::numbers::pi) diff += 2.0 * std::numbers::pi;
            }
            d2 += diff * diff / g.var[c][d];
        }
        p += g.weight[c] * std::exp(-0.5 * d2);
    }
    return std::clamp(p, 0.0, 1.0);
}

inline double time_constraint(const std::vector<TrackFeature>& samples) {
    if (samples.empty()) throw std::invalid_argument("time_constraint: no samples");
    double sum = 0.0;
    for (const auto& s : samples) sum += s.w;
    return sum / samples.size();
}

inline double recovery_score(const GaussianMixture& g, const std::vector<TrackFeature>& samples,
                             const TrackFeature& z) {
    return match_probability(g, z) * time_constraint(samples);
}

namespace detail {

/// Recovery model of one lost track: mixture over history states with
/// positions rolled forward to the query frame by each sample's own
/// velocity, plus the decay profile the history had when the track was
/// last seen.
struct RecoveryModel {
    GaussianMixture mixture;
    std::vector<TrackFeature> samples_at_loss;
    bool valid = false;
};

inline RecoveryModel build_recovery_model(const Track& t, const TrackerConfig& cfg,
                                          int t_current) {
    RecoveryModel m;
    if (!t.has_history()) return m;
    // Weights are referenced to the last observed frame: the gap itself is
    // bounded by max_lost_age, and a gap-referenced decay would push every
    // score under tau_t after a frame or two of loss.
    m.samples_at_loss =
        extract_features(t, std::nullopt, cfg.frame_w, cfg.frame_h, t.last_update_frame, cfg.gamma);

    const int n = static_cast<int>(t.history.size());
    int first = std::max(0, n - kFeatureWindow);
    // The birth entry has no observed velocity; once real velocity samples
    // exist it would propagate to a spurious mode, so it is dropped here.
    if (n >= 2 && first == 0) {
        m.samples_at_loss.erase(m.samples_at_loss.begin());
        first = 1;
    }

    std::vector<TrackFeature> propagated = m.samples_at_loss;
    for (std::size_t i = 0; i < propagated.size(); ++i) {
        const HistoryEntry& e = t.history[static_cast<std::size_t>(first) + i];
        const double dt = static_cast<double>(t_current - e.frame);
        TrackFeature& f = propagated[i];
        f.x_abs += f.v_x * dt;
        f.y_abs += f.v_y * dt;
        f.x_rel = std::clamp(f.x_abs / cfg.frame_w, 0.0, 1.0);
        f.y_rel = std::clamp(f.y_abs / cfg.frame_h, 0.0, 1.0);
    }
    m.mixture = fit_gmm(propagated, adaptive_k(static_cast<int>(propagated.size())),
                        static_cast<std::uint64_t>(t.id));
    m.valid = true;
    return m;
}

inline TrackFeature candidate_feature(const Detection& d, const Track& t,
                                      const TrackerConfig& cfg, int t_current) {
    TrackFeature z;
    const Vec2 c = center(d.box);
    z.x_abs = c.x;
    z.y_abs = c.y;
    z.x_rel = std::clamp(c.x / cfg.frame_w, 0.0, 1.0);
    z.y_rel = std::clamp(c.y / cfg.frame_h, 0.0, 1.0);
    const double gap = std::max(1, t_current - t.last_update_frame);
    const Vec2 v = (c - t.last_center()) / gap;
    z.v_x = v.x;
    z.v_y = v.y;
    z.theta = std::atan2(v.y, v.x);
    z.w = 1.0;
    return z;
}

}  // namespace detail

/// Stage-3 recovery: scores every (lost track, candidate) pair and pairs
/// them greedily by descending score above tau_t, lower track id first on
/// ties.
inline Assignment recover(const std::vector<const Track*>& lost,
                          const std::vector<Detection>& candidates, const TrackerConfig& cfg,
                          int t_current) {
    Assignment out;
    struct Scored {
        double score;
        int track_idx;
        int cand_idx;
    };
    std::vector<Scored> scored;

    for (std::size_t li = 0; li < lost.size(); ++li) {
        const Track& t = *lost[li];
        if (!t.has_history()) continue;
        if (t_current - t.last_update_frame > cfg.max_lost_age) continue;
        const auto model = detail::build_recovery_model(t, cfg, t_current);
        if (!model.valid) continue;
        for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
            const TrackFeature z = detail::candidate_feature(candidates[ci], t, cfg, t_current);
            const double s = recovery_score(model.mixture, model.samples_at_loss, z);
            if (s > cfg.tau_t)
                scored.push_back({s, static_cast<int>(li), static_cast<int>(ci)});
        }
    }

    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        if (lost[a.track_idx]->id != lost[b.track_idx]->id)
            return lost[a.track_idx]->id < lost[b.track_idx]->id;
        return a.cand_idx < b.cand_idx;
    });

    std::vector<char> track_used(lost.size(), 0), cand_used(candidates.size(), 0);
    for (const auto& s : scored) {
        if (track_used[s.track_idx] || cand_used[s.cand_idx]) continue;
        track_used[s.track_idx] = 1;
        cand_used[s.cand_idx] = 1;
        out.pairs.emplace_back(s.track_idx, s.cand_idx);
    }
    for (std::size_t i = 0; i < lost.size(); ++i)
        if (!track_used[i]) out.unmatched_rows.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < candidates.size(); ++j)
        if (!cand_used[j]) out.unmatched_cols.push_back(static_cast<int>(j));
    return out;
}

}  // namespace jptrack
