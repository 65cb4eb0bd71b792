#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "jptrack/geometry.hpp"

namespace jptrack {

/// Constant-velocity filter state over [cx, cy, w, h] plus per-frame rates.
struct MotionState {
    Eigen::Matrix<double, 8, 1> mean = Eigen::Matrix<double, 8, 1>::Zero();
    Eigen::Matrix<double, 8, 8> cov = Eigen::Matrix<double, 8, 8>::Identity();
};

namespace kf {

// Noise scales relative to box height, after the usual tracking-by-detection
// convention of size-proportional uncertainty.
inline constexpr double kStdWeightPos = 1.0 / 20.0;
inline constexpr double kStdWeightVel = 1.0 / 160.0;

inline double noise_height(const Eigen::Matrix<double, 8, 1>& mean) {
    return std::max(1.0, mean(3));
}

}  // namespace kf

inline MotionState kf_init(const BoundingBox& box) {
    MotionState s;
    const Vec2 c = center(box);
    s.mean << c.x, c.y, box.w, box.h, 0.0, 0.0, 0.0, 0.0;
    const double h = std::max(1.0, box.h);
    Eigen::Matrix<double, 8, 1> std;
    std << 2 * kf::kStdWeightPos * h, 2 * kf::kStdWeightPos * h, 2 * kf::kStdWeightPos * h,
        2 * kf::kStdWeightPos * h, 10 * kf::kStdWeightVel * h, 10 * kf::kStdWeightVel * h,
        10 * kf::kStdWeightVel * h, 10 * kf::kStdWeightVel * h;
    s.cov = std.array().square().matrix().asDiagonal();
    return s;
}

inline MotionState kf_init(const Detection& d) { return kf_init(d.box); }

inline MotionState kf_predict(const MotionState& s) {
    Eigen::Matrix<double, 8, 8> F = Eigen::Matrix<double, 8, 8>::Identity();
    for (int i = 0; i < 4; ++i) F(i, i + 4) = 1.0;

    const double h = kf::noise_height(s.mean);
    Eigen::Matrix<double, 8, 1> std;
    std << kf::kStdWeightPos * h, kf::kStdWeightPos * h, kf::kStdWeightPos * h,
        kf::kStdWeightPos * h, kf::kStdWeightVel * h, kf::kStdWeightVel * h,
        kf::kStdWeightVel * h, kf::kStdWeightVel * h;
    const Eigen::Matrix<double, 8, 8> Q = std.array().square().matrix().asDiagonal();

    MotionState out;
    out.mean = F * s.mean;
    out.cov = F * s.cov * F.transpose() + Q;
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

inline MotionState kf_update(const MotionState& s, const BoundingBox& z) {
    if (!is_valid(z)) throw std::invalid_argument("kf_update: non-finite or degenerate measurement");

    Eigen::Matrix<double, 4, 8> H = Eigen::Matrix<double, 4, 8>::Zero();
    for (int i = 0; i < 4; ++i) H(i, i) = 1.0;

    const Vec2 c = center(z);
    Eigen::Matrix<double, 4, 1> meas;
    meas << c.x, c.y, z.w, z.h;

    const double h = kf::noise_height(s.mean);
    Eigen::Matrix<double, 4, 1> std;
    std << kf::kStdWeightPos * h, kf::kStdWeightPos * h, kf::kStdWeightPos * h,
        kf::kStdWeightPos * h;
    const Eigen::Matrix<double, 4, 4> R = std.array().square().matrix().asDiagonal();

    const Eigen::Matrix<double, 4, 4> S = H * s.cov * H.transpose() + R;
    const Eigen::Matrix<double, 8, 4> K = S.llt().solve(H * s.cov).transpose();

    MotionState out;
    out.mean = s.mean + K * (meas - H * s.mean);
    out.cov = (Eigen::Matrix<double, 8, 8>::Identity() - K * H) * s.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

inline Vec2 state_center(const MotionState& s) { return {s.mean(0), s.mean(1)}; }

inline BoundingBox state_box(const MotionState& s) {
    return box_from_center({s.mean(0), s.mean(1)}, std::max(1e-6, s.mean(2)),
                           std::max(1e-6, s.mean(3)));
}

/// Box the filter expects one frame ahead, without mutating the state.
inline BoundingBox predicted_box(const MotionState& s) { return state_box(kf_predict(s)); }

}  // namespace jptrack
