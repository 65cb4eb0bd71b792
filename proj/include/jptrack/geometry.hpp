#pragma once

#include <algorithm>
#include <cmath>

namespace jptrack {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

/// Axis-aligned pixel box, stored as top-left corner plus extent.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }
};

inline bool is_valid(const BoundingBox& b) {
    return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
           std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

inline Vec2 center(const BoundingBox& b) { return {b.x + b.w / 2.0, b.y + b.h / 2.0}; }

inline BoundingBox box_from_center(Vec2 c, double w, double h) {
    return {c.x - w / 2.0, c.y - h / 2.0, w, h};
}

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    return ix * iy;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    if (a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h) return 1.0;
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    return std::min(1.0, inter / (a.area() + b.area() - inter));
}

enum class DetectionSource { Global, Local };

/// One detector output box. Local detections carry the id of the ROI they
/// were found in and ROI-relative coordinates until mapped back.
struct Detection {
    int frame = 0;
    BoundingBox box;
    double confidence = 0.0;
    DetectionSource source = DetectionSource::Global;
    int roi_id = -1;
};

}  // namespace jptrack
