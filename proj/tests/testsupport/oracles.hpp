#pragma once

// Brute-force reference implementations used as independent oracles. These
// deliberately avoid the library's code paths wherever a result is checked
// against them.

#include <algorithm>
#include <cmath>
#include <vector>

#include "grasptk/grasp_types.hpp"
#include "grasptk/rng.hpp"

namespace oracles {

using grasptk::GraspRect;

// Point-in-convex-polygon via cross products, walking the rect corners.
inline bool point_in_rect_poly(double px, double py, const GraspRect& r) {
  const auto cs = r.corners();
  double first_sign = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = cs[i];
    const auto& b = cs[(i + 1) % 4];
    const double cross = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
    if (std::abs(cross) < 1e-12) continue;
    if (first_sign == 0.0)
      first_sign = cross;
    else if (cross * first_sign < 0)
      return false;
  }
  return true;
}

// Central third of a rect along its closing axis, as its own polygon.
inline GraspRect central_third(const GraspRect& r) {
  GraspRect c = r;
  c.w = r.w / 3.0;
  return c;
}

// Monte-Carlo IoU estimate over the joint bounding box.
inline double mc_rect_iou(const GraspRect& a, const GraspRect& b, size_t samples,
                          uint64_t seed) {
  double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
  for (const auto& r : {a, b})
    for (const auto& p : r.corners()) {
      minx = std::min(minx, p[0]);
      maxx = std::max(maxx, p[0]);
      miny = std::min(miny, p[1]);
      maxy = std::max(maxy, p[1]);
    }
  grasptk::Rng rng(seed, {0x6D63696Full});
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < samples; ++i) {
    const double x = rng.uniform(minx, maxx);
    const double y = rng.uniform(miny, maxy);
    const bool ia = point_in_rect_poly(x, y, a);
    const bool ib = point_in_rect_poly(x, y, b);
    inter += (ia && ib) ? 1 : 0;
    uni += (ia || ib) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Axis-aligned IoU closed form (valid for theta == 0 rects).
inline double axis_aligned_iou(const GraspRect& a, const GraspRect& b) {
  const double ax0 = a.x - a.w / 2, ax1 = a.x + a.w / 2;
  const double ay0 = a.y - a.h / 2, ay1 = a.y + a.h / 2;
  const double bx0 = b.x - b.w / 2, bx1 = b.x + b.w / 2;
  const double by0 = b.y - b.h / 2, by1 = b.y + b.h / 2;
  const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = ix * iy;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

inline double brute_angle_diff_deg(double a, double b) {
  double best = 1e300;
  for (int k = -1; k <= 1; ++k) best = std::min(best, std::abs(a - b + k * M_PI));
  return best * 180.0 / M_PI;
}

}  // namespace oracles
