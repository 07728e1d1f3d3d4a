#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace grasptk {

// Planar grasp rectangle. (x, y) is the center in pixels (x = column,
// y = row), w the gripper opening along the closing axis, theta the closing
// axis angle in [-pi/2, pi/2), h the jaw footprint extent perpendicular to
// the closing axis.
struct GraspRect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double theta = 0.0;
  double h = 0.0;
  double score = 0.0;

  // Uniform rescale about the origin, e.g. map-resolution <-> image pixels.
  GraspRect scaled(double s, double offset = 0.0) const {
    return {x * s + offset, y * s + offset, w * s, theta, h * s, score};
  }

  // Corner positions in order, counter-clockwise for positive theta.
  std::array<std::array<double, 2>, 4> corners() const;
};

// Wraps an angle into [-pi/2, pi/2).
double wrap_half_pi(double theta);

// Dense grasp maps over an Hp x Wp grid: per-pixel grasp quality in [0,1],
// closing-axis angle in [-pi/2, pi/2], and gripper opening in pixels.
struct GraspMaps {
  uint32_t height = 0;
  uint32_t width_px = 0;
  std::vector<double> quality;  // row-major Hp x Wp
  std::vector<double> angle;
  std::vector<double> width;

  GraspMaps() = default;
  GraspMaps(uint32_t h, uint32_t w)
      : height(h), width_px(w),
        quality(static_cast<size_t>(h) * w, 0.0),
        angle(static_cast<size_t>(h) * w, 0.0),
        width(static_cast<size_t>(h) * w, 0.0) {}

  size_t size() const { return quality.size(); }
  size_t idx(uint32_t row, uint32_t col) const { return static_cast<size_t>(row) * width_px + col; }

  double& q(uint32_t row, uint32_t col) { return quality[idx(row, col)]; }
  double& a(uint32_t row, uint32_t col) { return angle[idx(row, col)]; }
  double& w(uint32_t row, uint32_t col) { return width[idx(row, col)]; }
  double q(uint32_t row, uint32_t col) const { return quality[idx(row, col)]; }
  double a(uint32_t row, uint32_t col) const { return angle[idx(row, col)]; }
  double w(uint32_t row, uint32_t col) const { return width[idx(row, col)]; }

  // Throws if any value is outside its documented range.
  void validate(double max_width) const;
};

}  // namespace grasptk
