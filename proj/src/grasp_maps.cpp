#include "grasptk/grasp_maps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grasptk/errors.hpp"

namespace grasptk {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_half_pi(double theta) {
  double t = std::fmod(theta + kPi / 2.0, kPi);
  if (t < 0) t += kPi;
  return t - kPi / 2.0;
}

std::array<std::array<double, 2>, 4> GraspRect::corners() const {
  const double c = std::cos(theta), s = std::sin(theta);
  const double hw = w / 2.0, hh = h / 2.0;
  // Local frame: u along the closing axis, v perpendicular.
  const std::array<std::array<double, 2>, 4> local = {{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  std::array<std::array<double, 2>, 4> out;
  for (size_t i = 0; i < 4; ++i) {
    out[i] = {x + c * local[i][0] - s * local[i][1], y + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

void GraspMaps::validate(double max_width) const {
  const size_t n = static_cast<size_t>(height) * width_px;
  if (quality.size() != n || angle.size() != n || width.size() != n)
    throw ShapeError("grasp map grids do not share dimensions");
  for (size_t i = 0; i < n; ++i) {
    if (!(quality[i] >= 0.0 && quality[i] <= 1.0))
      throw ShapeError("quality value out of [0,1]: " + std::to_string(quality[i]));
    if (!(angle[i] >= -kPi / 2 - 1e-12 && angle[i] <= kPi / 2 + 1e-12))
      throw ShapeError("angle value out of [-pi/2, pi/2]: " + std::to_string(angle[i]));
    if (!(width[i] >= 0.0 && width[i] <= max_width))
      throw ShapeError("width value out of range: " + std::to_string(width[i]));
  }
}

GraspMaps rasterize_grasp_maps(const std::vector<GraspRect>& rects, uint32_t height,
                               uint32_t width, const RasterConfig& cfg) {
  if (height == 0 || width == 0) throw InvalidArgumentError("raster grid must be non-empty");
  GraspMaps maps(height, width);
  for (const auto& r : rects) {
    if (!(r.w > 0.0) || !(r.h > 0.0))
      throw InvalidArgumentError("rect with non-positive extent");

    // Reject rects whose full footprint misses the grid.
    auto cs = r.corners();
    double minx = cs[0][0], maxx = cs[0][0], miny = cs[0][1], maxy = cs[0][1];
    for (const auto& p : cs) {
      minx = std::min(minx, p[0]);
      maxx = std::max(maxx, p[0]);
      miny = std::min(miny, p[1]);
      maxy = std::max(maxy, p[1]);
    }
    if (maxx < 0.0 || maxy < 0.0 || minx > width - 1.0 || miny > height - 1.0)
      throw OutOfBoundsError("grasp rect lies fully outside the grid");

    const double c = std::cos(r.theta), s = std::sin(r.theta);
    const double ru = r.w / 6.0;  // half-extent of the central third, closing axis
    const double rv = r.h / 2.0;
    // Scan only the bounding box of the central-third region.
    const double reach = std::hypot(ru, rv);
    const long r0 = std::max<long>(0, static_cast<long>(std::floor(r.y - reach)));
    const long r1 = std::min<long>(height - 1, static_cast<long>(std::ceil(r.y + reach)));
    const long c0 = std::max<long>(0, static_cast<long>(std::floor(r.x - reach)));
    const long c1 = std::min<long>(width - 1, static_cast<long>(std::ceil(r.x + reach)));
    for (long row = r0; row <= r1; ++row) {
      for (long col = c0; col <= c1; ++col) {
        const double dx = col - r.x, dy = row - r.y;
        const double u = dx * c + dy * s;
        const double v = -dx * s + dy * c;
        if (std::abs(u) > ru || std::abs(v) > rv) continue;
        const double t = std::max(std::abs(u) / ru, std::abs(v) / rv);
        maps.q(row, col) = 1.0 - (1.0 - cfg.edge_quality) * t;
        maps.a(row, col) = wrap_half_pi(r.theta);
        maps.w(row, col) = std::min(r.w, cfg.max_width);
      }
    }
  }
  return maps;
}

namespace {

GraspRect rect_at(const GraspMaps& maps, uint32_t row, uint32_t col, const DecodeConfig& cfg) {
  GraspRect r;
  r.x = col;
  r.y = row;
  r.w = maps.w(row, col);
  r.theta = maps.a(row, col);
  r.h = r.w * cfg.rect_height_ratio;
  r.score = maps.q(row, col);
  return r;
}

}  // namespace

GraspRect decode_top1(const GraspMaps& maps, const DecodeConfig& cfg) {
  if (maps.size() == 0) throw InvalidArgumentError("empty grasp maps");
  size_t best = 0;
  double best_q = -1.0;
  for (size_t i = 0; i < maps.size(); ++i) {
    if (maps.quality[i] > best_q) {
      best_q = maps.quality[i];
      best = i;
    }
  }
  if (best_q <= 0.0) throw NoGraspError("all-zero quality map");
  return rect_at(maps, static_cast<uint32_t>(best / maps.width_px),
                 static_cast<uint32_t>(best % maps.width_px), cfg);
}

std::vector<GraspRect> decode_topk(const GraspMaps& maps, size_t k, uint32_t nms_radius,
                                   const DecodeConfig& cfg) {
  if (k < 1) throw InvalidArgumentError("k must be >= 1");
  std::vector<double> q = maps.quality;
  std::vector<GraspRect> out;
  while (out.size() < k) {
    size_t best = 0;
    double best_q = -1.0;
    for (size_t i = 0; i < q.size(); ++i) {
      if (q[i] > best_q) {
        best_q = q[i];
        best = i;
      }
    }
    if (best_q <= 0.0) break;  // map exhausted
    const uint32_t row = static_cast<uint32_t>(best / maps.width_px);
    const uint32_t col = static_cast<uint32_t>(best % maps.width_px);
    out.push_back(rect_at(maps, row, col, cfg));
    const long r0 = std::max<long>(0, static_cast<long>(row) - nms_radius);
    const long r1 = std::min<long>(maps.height - 1, static_cast<long>(row) + nms_radius);
    const long c0 = std::max<long>(0, static_cast<long>(col) - nms_radius);
    const long c1 = std::min<long>(maps.width_px - 1, static_cast<long>(col) + nms_radius);
    for (long rr = r0; rr <= r1; ++rr)
      for (long cc = c0; cc <= c1; ++cc) q[rr * maps.width_px + cc] = 0.0;
  }
  return out;
}

std::pair<double, double> angle_to_channels(double theta) {
  if (!std::isfinite(theta)) throw InvalidArgumentError("non-finite angle");
  return {std::sin(2.0 * theta), std::cos(2.0 * theta)};
}

double angle_from_channels(double s, double c) {
  if (s == 0.0 && c == 0.0) throw DegenerateAngleError("zero-magnitude angle channels");
  return wrap_half_pi(0.5 * std::atan2(s, c));
}

}  // namespace grasptk
