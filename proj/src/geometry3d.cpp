#include "grasptk/geometry3d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "grasptk/errors.hpp"

namespace grasptk {

namespace {
constexpr double kPi = std::numbers::pi;
}

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}
Vec3 mat_col(const Mat3& m, int c) { return {m[c], m[3 + c], m[6 + c]}; }
Vec3 mat_mul_vec(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}
Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      out[i * 3 + j] = s;
    }
  return out;
}
Mat3 mat_transpose(const Mat3& m) {
  return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
}
Mat3 mat_from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
  return {c0[0], c1[0], c2[0], c0[1], c1[1], c2[1], c0[2], c1[2], c2[2]};
}
double mat_det(const Mat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void Grasp6DoF::validate(double tol) const {
  const Mat3 rtr = mat_mul(mat_transpose(rotation), rotation);
  const Mat3 eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  for (int i = 0; i < 9; ++i)
    if (std::abs(rtr[i] - eye[i]) > tol)
      throw InvalidArgumentError("rotation is not orthonormal");
  if (std::abs(mat_det(rotation) - 1.0) > tol)
    throw InvalidArgumentError("rotation determinant is not +1");
}

PointCloud deproject(const std::vector<double>& depth, uint32_t height, uint32_t width,
                     const CameraIntrinsics& intr, uint32_t stride) {
  if (stride < 1) throw InvalidArgumentError("stride must be >= 1");
  if (!(intr.fx > 0) || !(intr.fy > 0)) throw InvalidArgumentError("focal lengths must be positive");
  if (depth.size() != static_cast<size_t>(height) * width)
    throw ShapeError("depth buffer does not match image dims");
  PointCloud out;
  for (uint32_t v = 0; v < height; v += stride) {
    for (uint32_t u = 0; u < width; u += stride) {
      const double z = depth[static_cast<size_t>(v) * width + u];
      if (!(z > 0.0)) continue;
      out.points.push_back({(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z});
      out.pixels.push_back({static_cast<double>(v), static_cast<double>(u)});
    }
  }
  return out;
}

std::array<double, 2> project_point(const Vec3& p, const CameraIntrinsics& intr) {
  if (!(p[2] > 0.0)) throw BehindCameraError("point has non-positive depth");
  return {p[1] / p[2] * intr.fy + intr.cy, p[0] / p[2] * intr.fx + intr.cx};  // (row, col)
}

namespace {

bool pixel_in_rect(double row, double col, const GraspRect& r) {
  const double c = std::cos(r.theta), s = std::sin(r.theta);
  const double dx = col - r.x, dy = row - r.y;
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return std::abs(u) <= r.w / 2.0 && std::abs(v) <= r.h / 2.0;
}

}  // namespace

PointCloud rect_to_points(const GraspRect& rect, const PointCloud& cloud) {
  if (!cloud.has_pixels())
    throw InvalidArgumentError("cloud has no source pixels");
  PointCloud out;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (pixel_in_rect(cloud.pixels[i][0], cloud.pixels[i][1], rect)) {
      out.points.push_back(cloud.points[i]);
      out.pixels.push_back(cloud.pixels[i]);
    }
  }
  if (out.points.empty()) throw EmptyRegionError("no cloud points under the grasp rect");
  return out;
}

size_t swept_overlap(const Grasp6DoF& pose, const GripperModel& gripper, const PointCloud& pg) {
  const Vec3 cx = pose.closing_axis(), cy = pose.lateral_axis(), cz = pose.approach_axis();
  const double hx = pose.opening / 2.0;
  const double hy = gripper.finger_thickness / 2.0;
  const double hz = gripper.finger_depth / 2.0;
  size_t count = 0;
  for (const auto& p : pg.points) {
    const Vec3 d = sub(p, pose.translation);
    if (std::abs(dot(d, cx)) <= hx && std::abs(dot(d, cy)) <= hy && std::abs(dot(d, cz)) <= hz)
      ++count;
  }
  return count;
}

namespace {

// Normal of the best-fit plane through the k nearest neighbors (smallest
// eigenvector of the scatter matrix, found by a few inverse-power steps).
Vec3 knn_plane_normal(const PointCloud& cloud, const Vec3& query, size_t k) {
  std::vector<std::pair<double, size_t>> d2(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = sub(cloud.points[i], query);
    d2[i] = {dot(d, d), i};
  }
  const size_t kk = std::min(k + 1, cloud.size());  // +1: query itself is in the cloud
  std::partial_sort(d2.begin(), d2.begin() + kk, d2.end());

  Vec3 mean = {0, 0, 0};
  for (size_t j = 0; j < kk; ++j)
    for (int a = 0; a < 3; ++a) mean[a] += cloud.points[d2[j].second][a];
  for (int a = 0; a < 3; ++a) mean[a] /= static_cast<double>(kk);

  Mat3 cov{};
  for (size_t j = 0; j < kk; ++j) {
    const Vec3 d = sub(cloud.points[d2[j].second], mean);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cov[a * 3 + b] += d[a] * d[b];
  }

  // Shift-and-invert via deflation: power-iterate the two dominant
  // eigenvectors, the normal is their cross product.
  auto power_iter = [](const Mat3& m, Vec3 v) {
    for (int it = 0; it < 30; ++it) v = normalized(mat_mul_vec(m, v));
    return v;
  };
  const Vec3 e1 = power_iter(cov, {1.0, 0.3, 0.2});
  // Deflate.
  Mat3 m2 = cov;
  const double l1 = dot(e1, mat_mul_vec(cov, e1));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m2[a * 3 + b] -= l1 * e1[a] * e1[b];
  const Vec3 e2 = power_iter(m2, {0.2, 1.0, 0.4});
  return normalized(cross(e1, e2));
}

}  // namespace

std::vector<Grasp6DoF> sample_candidates(const PointCloud& cloud, size_t n,
                                         const GripperModel& gripper, uint64_t seed,
                                         const SamplerConfig& cfg) {
  if (n < 1) throw InvalidArgumentError("n must be >= 1");
  if (cloud.size() < cfg.knn + 1)
    throw InsufficientGeometryError("cloud has fewer than knn+1 points");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, cloud.size() - 1);
  std::uniform_real_distribution<double> roll_jitter(0.0, kPi);

  std::vector<Grasp6DoF> out;
  out.reserve(n);
  while (out.size() < n) {
    const size_t idx = pick(rng);
    const Vec3 p = cloud.points[idx];
    Vec3 normal = knn_plane_normal(cloud, p, cfg.knn);
    // Orient the normal toward the camera (origin) so approach = -normal
    // pushes into the surface.
    if (dot(normal, p) > 0) normal = {-normal[0], -normal[1], -normal[2]};
    const Vec3 approach = {-normal[0], -normal[1], -normal[2]};

    // In-plane basis.
    Vec3 ref = std::abs(approach[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 b1 = normalized(cross(approach, ref));
    const Vec3 b2 = cross(approach, b1);

    const double base = roll_jitter(rng);
    for (size_t j = 0; j < cfg.rolls_per_point && out.size() < n; ++j) {
      const double a = base + kPi * static_cast<double>(j) / cfg.rolls_per_point;
      const Vec3 closing = {std::cos(a) * b1[0] + std::sin(a) * b2[0],
                            std::cos(a) * b1[1] + std::sin(a) * b2[1],
                            std::cos(a) * b1[2] + std::sin(a) * b2[2]};
      const Vec3 lateral = cross(approach, closing);

      // Opening from the local extent along the closing axis.
      double lo = 0.0, hi = 0.0;
      for (const auto& q : cloud.points) {
        const Vec3 d = sub(q, p);
        if (dot(d, d) > gripper.finger_depth * gripper.finger_depth * 4) continue;
        const double t = dot(d, closing);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
      Grasp6DoF g;
      g.rotation = mat_from_cols(closing, lateral, approach);
      g.translation = p;
      g.opening = std::clamp((hi - lo) * 1.2, gripper.max_opening * 0.25, gripper.max_opening);
      g.score = 0.5;
      out.push_back(g);
    }
  }
  return out;
}

Grasp6DoF select_grasp(const std::vector<Grasp6DoF>& candidates, const PointCloud& pg,
                       const GripperModel& gripper) {
  if (candidates.empty()) throw InvalidArgumentError("no candidates");
  if (pg.points.empty()) throw InvalidArgumentError("empty graspable point set");
  size_t best_idx = 0;
  size_t best_count = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const size_t c = swept_overlap(candidates[i], gripper, pg);
    const bool better =
        c > best_count || (c == best_count && c > 0 && candidates[i].score > candidates[best_idx].score);
    if (better) {
      best_count = c;
      best_idx = i;
    }
  }
  if (best_count == 0) throw NoFeasibleGraspError("no candidate overlaps the graspable points");
  return candidates[best_idx];
}

GraspRect poses_to_rect(const std::vector<Grasp6DoF>& poses, const CameraIntrinsics& intr,
                        const GripperModel& gripper, double rect_height_ratio) {
  (void)gripper;
  if (poses.empty()) throw InvalidArgumentError("no poses");

  // Projected fingertip contacts plus the dominant 2D closing direction
  // (averaged mod pi by angle doubling).
  std::vector<std::array<double, 2>> pts;  // (row, col)
  double sum_s = 0.0, sum_c = 0.0;
  for (const auto& g : poses) {
    const Vec3 axis = g.closing_axis();
    const Vec3 c1 = {g.translation[0] + axis[0] * g.opening / 2,
                     g.translation[1] + axis[1] * g.opening / 2,
                     g.translation[2] + axis[2] * g.opening / 2};
    const Vec3 c2 = {g.translation[0] - axis[0] * g.opening / 2,
                     g.translation[1] - axis[1] * g.opening / 2,
                     g.translation[2] - axis[2] * g.opening / 2};
    const auto p1 = project_point(c1, intr);
    const auto p2 = project_point(c2, intr);
    pts.push_back(p1);
    pts.push_back(p2);
    const double ang = std::atan2(p1[0] - p2[0], p1[1] - p2[1]);  // dy, dx
    sum_s += std::sin(2 * ang);
    sum_c += std::cos(2 * ang);
  }
  const double theta = wrap_half_pi(0.5 * std::atan2(sum_s, sum_c));

  // Bounding extents in the rotated frame.
  const double c = std::cos(theta), s = std::sin(theta);
  double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
  for (const auto& p : pts) {
    const double u = p[1] * c + p[0] * s;
    const double v = -p[1] * s + p[0] * c;
    ulo = std::min(ulo, u);
    uhi = std::max(uhi, u);
    vlo = std::min(vlo, v);
    vhi = std::max(vhi, v);
  }
  const double um = (ulo + uhi) / 2, vm = (vlo + vhi) / 2;
  GraspRect r;
  r.x = um * c - vm * s;
  r.y = um * s + vm * c;
  r.w = uhi - ulo;
  r.theta = theta;
  r.h = std::max(vhi - vlo, r.w * rect_height_ratio);
  r.score = 1.0;
  for (const auto& g : poses) r.score = std::min(r.score, g.score);
  return r;
}

}  // namespace grasptk
