#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "grasptk/grasp_types.hpp"

namespace grasptk {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

Vec3 sub(const Vec3& a, const Vec3& b);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);
Vec3 mat_col(const Mat3& m, int c);
Vec3 mat_mul_vec(const Mat3& m, const Vec3& v);
Mat3 mat_mul(const Mat3& a, const Mat3& b);
Mat3 mat_transpose(const Mat3& m);
Mat3 mat_from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2);
double mat_det(const Mat3& m);

struct PointCloud {
  std::vector<Vec3> points;  // camera frame, meters
  // Source pixel (row, col) per point when the cloud came from a depth image.
  std::vector<std::array<double, 2>> pixels;

  bool has_pixels() const { return pixels.size() == points.size() && !points.empty(); }
  size_t size() const { return points.size(); }
};

// Rigid grasp pose. Rotation columns are (closing, lateral, approach) axes in
// the camera frame; translation is the grasp center between the fingertips.
struct Grasp6DoF {
  Mat3 rotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 translation = {0, 0, 0};
  double opening = 0.0;  // meters
  double score = 0.0;

  Vec3 closing_axis() const { return mat_col(rotation, 0); }
  Vec3 lateral_axis() const { return mat_col(rotation, 1); }
  Vec3 approach_axis() const { return mat_col(rotation, 2); }

  // Throws unless RtR = I and det R = 1 within tol.
  void validate(double tol = 1e-9) const;
};

struct GripperModel {
  double finger_depth = 0.04;
  double finger_thickness = 0.02;
  double max_opening = 0.08;
};

// Back-projects a depth image through the pinhole model. Zero depth marks an
// invalid pixel and is skipped; `stride` subsamples the pixel grid.
PointCloud deproject(const std::vector<double>& depth, uint32_t height, uint32_t width,
                     const CameraIntrinsics& intr, uint32_t stride = 1);

std::array<double, 2> project_point(const Vec3& p, const CameraIntrinsics& intr);

// Points whose source pixel falls inside the rect footprint. Throws
// EmptyRegionError when no point qualifies.
PointCloud rect_to_points(const GraspRect& rect, const PointCloud& cloud);

// Number of cloud points inside the closing volume of the pose: an oriented
// box with extents (opening, finger_thickness, finger_depth) along the
// (closing, lateral, approach) axes.
size_t swept_overlap(const Grasp6DoF& pose, const GripperModel& gripper, const PointCloud& pg);

struct SamplerConfig {
  size_t knn = 12;            // neighbors for normal estimation
  size_t rolls_per_point = 4; // in-plane roll angles per surface point
};

// Antipodal-style candidate sampler: picks surface points, estimates normals
// by k-NN plane fitting, approaches along the inward normal and samples
// in-plane rolls. Deterministic for a fixed seed.
std::vector<Grasp6DoF> sample_candidates(const PointCloud& cloud, size_t n,
                                         const GripperModel& gripper, uint64_t seed,
                                         const SamplerConfig& cfg = {});

// argmax of swept_overlap over the candidates; ties broken by higher score
// then lower index. Throws NoFeasibleGraspError when every count is zero.
Grasp6DoF select_grasp(const std::vector<Grasp6DoF>& candidates, const PointCloud& pg,
                       const GripperModel& gripper);

// Projects fingertip contact points of each pose into the image and fits a
// rect in the frame of the dominant projected closing direction.
GraspRect poses_to_rect(const std::vector<Grasp6DoF>& poses, const CameraIntrinsics& intr,
                        const GripperModel& gripper, double rect_height_ratio = 0.5);

}  // namespace grasptk
