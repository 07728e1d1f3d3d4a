#pragma once

#include <utility>
#include <vector>

#include "grasptk/grasp_types.hpp"

namespace grasptk {

struct RasterConfig {
  // Quality shading inside the central third of each rect (along the closing
  // axis): 1.0 at the center falling off linearly to edge_quality at the
  // region boundary, so the argmax of a rasterized map sits at the rect
  // center instead of an arbitrary plateau pixel.
  double edge_quality = 0.8;
  double max_width = 1e9;  // clamp for painted widths
};

// Paints ground-truth maps from grasp rectangles. Later rects overwrite
// earlier ones on overlapping pixels. A rect whose footprint misses the grid
// entirely is rejected; an empty rect list yields all-zero maps.
GraspMaps rasterize_grasp_maps(const std::vector<GraspRect>& rects, uint32_t height,
                               uint32_t width, const RasterConfig& cfg = {});

struct DecodeConfig {
  double rect_height_ratio = 0.5;  // h = ratio * w for decoded rects
};

// Best grasp = argmax of the quality map (row-major first occurrence on
// ties). Throws NoGraspError when the quality map is identically zero.
GraspRect decode_top1(const GraspMaps& maps, const DecodeConfig& cfg = {});

// Greedy peak picking: after each selection every quality value within
// Chebyshev distance nms_radius of the chosen pixel is suppressed. Returns
// up to k rects in non-increasing score order.
std::vector<GraspRect> decode_topk(const GraspMaps& maps, size_t k, uint32_t nms_radius,
                                   const DecodeConfig& cfg = {});

// Angle codec used for network regression targets: theta <-> (sin 2t, cos 2t)
// removes the +-pi/2 wraparound from the target space.
std::pair<double, double> angle_to_channels(double theta);

// Inverse codec; throws DegenerateAngleError on (0, 0).
double angle_from_channels(double s, double c);

}  // namespace grasptk
