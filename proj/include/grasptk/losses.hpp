#pragma once

#include <span>

#include "grasptk/graph.hpp"
#include "grasptk/grasp_types.hpp"
#include "grasptk/tensor.hpp"

namespace grasptk {

struct LossConfig {
  double beta = 1.0;         // Smooth-L1 transition point
  double alpha = 2.0;        // per-pixel weight gain: w_p = 1 + alpha * q_gt
  double lambda_mask = 1.0;
  double lambda_q = 1.0;
  double lambda_theta = 1.0;
  double lambda_w = 1.0;

  void validate() const;
};

// Scalar reference implementations (also used by tests as the spec-level
// operations; the graph ops in graph.cpp mirror these).
double weighted_smooth_l1_value(std::span<const double> pred, std::span<const double> gt,
                                std::span<const double> q_gt, const LossConfig& cfg);
double bce_value(std::span<const double> pred, std::span<const double> gt);

// Regression targets for one training example, all at map resolution.
struct GtTargets {
  Tensor mask;        // (1,Hp,Wp), {0,1}
  Tensor quality;     // (1,Hp,Wp)
  Tensor sin2t;       // (1,Hp,Wp), background 0
  Tensor cos2t;       // (1,Hp,Wp), background 1
  Tensor width_norm;  // (1,Hp,Wp), width / max_width in [0,1]
};

// Builds targets from rasterized maps and a binary target mask.
GtTargets make_gt_targets(const GraspMaps& maps, const std::vector<uint8_t>& mask_map,
                          double max_width_map);

struct ForwardOutput;  // model.hpp

struct LossVars {
  Var total = nullptr;
  Var mask = nullptr;
  Var quality = nullptr;
  Var theta = nullptr;
  Var width = nullptr;
};

// Total training objective. mask_only builds the Stage-I objective (mask BCE
// alone); otherwise mask/quality/angle/width terms are combined with their
// lambda weights, map terms weighted per-pixel by 1 + alpha * q_gt.
LossVars build_loss(Graph& g, const ForwardOutput& out, const GtTargets& gt,
                    const LossConfig& cfg, bool mask_only);

}  // namespace grasptk
