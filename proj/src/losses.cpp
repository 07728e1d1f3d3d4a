#include "grasptk/losses.hpp"

#include <cmath>

#include "grasptk/errors.hpp"
#include "grasptk/grasp_maps.hpp"
#include "grasptk/model.hpp"

namespace grasptk {

void LossConfig::validate() const {
  if (!(beta > 0)) throw ConfigError("beta must be > 0");
  if (alpha < 0) throw ConfigError("alpha must be >= 0");
  if (lambda_mask < 0 || lambda_q < 0 || lambda_theta < 0 || lambda_w < 0)
    throw ConfigError("loss weights must be >= 0");
}

double weighted_smooth_l1_value(std::span<const double> pred, std::span<const double> gt,
                                std::span<const double> q_gt, const LossConfig& cfg) {
  cfg.validate();
  if (pred.size() != gt.size() || pred.size() != q_gt.size())
    throw ShapeError("weighted_smooth_l1: size mismatch");
  double s = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - gt[i];
    const double base =
        std::abs(r) < cfg.beta ? r * r / (2.0 * cfg.beta) : std::abs(r) - cfg.beta / 2.0;
    s += (1.0 + cfg.alpha * q_gt[i]) * base;
  }
  return s / static_cast<double>(pred.size());
}

double bce_value(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw ShapeError("bce: size mismatch");
  double s = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], 1e-12, 1.0 - 1e-12);
    s += -(gt[i] * std::log(p) + (1.0 - gt[i]) * std::log(1.0 - p));
  }
  return s / static_cast<double>(pred.size());
}

GtTargets make_gt_targets(const GraspMaps& maps, const std::vector<uint8_t>& mask_map,
                          double max_width_map) {
  const size_t h = maps.height, w = maps.width_px;
  if (mask_map.size() != h * w) throw ShapeError("gt mask size mismatch");
  GtTargets gt;
  gt.mask = Tensor({1, h, w});
  gt.quality = Tensor({1, h, w});
  gt.sin2t = Tensor({1, h, w});
  gt.cos2t = Tensor({1, h, w}, 1.0);  // background angle target is theta = 0
  gt.width_norm = Tensor({1, h, w});
  for (size_t i = 0; i < h * w; ++i) {
    gt.mask.values[i] = mask_map[i] ? 1.0 : 0.0;
    gt.quality.values[i] = maps.quality[i];
    if (maps.quality[i] > 0.0) {
      gt.sin2t.values[i] = std::sin(2.0 * maps.angle[i]);
      gt.cos2t.values[i] = std::cos(2.0 * maps.angle[i]);
      gt.width_norm.values[i] = std::min(maps.width[i] / max_width_map, 1.0);
    }
  }
  return gt;
}

LossVars build_loss(Graph& g, const ForwardOutput& out, const GtTargets& gt,
                    const LossConfig& cfg, bool mask_only) {
  cfg.validate();
  LossVars lv;
  lv.mask = g.bce_mean(out.mask, g.constant(gt.mask));
  if (mask_only) {
    lv.total = g.weighted_sum({{lv.mask, cfg.lambda_mask}});
    return lv;
  }
  Var q_gt = g.constant(gt.quality);
  lv.quality = g.weighted_smooth_l1_mean(out.quality, q_gt, q_gt, cfg.alpha, cfg.beta);
  const Var sin_loss = g.weighted_smooth_l1_mean(g.channel(out.theta_channels, 0),
                                                 g.constant(gt.sin2t), q_gt, cfg.alpha, cfg.beta);
  const Var cos_loss = g.weighted_smooth_l1_mean(g.channel(out.theta_channels, 1),
                                                 g.constant(gt.cos2t), q_gt, cfg.alpha, cfg.beta);
  lv.theta = g.weighted_sum({{sin_loss, 1.0}, {cos_loss, 1.0}});
  lv.width = g.weighted_smooth_l1_mean(out.width_norm, g.constant(gt.width_norm), q_gt, cfg.alpha,
                                       cfg.beta);
  lv.total = g.weighted_sum({{lv.mask, cfg.lambda_mask},
                             {lv.quality, cfg.lambda_q},
                             {lv.theta, cfg.lambda_theta},
                             {lv.width, cfg.lambda_w}});
  return lv;
}

}  // namespace grasptk
