#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "grasptk/graph.hpp"
#include "grasptk/grasp_types.hpp"
#include "grasptk/losses.hpp"
#include "grasptk/tensor.hpp"

namespace grasptk {

enum class FusionMode { CrossAttention, BroadcastMlp };

struct ModelConfig {
  size_t channels = 32;      // fused feature width C; text dim d == C
  size_t conv1 = 12;
  size_t conv2 = 24;
  size_t conv3 = 32;
  size_t head_hidden = 16;
  size_t vocab_size = 64;
  double max_width_px = 60.0;  // gripper opening clamp at image resolution
  bool coord_channels = true;
  FusionMode fusion = FusionMode::CrossAttention;

  static constexpr size_t stride = 4;  // image -> map downsampling
  double max_width_map() const { return max_width_px / static_cast<double>(stride); }
};

// Named registry of every trainable tensor, in a fixed order.
struct ModelParams {
  std::vector<std::pair<std::string, Tensor>> items;
  std::map<std::string, size_t> index;

  Tensor& add(const std::string& name, std::vector<size_t> dims);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index.count(name) > 0; }
  void zero_grads();
  size_t total_values() const;
};

struct ForwardOptions {
  bool training = true;          // build gradients
  bool with_grasp_branch = true; // skip refine/heads (Stage-I forward)
  bool identity_pool = false;    // pool with M == 1 (no-pooling baseline)
};

struct ForwardOutput {
  // Graph nodes, valid until the next forward() on the same model.
  Var mask = nullptr;            // (1,Hp,Wp) sigmoid
  Var quality = nullptr;         // (1,Hp,Wp) sigmoid
  Var theta_channels = nullptr;  // (2,Hp,Wp): (sin 2t, cos 2t) regression
  Var width_norm = nullptr;      // (1,Hp,Wp) sigmoid
  Var fused = nullptr;           // (C,Hp,Wp) after fusion nonlinearity
  Var pooled = nullptr;          // (C,Hp,Wp) mask-pooled features
  Var fpn = nullptr;             // (C,Hp,Wp) vision-only path before fusion
  Var attention = nullptr;       // (Hp*Wp, T) attention weights, if used

  size_t map_h = 0, map_w = 0;

  // Value-level outputs (map coordinates).
  GraspMaps maps;
  std::vector<double> mask_values;
};

class Model {
public:
  explicit Model(ModelConfig cfg);

  // Parameter values copy over; any pending graph does not.
  Model(const Model& other) : cfg_(other.cfg_), params_(other.params_) {}
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;

  void init_params(uint64_t seed);

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }

  // image: (3,H,W) with H, W divisible by 4; tokens: vocabulary ids.
  ForwardOutput forward(const Tensor& image, const std::vector<int>& tokens,
                        const ForwardOptions& opts = {});

  // Accumulates d(loss)/d(param) into the registry grad buffers and retires
  // the pending graph. Throws GraphError when no forward is pending.
  void backward(Var loss);

  Graph& graph();

  // Parameters frozen during Stage-I segmentation training.
  std::vector<std::string> grasp_branch_params() const;

private:
  Var leaf(const std::string& name, bool training);

  ModelConfig cfg_;
  ModelParams params_;
  std::unique_ptr<Graph> graph_;
  std::map<std::string, Var> leaves_;
};

// Angle map decoding that tolerates the (0,0) corner by mapping it to 0.
double angle_from_channels_or_zero(double s, double c);

// Central-difference gradient verification of the full objective.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  size_t checked = 0;
  bool frozen_heads_zero = true;  // Stage-I graph leaves head grads at zero
};

struct GradCheckExample {
  Tensor image;
  std::vector<int> tokens;
  GtTargets gt;
};

GradCheckResult gradient_check(Model& model, const GradCheckExample& ex, const LossConfig& cfg,
                               double h = 1e-5, double denom_floor = 1e-6);

}  // namespace grasptk
