#include "grasptk/model.hpp"

#include <cmath>

#include "grasptk/errors.hpp"
#include "grasptk/grasp_maps.hpp"
#include "grasptk/rng.hpp"

namespace grasptk {

Tensor& ModelParams::add(const std::string& name, std::vector<size_t> dims) {
  if (index.count(name)) throw InvalidArgumentError("duplicate parameter: " + name);
  index[name] = items.size();
  items.emplace_back(name, Tensor(std::move(dims)));
  return items.back().second;
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end()) throw InvalidArgumentError("unknown parameter: " + name);
  return items[it->second].second;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw InvalidArgumentError("unknown parameter: " + name);
  return items[it->second].second;
}

void ModelParams::zero_grads() {
  for (auto& [name, t] : items) t.zero_grad();
}

size_t ModelParams::total_values() const {
  size_t n = 0;
  for (const auto& [name, t] : items) n += t.size();
  return n;
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  const size_t C = cfg_.channels;
  const size_t in_ch = cfg_.coord_channels ? 5 : 3;
  params_.add("token_embed", {cfg_.vocab_size, C});
  params_.add("text_proj_w", {C, C});
  params_.add("text_proj_b", {C});
  params_.add("conv1_w", {cfg_.conv1, in_ch, 3, 3});
  params_.add("conv1_b", {cfg_.conv1});
  params_.add("conv2_w", {cfg_.conv2, cfg_.conv1, 3, 3});
  params_.add("conv2_b", {cfg_.conv2});
  params_.add("conv3_w", {cfg_.conv3, cfg_.conv2, 3, 3});
  params_.add("conv3_b", {cfg_.conv3});
  params_.add("lat2_w", {C, cfg_.conv2, 1, 1});
  params_.add("lat2_b", {C});
  params_.add("lat3_w", {C, cfg_.conv3, 1, 1});
  params_.add("lat3_b", {C});
  params_.add("merge_w", {C, C, 3, 3});
  params_.add("merge_b", {C});
  params_.add("attn_wq", {C, C});
  params_.add("attn_wk", {C, C});
  params_.add("attn_wv", {C, C});
  params_.add("attn_wo", {C, C});
  params_.add("mask_bias", {1});
  params_.add("refine_w", {C, C, 3, 3});
  params_.add("refine_b", {C});
  const size_t hh = cfg_.head_hidden;
  for (const auto& [head, out_ch] :
       std::vector<std::pair<std::string, size_t>>{{"q", 1}, {"theta", 2}, {"w", 1}}) {
    params_.add("head_" + head + "_w1", {hh, C, 1, 1});
    params_.add("head_" + head + "_b1", {hh});
    params_.add("head_" + head + "_w2", {out_ch, hh, 1, 1});
    params_.add("head_" + head + "_b2", {out_ch});
  }
}

void Model::init_params(uint64_t seed) {
  Rng rng(seed, {0x6d6f64656cull});
  for (auto& [name, t] : params_.items) {
    if (name == "token_embed") {
      for (auto& v : t.values) v = rng.uniform(-0.3, 0.3);
    } else if (name.ends_with("_b") || name.ends_with("_b1") || name.ends_with("_b2") ||
               name == "mask_bias") {
      for (auto& v : t.values) v = 0.0;
    } else {
      size_t fan = 1;
      for (size_t i = 1; i < t.dims.size(); ++i) fan *= t.dims[i];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan));
      for (auto& v : t.values) v = rng.uniform(-bound, bound);
    }
  }
}

Var Model::leaf(const std::string& name, bool training) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  const Tensor& t = params_.at(name);
  Var v = training ? graph_->param(t, name) : graph_->constant(t);
  leaves_[name] = v;
  return v;
}

Graph& Model::graph() {
  if (!graph_) throw GraphError("no pending computation graph");
  return *graph_;
}

double angle_from_channels_or_zero(double s, double c) {
  if (s == 0.0 && c == 0.0) return 0.0;
  return wrap_half_pi(0.5 * std::atan2(s, c));
}

ForwardOutput Model::forward(const Tensor& image, const std::vector<int>& tokens,
                             const ForwardOptions& opts) {
  if (image.dims.size() != 3 || image.dims[0] != 3)
    throw ShapeError("image must be (3,H,W)");
  const size_t H = image.dims[1], W = image.dims[2];
  if (H % 4 != 0 || W % 4 != 0) throw ShapeError("image dims must be divisible by 4");
  if (tokens.empty()) throw InvalidArgumentError("token list is empty");

  graph_ = std::make_unique<Graph>();
  leaves_.clear();
  Graph& g = *graph_;
  const bool train = opts.training;
  const size_t C = cfg_.channels;

  Var input;
  if (cfg_.coord_channels) {
    Tensor in({5, H, W});
    std::copy(image.values.begin(), image.values.end(), in.values.begin());
    for (size_t y = 0; y < H; ++y)
      for (size_t x = 0; x < W; ++x) {
        in.values[3 * H * W + y * W + x] = W > 1 ? 2.0 * x / (W - 1.0) - 1.0 : 0.0;
        in.values[4 * H * W + y * W + x] = H > 1 ? 2.0 * y / (H - 1.0) - 1.0 : 0.0;
      }
    input = g.constant(in);
  } else {
    input = g.constant(image);
  }

  // Text path.
  Var tok = g.embedding(leaf("token_embed", train), tokens);
  Var sent = g.mean_rows(tok);
  Var z = g.linear_vec(leaf("text_proj_w", train), sent, leaf("text_proj_b", train));

  // Vision pyramid with two lateral connections merged at H/4.
  Var x1 = g.relu(g.conv2d(input, leaf("conv1_w", train), leaf("conv1_b", train), 2, 1));
  Var x2 = g.relu(g.conv2d(x1, leaf("conv2_w", train), leaf("conv2_b", train), 2, 1));
  Var x3 = g.relu(g.conv2d(x2, leaf("conv3_w", train), leaf("conv3_b", train), 2, 1));
  Var l2 = g.conv2d(x2, leaf("lat2_w", train), leaf("lat2_b", train), 1, 0);
  Var l3 = g.conv2d(x3, leaf("lat3_w", train), leaf("lat3_b", train), 1, 0);
  const size_t hp = H / 4, wp = W / 4;
  Var up = g.upsample_to(l3, hp, wp);
  Var fpn = g.conv2d(g.add(l2, up), leaf("merge_w", train), leaf("merge_b", train), 1, 1);

  ForwardOutput out;
  out.map_h = hp;
  out.map_w = wp;
  out.fpn = fpn;

  Var fused;
  if (cfg_.fusion == FusionMode::CrossAttention) {
    Var fn = g.chw_to_nc(fpn);
    Var q = g.matmul_nt(fn, leaf("attn_wq", train));
    Var k = g.matmul_nt(tok, leaf("attn_wk", train));
    Var v = g.matmul_nt(tok, leaf("attn_wv", train));
    Var scores = g.scale(g.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(C)));
    Var attn = g.softmax_rows(scores);
    out.attention = attn;
    Var ctx = g.matmul(attn, v);
    Var o = g.matmul_nt(ctx, leaf("attn_wo", train));
    fused = g.nc_to_chw(g.relu(g.add(fn, o)), hp, wp);
  } else {
    // Fusion ablation: the sentence embedding conditions every pixel through
    // the same value/output projections, with no per-query attention.
    Var t1 = g.matvec(leaf("attn_wv", train), sent);
    Var t2 = g.matvec(leaf("attn_wo", train), t1);
    fused = g.relu(g.add_channel_broadcast(fpn, t2));
  }
  out.fused = fused;

  // Mask head: M = sigmoid(f . z + bias).
  Var fn2 = g.chw_to_nc(fused);
  Var logits = g.add_scalar_broadcast(g.matvec(fn2, z), leaf("mask_bias", train));
  Var mask = g.sigmoid(g.reshape(logits, {1, hp, wp}));
  out.mask = mask;
  out.mask_values = mask->val;

  Var pooled = opts.identity_pool ? fused : g.mul_spatial(fused, mask);
  out.pooled = pooled;

  if (opts.with_grasp_branch) {
    Var ref = g.relu(g.conv2d(pooled, leaf("refine_w", train), leaf("refine_b", train), 1, 1));
    auto head = [&](const std::string& name) {
      Var h1 = g.relu(g.conv2d(ref, leaf("head_" + name + "_w1", train),
                               leaf("head_" + name + "_b1", train), 1, 0));
      return g.conv2d(h1, leaf("head_" + name + "_w2", train), leaf("head_" + name + "_b2", train),
                      1, 0);
    };
    out.quality = g.sigmoid(head("q"));
    out.theta_channels = head("theta");
    out.width_norm = g.sigmoid(head("w"));

    // Value-level maps in map coordinates.
    out.maps = GraspMaps(static_cast<uint32_t>(hp), static_cast<uint32_t>(wp));
    const double wmax = cfg_.max_width_map();
    const size_t n = hp * wp;
    for (size_t i = 0; i < n; ++i) {
      out.maps.quality[i] = out.quality->val[i];
      out.maps.angle[i] =
          angle_from_channels_or_zero(out.theta_channels->val[i], out.theta_channels->val[n + i]);
      out.maps.width[i] = out.width_norm->val[i] * wmax;
    }
  }
  return out;
}

void Model::backward(Var loss) {
  if (!graph_) throw GraphError("backward called before forward");
  graph_->backward(loss);
  for (auto& [name, var] : leaves_) {
    if (var->param_name.empty()) continue;
    Tensor& t = params_.at(name);
    for (size_t i = 0; i < t.size(); ++i) t.grad[i] += var->grad[i];
  }
  graph_.reset();
  leaves_.clear();
}

GradCheckResult gradient_check(Model& model, const GradCheckExample& ex, const LossConfig& cfg,
                               double h, double denom_floor) {
  GradCheckResult res;

  // Analytic gradients.
  model.params().zero_grads();
  {
    auto out = model.forward(ex.image, ex.tokens);
    auto lv = build_loss(model.graph(), out, ex.gt, cfg, /*mask_only=*/false);
    model.backward(lv.total);
  }
  std::vector<std::pair<std::string, std::vector<double>>> analytic;
  for (auto& [name, t] : model.params().items) analytic.emplace_back(name, t.grad);

  auto loss_value = [&]() {
    auto out = model.forward(ex.image, ex.tokens, {.training = false});
    auto lv = build_loss(model.graph(), out, ex.gt, cfg, false);
    return lv.total->val[0];
  };

  for (size_t pi = 0; pi < model.params().items.size(); ++pi) {
    auto& [name, t] = model.params().items[pi];
    const auto& agrad = analytic[pi].second;
    for (size_t i = 0; i < t.size(); ++i) {
      const double orig = t.values[i];
      t.values[i] = orig + h;
      const double fp = loss_value();
      t.values[i] = orig - h;
      const double fm = loss_value();
      t.values[i] = orig;
      const double num = (fp - fm) / (2.0 * h);
      const double rel =
          std::abs(num - agrad[i]) / std::max({std::abs(num), std::abs(agrad[i]), denom_floor});
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  }

  // Stage-I objective must leave the grasp branch untouched.
  model.params().zero_grads();
  {
    auto out = model.forward(ex.image, ex.tokens, {.with_grasp_branch = false});
    auto lv = build_loss(model.graph(), out, ex.gt, cfg, /*mask_only=*/true);
    model.backward(lv.total);
  }
  for (const auto& name : model.grasp_branch_params()) {
    for (double gv : model.params().at(name).grad)
      if (gv != 0.0) res.frozen_heads_zero = false;
  }
  return res;
}

std::vector<std::string> Model::grasp_branch_params() const {
  std::vector<std::string> names = {"refine_w", "refine_b"};
  for (const std::string head : {"q", "theta", "w"}) {
    names.push_back("head_" + head + "_w1");
    names.push_back("head_" + head + "_b1");
    names.push_back("head_" + head + "_w2");
    names.push_back("head_" + head + "_b2");
  }
  return names;
}

}  // namespace grasptk
