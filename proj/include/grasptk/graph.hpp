#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "grasptk/tensor.hpp"

namespace grasptk {

// Reverse-mode autodiff over a per-forward tape. Nodes are created in
// topological order, so backward() is a reverse sweep over the tape.
class Graph;

struct Node {
  std::vector<size_t> dims;
  std::vector<double> val;
  std::vector<double> grad;
  std::function<void()> backward;  // accumulates into parent grads
  bool needs_grad = false;
  std::string param_name;  // set on leaves bound to registry parameters

  size_t size() const { return val.size(); }
  double scalar() const { return val[0]; }
};

using Var = Node*;

class Graph {
public:
  // Leaves. Parameters need gradients; constants do not.
  Var param(const Tensor& t, const std::string& name);
  Var constant(const Tensor& t);
  Var constant(std::vector<size_t> dims, std::vector<double> values);

  // Elementwise and shape ops.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var mean_all(Var a);  // scalar mean over every element
  Var relu(Var a);
  Var sigmoid(Var a);
  Var mul_spatial(Var f, Var m);              // (C,H,W) * (1,H,W), broadcast over C
  Var add_channel_broadcast(Var f, Var v);    // (C,H,W) + (C), broadcast over H,W
  Var chw_to_nc(Var a);                       // (C,H,W) -> (H*W, C)
  Var nc_to_chw(Var a, size_t h, size_t w);   // (H*W, C) -> (C,H,W)
  Var upsample_to(Var a, size_t h, size_t w); // nearest x2 with edge clamp
  Var reshape(Var a, std::vector<size_t> dims);
  Var add_scalar_broadcast(Var a, Var s);     // s is a 1-element tensor

  // Linear algebra.
  Var matmul(Var a, Var b);     // (m,k) x (k,n)
  Var matmul_nt(Var a, Var b);  // (m,k) x (n,k)^T -> (m,n)
  Var matvec(Var w, Var x);     // (m,n) x (n) -> (m)
  Var linear_vec(Var w, Var x, Var b);  // matvec + bias
  Var softmax_rows(Var a);      // (m,n), softmax over each row

  // Convolution. input (Cin,H,W), weight (Cout,Cin,kh,kw), bias (Cout).
  Var conv2d(Var input, Var weight, Var bias, size_t stride, size_t pad);

  // Text ops.
  Var embedding(Var table, const std::vector<int>& ids);  // (V,d) -> (T,d)
  Var mean_rows(Var a);                                   // (T,d) -> (d)

  // Scalar losses (mean over elements).
  Var bce_mean(Var pred, Var target);
  // Smooth-L1 with per-pixel weights 1 + alpha * q_gt.
  Var weighted_smooth_l1_mean(Var pred, Var target, Var q_gt, double alpha, double beta);
  Var weighted_sum(const std::vector<std::pair<Var, double>>& terms);  // scalars

  // Per-channel slice of a (C,H,W) tensor -> (1,H,W).
  Var channel(Var a, size_t c);

  // Reverse sweep from a scalar loss.
  void backward(Var loss);

  size_t node_count() const { return nodes_.size(); }

private:
  Var make(std::vector<size_t> dims, bool needs_grad);
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace grasptk
