#include "grasptk/graph.hpp"

#include <algorithm>
#include <cmath>

namespace grasptk {

Var Graph::make(std::vector<size_t> dims, bool needs_grad) {
  auto node = std::make_unique<Node>();
  node->dims = std::move(dims);
  node->val.assign(Tensor::count(node->dims), 0.0);
  if (needs_grad) node->grad.assign(node->val.size(), 0.0);
  node->needs_grad = needs_grad;
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

Var Graph::param(const Tensor& t, const std::string& name) {
  Var n = make(t.dims, true);
  n->val = t.values;
  n->param_name = name;
  return n;
}

Var Graph::constant(const Tensor& t) {
  Var n = make(t.dims, false);
  n->val = t.values;
  return n;
}

Var Graph::constant(std::vector<size_t> dims, std::vector<double> values) {
  Var n = make(std::move(dims), false);
  if (n->size() != values.size()) throw ShapeError("constant: value count mismatch");
  n->val = std::move(values);
  return n;
}

namespace {
inline void accumulate(Var node, const std::vector<double>& g) {
  if (!node->needs_grad) return;
  for (size_t i = 0; i < g.size(); ++i) node->grad[i] += g[i];
}
}  // namespace

Var Graph::add(Var a, Var b) {
  check_dims(a->dims, b->dims, "add");
  Var out = make(a->dims, a->needs_grad || b->needs_grad);
  for (size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] + b->val[i];
  if (out->needs_grad)
    out->backward = [a, b, out] {
      accumulate(a, out->grad);
      accumulate(b, out->grad);
    };
  return out;
}

Var Graph::mul(Var a, Var b) {
  check_dims(a->dims, b->dims, "mul");
  Var out = make(a->dims, a->needs_grad || b->needs_grad);
  for (size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] * b->val[i];
  if (out->needs_grad)
    out->backward = [a, b, out] {
      if (a->needs_grad)
        for (size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * b->val[i];
      if (b->needs_grad)
        for (size_t i = 0; i < out->size(); ++i) b->grad[i] += out->grad[i] * a->val[i];
    };
  return out;
}

Var Graph::mean_all(Var a) {
  Var out = make({1}, a->needs_grad);
  double s = 0;
  for (size_t i = 0; i < a->size(); ++i) s += a->val[i];
  out->val[0] = s / static_cast<double>(a->size());
  if (out->needs_grad)
    out->backward = [a, out] {
      const double g = out->grad[0] / static_cast<double>(a->size());
      for (size_t i = 0; i < a->size(); ++i) a->grad[i] += g;
    };
  return out;
}

Var Graph::scale(Var a, double s) {
  Var out = make(a->dims, a->needs_grad);
  for (size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] * s;
  if (out->needs_grad)
    out->backward = [a, out, s] {
      for (size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i] * s;
    };
  return out;
}

Var Graph::relu(Var a) {
  Var out = make(a->dims, a->needs_grad);
  for (size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] > 0 ? a->val[i] : 0.0;
  if (out->needs_grad)
    out->backward = [a, out] {
      for (size_t i = 0; i < out->size(); ++i)
        if (a->val[i] > 0) a->grad[i] += out->grad[i];
    };
  return out;
}

Var Graph::sigmoid(Var a) {
  Var out = make(a->dims, a->needs_grad);
  for (size_t i = 0; i < out->size(); ++i) out->val[i] = 1.0 / (1.0 + std::exp(-a->val[i]));
  if (out->needs_grad)
    out->backward = [a, out] {
      for (size_t i = 0; i < out->size(); ++i)
        a->grad[i] += out->grad[i] * out->val[i] * (1.0 - out->val[i]);
    };
  return out;
}

Var Graph::mul_spatial(Var f, Var m) {
  if (f->dims.size() != 3 || m->dims.size() != 3 || m->dims[0] != 1 ||
      f->dims[1] != m->dims[1] || f->dims[2] != m->dims[2])
    throw ShapeError("mul_spatial: expected (C,H,W) and (1,H,W)");
  const size_t C = f->dims[0], hw = f->dims[1] * f->dims[2];
  Var out = make(f->dims, f->needs_grad || m->needs_grad);
  for (size_t c = 0; c < C; ++c)
    for (size_t p = 0; p < hw; ++p) out->val[c * hw + p] = f->val[c * hw + p] * m->val[p];
  if (out->needs_grad)
    out->backward = [f, m, out, C, hw] {
      if (f->needs_grad)
        for (size_t c = 0; c < C; ++c)
          for (size_t p = 0; p < hw; ++p)
            f->grad[c * hw + p] += out->grad[c * hw + p] * m->val[p];
      if (m->needs_grad)
        for (size_t c = 0; c < C; ++c)
          for (size_t p = 0; p < hw; ++p)
            m->grad[p] += out->grad[c * hw + p] * f->val[c * hw + p];
    };
  return out;
}

Var Graph::add_channel_broadcast(Var f, Var v) {
  if (f->dims.size() != 3 || v->dims.size() != 1 || f->dims[0] != v->dims[0])
    throw ShapeError("add_channel_broadcast: expected (C,H,W) and (C)");
  const size_t C = f->dims[0], hw = f->dims[1] * f->dims[2];
  Var out = make(f->dims, f->needs_grad || v->needs_grad);
  for (size_t c = 0; c < C; ++c)
    for (size_t p = 0; p < hw; ++p) out->val[c * hw + p] = f->val[c * hw + p] + v->val[c];
  if (out->needs_grad)
    out->backward = [f, v, out, C, hw] {
      if (f->needs_grad)
        for (size_t i = 0; i < out->size(); ++i) f->grad[i] += out->grad[i];
      if (v->needs_grad)
        for (size_t c = 0; c < C; ++c) {
          double s = 0;
          for (size_t p = 0; p < hw; ++p) s += out->grad[c * hw + p];
          v->grad[c] += s;
        }
    };
  return out;
}

Var Graph::chw_to_nc(Var a) {
  if (a->dims.size() != 3) throw ShapeError("chw_to_nc: expected (C,H,W)");
  const size_t C = a->dims[0], hw = a->dims[1] * a->dims[2];
  Var out = make({hw, C}, a->needs_grad);
  for (size_t c = 0; c < C; ++c)
    for (size_t p = 0; p < hw; ++p) out->val[p * C + c] = a->val[c * hw + p];
  if (out->needs_grad)
    out->backward = [a, out, C, hw] {
      for (size_t c = 0; c < C; ++c)
        for (size_t p = 0; p < hw; ++p) a->grad[c * hw + p] += out->grad[p * C + c];
    };
  return out;
}

Var Graph::nc_to_chw(Var a, size_t h, size_t w) {
  if (a->dims.size() != 2 || a->dims[0] != h * w) throw ShapeError("nc_to_chw: bad dims");
  const size_t C = a->dims[1], hw = h * w;
  Var out = make({C, h, w}, a->needs_grad);
  for (size_t c = 0; c < C; ++c)
    for (size_t p = 0; p < hw; ++p) out->val[c * hw + p] = a->val[p * C + c];
  if (out->needs_grad)
    out->backward = [a, out, C, hw] {
      for (size_t c = 0; c < C; ++c)
        for (size_t p = 0; p < hw; ++p) a->grad[p * C + c] += out->grad[c * hw + p];
    };
  return out;
}

Var Graph::upsample_to(Var a, size_t h, size_t w) {
  if (a->dims.size() != 3) throw ShapeError("upsample_to: expected (C,H,W)");
  const size_t C = a->dims[0], ih = a->dims[1], iw = a->dims[2];
  Var out = make({C, h, w}, a->needs_grad);
  for (size_t c = 0; c < C; ++c)
    for (size_t y = 0; y < h; ++y) {
      const size_t sy = std::min(y / 2, ih - 1);
      for (size_t x = 0; x < w; ++x) {
        const size_t sx = std::min(x / 2, iw - 1);
        out->val[(c * h + y) * w + x] = a->val[(c * ih + sy) * iw + sx];
      }
    }
  if (out->needs_grad)
    out->backward = [a, out, C, ih, iw, h, w] {
      for (size_t c = 0; c < C; ++c)
        for (size_t y = 0; y < h; ++y) {
          const size_t sy = std::min(y / 2, ih - 1);
          for (size_t x = 0; x < w; ++x) {
            const size_t sx = std::min(x / 2, iw - 1);
            a->grad[(c * ih + sy) * iw + sx] += out->grad[(c * h + y) * w + x];
          }
        }
    };
  return out;
}

Var Graph::reshape(Var a, std::vector<size_t> dims) {
  if (Tensor::count(dims) != a->size()) throw ShapeError("reshape: element count mismatch");
  Var out = make(std::move(dims), a->needs_grad);
  out->val = a->val;
  if (out->needs_grad)
    out->backward = [a, out] {
      for (size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
    };
  return out;
}

Var Graph::add_scalar_broadcast(Var a, Var s) {
  if (s->size() != 1) throw ShapeError("add_scalar_broadcast: scalar operand expected");
  Var out = make(a->dims, a->needs_grad || s->needs_grad);
  for (size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] + s->val[0];
  if (out->needs_grad)
    out->backward = [a, s, out] {
      if (a->needs_grad)
        for (size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
      if (s->needs_grad) {
        double acc = 0;
        for (size_t i = 0; i < out->size(); ++i) acc += out->grad[i];
        s->grad[0] += acc;
      }
    };
  return out;
}

Var Graph::matmul(Var a, Var b) {
  if (a->dims.size() != 2 || b->dims.size() != 2 || a->dims[1] != b->dims[0])
    throw ShapeError("matmul: bad dims " + dims_str(a->dims) + " x " + dims_str(b->dims));
  const size_t m = a->dims[0], k = a->dims[1], n = b->dims[1];
  Var out = make({m, n}, a->needs_grad || b->needs_grad);
  for (size_t i = 0; i < m; ++i)
    for (size_t t = 0; t < k; ++t) {
      const double av = a->val[i * k + t];
      for (size_t j = 0; j < n; ++j) out->val[i * n + j] += av * b->val[t * n + j];
    }
  if (out->needs_grad)
    out->backward = [a, b, out, m, k, n] {
      if (a->needs_grad)
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) {
            const double g = out->grad[i * n + j];
            for (size_t t = 0; t < k; ++t) a->grad[i * k + t] += g * b->val[t * n + j];
          }
      if (b->needs_grad)
        for (size_t i = 0; i < m; ++i)
          for (size_t t = 0; t < k; ++t) {
            const double av = a->val[i * k + t];
            for (size_t j = 0; j < n; ++j) b->grad[t * n + j] += av * out->grad[i * n + j];
          }
    };
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  if (a->dims.size() != 2 || b->dims.size() != 2 || a->dims[1] != b->dims[1])
    throw ShapeError("matmul_nt: bad dims " + dims_str(a->dims) + " x " + dims_str(b->dims));
  const size_t m = a->dims[0], k = a->dims[1], n = b->dims[0];
  Var out = make({m, n}, a->needs_grad || b->needs_grad);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      double s = 0;
      for (size_t t = 0; t < k; ++t) s += a->val[i * k + t] * b->val[j * k + t];
      out->val[i * n + j] = s;
    }
  if (out->needs_grad)
    out->backward = [a, b, out, m, k, n] {
      if (a->needs_grad)
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) {
            const double g = out->grad[i * n + j];
            for (size_t t = 0; t < k; ++t) a->grad[i * k + t] += g * b->val[j * k + t];
          }
      if (b->needs_grad)
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) {
            const double g = out->grad[i * n + j];
            for (size_t t = 0; t < k; ++t) b->grad[j * k + t] += g * a->val[i * k + t];
          }
    };
  return out;
}

Var Graph::matvec(Var w, Var x) {
  if (w->dims.size() != 2 || x->dims.size() != 1 || w->dims[1] != x->dims[0])
    throw ShapeError("matvec: bad dims");
  const size_t m = w->dims[0], n = w->dims[1];
  Var out = make({m}, w->needs_grad || x->needs_grad);
  for (size_t i = 0; i < m; ++i) {
    double s = 0;
    for (size_t j = 0; j < n; ++j) s += w->val[i * n + j] * x->val[j];
    out->val[i] = s;
  }
  if (out->needs_grad)
    out->backward = [w, x, out, m, n] {
      for (size_t i = 0; i < m; ++i) {
        const double g = out->grad[i];
        if (w->needs_grad)
          for (size_t j = 0; j < n; ++j) w->grad[i * n + j] += g * x->val[j];
        if (x->needs_grad)
          for (size_t j = 0; j < n; ++j) x->grad[j] += g * w->val[i * n + j];
      }
    };
  return out;
}

Var Graph::linear_vec(Var w, Var x, Var b) { return add(matvec(w, x), b); }

Var Graph::softmax_rows(Var a) {
  if (a->dims.size() != 2) throw ShapeError("softmax_rows: expected 2-d");
  const size_t m = a->dims[0], n = a->dims[1];
  Var out = make(a->dims, a->needs_grad);
  for (size_t i = 0; i < m; ++i) {
    double mx = a->val[i * n];
    for (size_t j = 1; j < n; ++j) mx = std::max(mx, a->val[i * n + j]);
    double z = 0;
    for (size_t j = 0; j < n; ++j) {
      out->val[i * n + j] = std::exp(a->val[i * n + j] - mx);
      z += out->val[i * n + j];
    }
    for (size_t j = 0; j < n; ++j) out->val[i * n + j] /= z;
  }
  if (out->needs_grad)
    out->backward = [a, out, m, n] {
      for (size_t i = 0; i < m; ++i) {
        double dsum = 0;
        for (size_t j = 0; j < n; ++j) dsum += out->grad[i * n + j] * out->val[i * n + j];
        for (size_t j = 0; j < n; ++j)
          a->grad[i * n + j] += out->val[i * n + j] * (out->grad[i * n + j] - dsum);
      }
    };
  return out;
}

Var Graph::conv2d(Var input, Var weight, Var bias, size_t stride, size_t pad) {
  if (input->dims.size() != 3 || weight->dims.size() != 4 || bias->dims.size() != 1)
    throw ShapeError("conv2d: bad ranks");
  const size_t cin = input->dims[0], H = input->dims[1], W = input->dims[2];
  const size_t cout = weight->dims[0], kh = weight->dims[2], kw = weight->dims[3];
  if (weight->dims[1] != cin || bias->dims[0] != cout)
    throw ShapeError("conv2d: channel mismatch");
  const size_t ho = (H + 2 * pad - kh) / stride + 1;
  const size_t wo = (W + 2 * pad - kw) / stride + 1;
  Var out = make({cout, ho, wo}, input->needs_grad || weight->needs_grad || bias->needs_grad);

  for (size_t co = 0; co < cout; ++co) {
    const double b = bias->val[co];
    double* orow = &out->val[co * ho * wo];
    for (size_t i = 0; i < ho * wo; ++i) orow[i] = b;
  }
  const long sp = static_cast<long>(stride), pd = static_cast<long>(pad);
  for (size_t co = 0; co < cout; ++co) {
    for (size_t ci = 0; ci < cin; ++ci) {
      for (size_t ky = 0; ky < kh; ++ky) {
        for (size_t kx = 0; kx < kw; ++kx) {
          const double wv = weight->val[((co * cin + ci) * kh + ky) * kw + kx];
          if (wv == 0.0) continue;
          // Output x-range where the input index stays in bounds.
          const long offx = static_cast<long>(kx) - pd;
          const long offy = static_cast<long>(ky) - pd;
          const long x0 = std::max<long>(0, (-offx + sp - 1) / sp);
          const long x1 = std::min<long>(static_cast<long>(wo) - 1,
                                         (static_cast<long>(W) - 1 - offx) / sp);
          for (size_t oy = 0; oy < ho; ++oy) {
            const long iy = static_cast<long>(oy) * sp + offy;
            if (iy < 0 || iy >= static_cast<long>(H)) continue;
            const double* irow = &input->val[(ci * H + iy) * W];
            double* orow = &out->val[(co * ho + oy) * wo];
            for (long ox = x0; ox <= x1; ++ox) orow[ox] += wv * irow[ox * sp + offx];
          }
        }
      }
    }
  }

  if (out->needs_grad)
    out->backward = [input, weight, bias, out, cin, H, W, cout, kh, kw, ho, wo, sp, pd] {
      if (bias->needs_grad)
        for (size_t co = 0; co < cout; ++co) {
          double s = 0;
          const double* g = &out->grad[co * ho * wo];
          for (size_t i = 0; i < ho * wo; ++i) s += g[i];
          bias->grad[co] += s;
        }
      for (size_t co = 0; co < cout; ++co) {
        for (size_t ci = 0; ci < cin; ++ci) {
          for (size_t ky = 0; ky < kh; ++ky) {
            for (size_t kx = 0; kx < kw; ++kx) {
              const long offx = static_cast<long>(kx) - pd;
              const long offy = static_cast<long>(ky) - pd;
              const long x0 = std::max<long>(0, (-offx + sp - 1) / sp);
              const long x1 = std::min<long>(static_cast<long>(wo) - 1,
                                             (static_cast<long>(W) - 1 - offx) / sp);
              const double wv = weight->val[((co * cin + ci) * kh + ky) * kw + kx];
              double wg = 0;
              for (size_t oy = 0; oy < ho; ++oy) {
                const long iy = static_cast<long>(oy) * sp + offy;
                if (iy < 0 || iy >= static_cast<long>(H)) continue;
                const double* irow = &input->val[(ci * H + iy) * W];
                double* igrow = input->needs_grad ? &input->grad[(ci * H + iy) * W] : nullptr;
                const double* ogrow = &out->grad[(co * ho + oy) * wo];
                if (weight->needs_grad)
                  for (long ox = x0; ox <= x1; ++ox) wg += ogrow[ox] * irow[ox * sp + offx];
                if (igrow)
                  for (long ox = x0; ox <= x1; ++ox) igrow[ox * sp + offx] += wv * ogrow[ox];
              }
              if (weight->needs_grad)
                weight->grad[((co * cin + ci) * kh + ky) * kw + kx] += wg;
            }
          }
        }
      }
    };
  return out;
}

Var Graph::embedding(Var table, const std::vector<int>& ids) {
  if (table->dims.size() != 2) throw ShapeError("embedding: table must be (V,d)");
  const size_t V = table->dims[0], d = table->dims[1];
  for (int id : ids)
    if (id < 0 || static_cast<size_t>(id) >= V)
      throw UnknownTokenError("token id " + std::to_string(id) + " out of vocabulary");
  Var out = make({ids.size(), d}, table->needs_grad);
  for (size_t t = 0; t < ids.size(); ++t)
    std::copy_n(&table->val[static_cast<size_t>(ids[t]) * d], d, &out->val[t * d]);
  if (out->needs_grad) {
    const std::vector<int> ids_copy = ids;
    out->backward = [table, out, ids_copy, d] {
      for (size_t t = 0; t < ids_copy.size(); ++t)
        for (size_t j = 0; j < d; ++j)
          table->grad[static_cast<size_t>(ids_copy[t]) * d + j] += out->grad[t * d + j];
    };
  }
  return out;
}

Var Graph::mean_rows(Var a) {
  if (a->dims.size() != 2) throw ShapeError("mean_rows: expected 2-d");
  const size_t m = a->dims[0], n = a->dims[1];
  Var out = make({n}, a->needs_grad);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out->val[j] += a->val[i * n + j];
  for (size_t j = 0; j < n; ++j) out->val[j] /= static_cast<double>(m);
  if (out->needs_grad)
    out->backward = [a, out, m, n] {
      for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) a->grad[i * n + j] += out->grad[j] / static_cast<double>(m);
    };
  return out;
}

Var Graph::bce_mean(Var pred, Var target) {
  check_dims(pred->dims, target->dims, "bce_mean");
  const size_t n = pred->size();
  Var out = make({1}, pred->needs_grad);
  double s = 0;
  for (size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pred->val[i], 1e-12, 1.0 - 1e-12);
    const double g = target->val[i];
    s += -(g * std::log(p) + (1.0 - g) * std::log(1.0 - p));
  }
  out->val[0] = s / static_cast<double>(n);
  if (out->needs_grad)
    out->backward = [pred, target, out, n] {
      const double gl = out->grad[0] / static_cast<double>(n);
      for (size_t i = 0; i < n; ++i) {
        const double p = std::clamp(pred->val[i], 1e-12, 1.0 - 1e-12);
        const double g = target->val[i];
        pred->grad[i] += gl * (-(g / p) + (1.0 - g) / (1.0 - p));
      }
    };
  return out;
}

Var Graph::weighted_smooth_l1_mean(Var pred, Var target, Var q_gt, double alpha, double beta) {
  check_dims(pred->dims, target->dims, "weighted_smooth_l1");
  if (pred->size() != q_gt->size()) throw ShapeError("weighted_smooth_l1: q_gt size mismatch");
  if (!(beta > 0)) throw ConfigError("smooth-l1 beta must be positive");
  const size_t n = pred->size();
  Var out = make({1}, pred->needs_grad);
  double s = 0;
  for (size_t i = 0; i < n; ++i) {
    const double r = pred->val[i] - target->val[i];
    const double w = 1.0 + alpha * q_gt->val[i];
    const double base = std::abs(r) < beta ? r * r / (2.0 * beta) : std::abs(r) - beta / 2.0;
    s += w * base;
  }
  out->val[0] = s / static_cast<double>(n);
  if (out->needs_grad)
    out->backward = [pred, target, q_gt, out, alpha, beta, n] {
      const double gl = out->grad[0] / static_cast<double>(n);
      for (size_t i = 0; i < n; ++i) {
        const double r = pred->val[i] - target->val[i];
        const double w = 1.0 + alpha * q_gt->val[i];
        const double d = std::abs(r) < beta ? r / beta : (r > 0 ? 1.0 : -1.0);
        pred->grad[i] += gl * w * d;
      }
    };
  return out;
}

Var Graph::weighted_sum(const std::vector<std::pair<Var, double>>& terms) {
  bool needs = false;
  for (const auto& [v, w] : terms) {
    if (v->size() != 1) throw ShapeError("weighted_sum: terms must be scalars");
    needs = needs || v->needs_grad;
  }
  Var out = make({1}, needs);
  for (const auto& [v, w] : terms) out->val[0] += v->val[0] * w;
  if (out->needs_grad) {
    const auto terms_copy = terms;
    out->backward = [out, terms_copy] {
      for (const auto& [v, w] : terms_copy)
        if (v->needs_grad) v->grad[0] += out->grad[0] * w;
    };
  }
  return out;
}

Var Graph::channel(Var a, size_t c) {
  if (a->dims.size() != 3 || c >= a->dims[0]) throw ShapeError("channel: bad index");
  const size_t hw = a->dims[1] * a->dims[2];
  Var out = make({1, a->dims[1], a->dims[2]}, a->needs_grad);
  std::copy_n(&a->val[c * hw], hw, out->val.data());
  if (out->needs_grad)
    out->backward = [a, out, c, hw] {
      for (size_t p = 0; p < hw; ++p) a->grad[c * hw + p] += out->grad[p];
    };
  return out;
}

void Graph::backward(Var loss) {
  if (loss == nullptr || loss->size() != 1)
    throw GraphError("backward requires a scalar loss node");
  if (!loss->needs_grad)
    throw GraphError("loss does not depend on any parameter");
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->needs_grad && n->backward) n->backward();
  }
}

}  // namespace grasptk
