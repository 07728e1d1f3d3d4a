#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "grasptk/errors.hpp"

namespace grasptk {

// Dense f64 tensor with a gradient buffer of the same shape.
struct Tensor {
  std::vector<size_t> dims;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> d, double fill = 0.0)
      : dims(std::move(d)),
        values(count(dims), fill),
        grad(count(dims), 0.0) {}

  static size_t count(const std::vector<size_t>& d) {
    size_t n = 1;
    for (size_t x : d) n *= x;
    return n;
  }

  size_t size() const { return values.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  double& operator[](size_t i) { return values[i]; }
  double operator[](size_t i) const { return values[i]; }
};

inline std::string dims_str(const std::vector<size_t>& d) {
  std::string s = "(";
  for (size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
  return s + ")";
}

inline void check_dims(const std::vector<size_t>& a, const std::vector<size_t>& b,
                       const char* what) {
  if (a != b)
    throw ShapeError(std::string(what) + ": shape mismatch " + dims_str(a) + " vs " + dims_str(b));
}

}  // namespace grasptk
