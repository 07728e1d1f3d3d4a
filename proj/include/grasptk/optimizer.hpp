#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "grasptk/container.hpp"
#include "grasptk/model.hpp"

namespace grasptk {

enum class OptimType { Sgd, Adam };

struct OptimConfig {
  OptimType type = OptimType::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
public:
  explicit Optimizer(OptimConfig cfg) : cfg_(cfg) {}

  // Applies one update from the accumulated grads, then zeroes them.
  // Frozen parameters are left untouched (values, grads and state).
  void step(ModelParams& params, const std::set<std::string>& frozen = {});

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }

  // Adam moment state for resumable checkpoints.
  std::vector<ContainerEntry> state_entries() const;
  void load_state(const std::vector<ContainerEntry>& entries);

private:
  OptimConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> state_;
};

}  // namespace grasptk
