#include "grasptk/optimizer.hpp"

#include <cmath>

namespace grasptk {

void Optimizer::step(ModelParams& params, const std::set<std::string>& frozen) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params.items) {
    if (frozen.count(name)) continue;
    if (cfg_.type == OptimType::Sgd) {
      for (size_t i = 0; i < p.size(); ++i) p.values[i] -= cfg_.lr * p.grad[i];
    } else {
      auto& [m, v] = state_[name];
      if (m.size() != p.size()) {
        m.assign(p.size(), 0.0);
        v.assign(p.size(), 0.0);
      }
      for (size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p.values[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
    p.zero_grad();
  }
  // Frozen params keep accumulated grads out of the next step as well.
  for (auto& [name, p] : params.items)
    if (frozen.count(name)) p.zero_grad();
}

std::vector<ContainerEntry> Optimizer::state_entries() const {
  std::vector<ContainerEntry> out;
  for (const auto& [name, mv] : state_) {
    const auto& [m, v] = mv;
    out.push_back(ContainerEntry::from_f64("adam.m." + name,
                                           {static_cast<uint32_t>(m.size())}, m));
    out.push_back(ContainerEntry::from_f64("adam.v." + name,
                                           {static_cast<uint32_t>(v.size())}, v));
  }
  return out;
}

void Optimizer::load_state(const std::vector<ContainerEntry>& entries) {
  state_.clear();
  for (const auto& e : entries) {
    if (e.name.starts_with("adam.m."))
      state_[e.name.substr(7)].first = e.as_f64();
    else if (e.name.starts_with("adam.v."))
      state_[e.name.substr(7)].second = e.as_f64();
  }
}

}  // namespace grasptk
