#include "rega/optimizer.hpp"

#include <cmath>

#include "rega/error.hpp"

namespace rega {

double lr_at(const SgdConfig& cfg, int epoch) {
  if (epoch < 0) throw ValueError("lr_at: negative epoch");
  if (cfg.lr_step < 1) throw ValueError("lr_at: lr_step must be >= 1");
  return cfg.lr * std::pow(10.0, -static_cast<double>(epoch / cfg.lr_step));
}

void Sgd::step(int epoch) {
  std::string missing;
  for (const auto& e : params_->entries()) {
    if (e.trainable && !e.tensor.has_grad()) {
      if (!missing.empty()) missing += ", ";
      missing += e.name;
    }
  }
  if (!missing.empty()) throw Error("sgd_step: missing grads for: " + missing);

  const double lr = lr_at(cfg_, epoch);
  const double mu = cfg_.momentum;
  const double wd = cfg_.weight_decay;
  for (const auto& e : params_->entries()) {
    if (!e.trainable) continue;
    std::vector<double>& w = e.tensor.mutable_data();
    const std::vector<double>& g = e.tensor.grad();
    std::vector<double>& v = velocity_[e.name];
    if (v.empty()) v.assign(w.size(), 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = mu * v[k] + (g[k] + wd * w[k]);
      w[k] -= lr * v[k];
      if (w[k] < e.clamp_lo) w[k] = e.clamp_lo;
      if (w[k] > e.clamp_hi) w[k] = e.clamp_hi;
    }
    e.tensor.zero_grad();
  }
}

}  // namespace rega
