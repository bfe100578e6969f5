#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "rega/params.hpp"

namespace rega {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int lr_step = 30;  // epochs between /10 decays
};

double lr_at(const SgdConfig& cfg, int epoch);

// Classic momentum SGD over a ParamRegistry:
//   v <- mu*v + (g + wd*w);  w <- w - lr(epoch)*v
// The step owns grad zeroing and applies any per-entry clamp window.
class Sgd {
 public:
  Sgd(ParamRegistry& params, SgdConfig cfg) : params_(&params), cfg_(cfg) {}

  void step(int epoch);
  const SgdConfig& config() const { return cfg_; }

 private:
  ParamRegistry* params_;
  SgdConfig cfg_;
  std::unordered_map<std::string, std::vector<double>> velocity_;
};

}  // namespace rega
