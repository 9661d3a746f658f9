#pragma once

#include <vector>

#include "gada/autodiff.hpp"

namespace gada {

struct OptConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool nesterov = true;
};

/// SGD with Nesterov momentum and decoupled per-parameter weight-decay
/// opt-out (Parameter::decay). Update, per coordinate:
///   g = grad + wd * value      (wd only when the parameter decays)
///   v = momentum * v + g
///   value -= lr * (nesterov ? g + momentum * v : v)
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<Parameter*> params, OptConfig cfg);

  void zero_grad();
  void step();

  const OptConfig& config() const { return cfg_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> velocity_;
  OptConfig cfg_;
};

}  // namespace gada
