#include "gada/optim.hpp"

namespace gada {

SgdOptimizer::SgdOptimizer(std::vector<Parameter*> params, OptConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  require(cfg_.learning_rate >= 0.0 && cfg_.momentum >= 0.0 &&
              cfg_.weight_decay >= 0.0,
          "sgd: negative hyperparameter");
  velocity_.reserve(params_.size());
  for (Parameter* p : params_) {
    require(p != nullptr, "sgd: null parameter");
    velocity_.emplace_back(p->value.shape);
  }
}

void SgdOptimizer::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void SgdOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Tensor& v = velocity_[i];
    for (Index j = 0; j < p.value.numel(); ++j) {
      double g = p.grad.at(j);
      if (p.decay) g += cfg_.weight_decay * p.value.at(j);
      const double vel = cfg_.momentum * v.at(j) + g;
      v.at(j) = vel;
      const double eff = cfg_.nesterov ? g + cfg_.momentum * vel : vel;
      p.value.at(j) -= cfg_.learning_rate * eff;
    }
  }
}

}  // namespace gada
