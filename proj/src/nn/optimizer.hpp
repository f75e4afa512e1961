#pragma once

#include <cmath>
#include <vector>

#include "nn/model.hpp"

namespace lyapnet {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double momentum = 0.0;   // SGD
  double beta1 = 0.9;      // Adam
  double beta2 = 0.999;    // Adam
  double eps = 1e-8;       // Adam
  double weight_decay = 0.0;
};

// SGD with momentum: v <- mu v - lr (g + wd w); w <- w + v.
// Adam: decay is added to the gradient before the moment updates, then the
// usual bias-corrected moment step.
template <typename T>
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, Model<T>& model) : cfg_(cfg) {
    for (auto& p : model.params()) {
      slot(m1_, *p.layer);
      slot(m2_, *p.layer);
    }
  }

  const OptimizerConfig& config() const { return cfg_; }
  std::size_t step_count() const { return t_; }

  void step(Model<T>& model, const std::vector<ParamGrad<T>>& grads) {
    auto& params = model.params();
    if (grads.size() != params.size())
      raise(ErrorCode::Shape, "optimizer step: gradient count mismatch");
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!grads[i].weight.all_finite() || !grads[i].bias.all_finite())
        raise(ErrorCode::Numeric, "optimizer step: non-finite gradient at " + params[i].name);
      update(*params[i].layer->weight(), grads[i].weight, m1_[2 * i], m2_[2 * i], true);
      update(*params[i].layer->bias(), grads[i].bias, m1_[2 * i + 1], m2_[2 * i + 1], false);
    }
  }

 private:
  void slot(std::vector<Tensor<T>>& store, Layer<T>& l) {
    store.push_back(Tensor<T>::zeros(l.weight()->shape));
    store.push_back(Tensor<T>::zeros(l.bias()->shape));
  }

  void update(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& m1, Tensor<T>& m2, bool decay) {
    if (g.shape != w.shape) raise(ErrorCode::Shape, "optimizer step: gradient shape mismatch");
    const double wd = decay ? cfg_.weight_decay : 0.0;
    if (cfg_.kind == OptimizerKind::Sgd) {
      for (std::size_t j = 0; j < w.data.size(); ++j) {
        const double gj = static_cast<double>(g.data[j]) + wd * static_cast<double>(w.data[j]);
        const double v = cfg_.momentum * static_cast<double>(m1.data[j]) - cfg_.lr * gj;
        m1.data[j] = static_cast<T>(v);
        w.data[j] = static_cast<T>(static_cast<double>(w.data[j]) + v);
      }
    } else {
      const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t j = 0; j < w.data.size(); ++j) {
        const double gj = static_cast<double>(g.data[j]) + wd * static_cast<double>(w.data[j]);
        const double m = cfg_.beta1 * static_cast<double>(m1.data[j]) + (1.0 - cfg_.beta1) * gj;
        const double v = cfg_.beta2 * static_cast<double>(m2.data[j]) + (1.0 - cfg_.beta2) * gj * gj;
        m1.data[j] = static_cast<T>(m);
        m2.data[j] = static_cast<T>(v);
        w.data[j] = static_cast<T>(static_cast<double>(w.data[j]) -
                                   cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps));
      }
    }
  }

  OptimizerConfig cfg_;
  std::vector<Tensor<T>> m1_, m2_;
  std::size_t t_ = 0;
};

}  // namespace lyapnet
