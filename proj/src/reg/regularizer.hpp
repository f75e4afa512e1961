#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "core/conv.hpp"
#include "core/linop.hpp"
#include "core/power_iteration.hpp"
#include "nn/model.hpp"

namespace lyapnet {

enum class RegularizerMode { Projection, Off };
enum class CapSemantics { Sigma, SigmaSquared };

struct RegularizerConfig {
  RegularizerMode mode = RegularizerMode::Projection;
  CapSemantics semantics = CapSemantics::Sigma;
  std::vector<double> per_layer_beta;         // one per parameterized layer
  std::optional<double> uniform_beta;         // constant-beta baseline override
  std::size_t train_power_iters = 1;
  std::size_t cert_power_iters = 100;
  double tol = 1e-3;

  double beta_for(std::size_t layer_index) const {
    if (uniform_beta) return *uniform_beta;
    return per_layer_beta.at(layer_index);
  }

  void validate(std::size_t param_layers) const {
    if (uniform_beta) {
      if (*uniform_beta <= 0.0) raise(ErrorCode::Config, "uniform_beta must be positive");
      return;
    }
    if (mode == RegularizerMode::Off) return;
    if (per_layer_beta.size() != param_layers)
      raise(ErrorCode::Config, "regularizer has " + std::to_string(per_layer_beta.size()) +
                                   " betas for " + std::to_string(param_layers) +
                                   " parameterized layers");
    for (double b : per_layer_beta)
      if (b <= 0.0) raise(ErrorCode::Config, "per-layer beta must be positive");
  }
};

// The layer's linear map (bias excluded) as an operator, for norm estimation.
template <typename T>
std::unique_ptr<LinearOperator<T>> layer_operator(const ParamRef<T>& p) {
  if (p.layer->kind() == LayerKind::Dense) {
    return std::make_unique<MatrixOperator<T>>(*p.layer->weight());
  }
  if (p.layer->kind() == LayerKind::Conv) {
    auto* conv = static_cast<ConvLayer<T>*>(p.layer);
    if (p.in_sample_shape.size() != 3)
      raise(ErrorCode::Shape, "conv layer operator needs a resolved (C,H,W) input shape");
    return std::make_unique<ConvOperator<T>>(*p.layer->weight(),
                                             conv->geometry(p.in_sample_shape[1], p.in_sample_shape[2]));
  }
  raise(ErrorCode::Config, "layer has no linear operator");
}

// sigma_max estimate for one dense/conv layer with a persisted state.
template <typename T>
double estimate_layer_sigma(const ParamRef<T>& p, PowerState<T>& state, std::size_t iters,
                            double tol, Rng& rng) {
  p.layer->weight()->ensure_finite("estimate_layer_sigma");
  auto op = layer_operator(p);
  if (state.v.shape != op->in_shape()) state = random_power_state(*op, rng);
  return power_iteration(*op, iters, tol, state, &rng);
}

// Rescales the weights when the measured norm exceeds the cap. Bias is left
// alone. Under SigmaSquared semantics the cap applies to sigma^2, so the
// threshold on sigma is sqrt(beta).
template <typename T>
bool project_layer(Layer<T>& layer, double beta, double sigma, CapSemantics semantics) {
  if (beta <= 0.0) raise(ErrorCode::Config, "project_layer: beta must be positive");
  const double threshold = semantics == CapSemantics::Sigma ? beta : std::sqrt(beta);
  if (sigma <= threshold || sigma == 0.0) return false;
  const T factor = static_cast<T>(threshold / sigma);
  for (auto& v : layer.weight()->data) v *= factor;
  return true;
}

// One enforcement pass over every parameterized layer with the training-time
// iteration budget; power-iteration states persist across calls.
template <typename T>
void apply_constraints(Model<T>& model, const RegularizerConfig& cfg, Rng& rng) {
  if (cfg.mode == RegularizerMode::Off) return;
  auto& params = model.params();
  cfg.validate(params.size());
  auto& states = model.power_states();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double sigma = estimate_layer_sigma(params[i], states[i], cfg.train_power_iters,
                                              0.0, rng);
    project_layer(*params[i].layer, cfg.beta_for(i), sigma, cfg.semantics);
  }
}

// Certification-grade pass: re-estimates with the full iteration budget in
// double precision, projects, and repeats until the re-estimate is under
// beta * (1 + tol). Used at epoch boundaries and before reports.
template <typename T>
std::vector<double> enforce_and_measure(Model<T>& model, const RegularizerConfig& cfg, Rng& rng) {
  auto& params = model.params();
  if (cfg.mode != RegularizerMode::Off) cfg.validate(params.size());
  std::vector<double> sigmas(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double sigma = 0.0;
    for (int round = 0; round < 8; ++round) {
      const Tensor<double> w = cast_tensor<double>(*params[i].layer->weight());
      std::unique_ptr<LinearOperator<double>> op;
      if (params[i].layer->kind() == LayerKind::Dense) {
        op = std::make_unique<MatrixOperator<double>>(w);
      } else {
        auto* conv = static_cast<ConvLayer<T>*>(params[i].layer);
        Tensor<double> k = w;
        op = std::make_unique<ConvOperator<double>>(
            std::move(k), conv->geometry(params[i].in_sample_shape[1], params[i].in_sample_shape[2]));
      }
      PowerState<double> st = random_power_state(*op, rng);
      sigma = power_iteration(*op, cfg.cert_power_iters, 0.0, st, &rng);
      if (cfg.mode == RegularizerMode::Off) break;
      const double beta = cfg.beta_for(i);
      const double threshold = cfg.semantics == CapSemantics::Sigma ? beta : std::sqrt(beta);
      if (sigma <= threshold * (1.0 + cfg.tol * 0.5)) break;
      project_layer(*params[i].layer, beta, sigma, cfg.semantics);
    }
    sigmas[i] = sigma;
  }
  return sigmas;
}

}  // namespace lyapnet
