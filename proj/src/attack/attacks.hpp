#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nn/loss.hpp"
#include "nn/model.hpp"
#include "nn/optimizer.hpp"
#include "reg/regularizer.hpp"

namespace lyapnet {

enum class AttackKind { Fgm, Pgd };

struct AttackConfig {
  AttackKind kind = AttackKind::Pgd;
  double eps = 0.0;
  std::size_t k = 100;         // PGD iterations
  double alpha_ratio = 0.02;   // PGD step / eps
  bool clip_box = false;       // optional clamp to [-0.5, 0.5] pixel range
  std::uint64_t seed = 0;

  void validate() const {
    if (eps < 0.0) raise(ErrorCode::Config, "attack eps must be >= 0");
    if (kind == AttackKind::Pgd && k == 0) raise(ErrorCode::Config, "PGD needs k >= 1");
    if (alpha_ratio <= 0.0) raise(ErrorCode::Config, "alpha_ratio must be positive");
  }
};

namespace detail {

// Per-sample row norms of a (N, D...) batch flattened per sample.
template <typename T>
double sample_norm(const Tensor<T>& t, std::size_t row, std::size_t dim) {
  const T* p = t.data.data() + row * dim;
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) acc += static_cast<double>(p[i]) * static_cast<double>(p[i]);
  return std::sqrt(acc);
}

template <typename T>
Tensor<T> input_gradient(const Model<T>& model, const Tensor<T>& x,
                         const std::vector<std::uint8_t>& y) {
  ModelCache<T> cache;
  const Tensor<T> logits = model.forward(x, &cache);
  const LossResult<T> loss = cross_entropy(logits, y);
  return model.backward(cache, loss.grad, nullptr);
}

template <typename T>
void clip_to_box(Tensor<T>& x) {
  for (auto& v : x.data) v = std::min<T>(T(0.5), std::max<T>(T(-0.5), v));
}

}  // namespace detail

// Nearest point of the eps-ball: unchanged inside, rescaled onto the sphere
// outside.
template <typename T>
Tensor<T> project_l2_ball(const Tensor<T>& delta, double eps) {
  if (eps < 0.0) raise(ErrorCode::Config, "project_l2_ball: eps must be >= 0");
  const double n = norm2(delta);
  if (n <= eps) return delta;
  Tensor<T> out = delta;
  const T f = static_cast<T>(n > 0.0 ? eps / n : 0.0);
  for (auto& v : out.data) v *= f;
  return out;
}

// One normalized gradient step of size eps per sample. Zero-gradient samples
// are returned unchanged.
template <typename T>
Tensor<T> fgm_l2(const Model<T>& model, const Tensor<T>& x, const std::vector<std::uint8_t>& y,
                 double eps, bool clip_box = false) {
  if (eps < 0.0) raise(ErrorCode::Config, "fgm_l2: eps must be >= 0");
  if (eps == 0.0) return x;
  const Tensor<T> g = detail::input_gradient(model, x, y);
  const std::size_t n = x.shape[0];
  const std::size_t dim = n > 0 ? x.numel() / n : 0;
  Tensor<T> adv = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double gn = detail::sample_norm(g, i, dim);
    if (gn == 0.0) continue;
    const T f = static_cast<T>(eps / gn);
    T* out = adv.data.data() + i * dim;
    const T* gp = g.data.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) out[j] += f * gp[j];
  }
  if (clip_box) detail::clip_to_box(adv);
  return adv;
}

// Iterative normalized ascent with per-iterate projection onto the eps-ball
// around the clean batch. Starts at the clean point (no random start).
template <typename T>
Tensor<T> pgd_l2(const Model<T>& model, const Tensor<T>& x, const std::vector<std::uint8_t>& y,
                 const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.eps == 0.0) return x;
  const double alpha = cfg.alpha_ratio * cfg.eps;
  const std::size_t n = x.shape[0];
  const std::size_t dim = n > 0 ? x.numel() / n : 0;
  Tensor<T> adv = x;
  for (std::size_t it = 0; it < cfg.k; ++it) {
    const Tensor<T> g = detail::input_gradient(model, adv, y);
    for (std::size_t i = 0; i < n; ++i) {
      const double gn = detail::sample_norm(g, i, dim);
      if (gn == 0.0) continue;
      const T f = static_cast<T>(alpha / gn);
      T* out = adv.data.data() + i * dim;
      const T* gp = g.data.data() + i * dim;
      const T* clean = x.data.data() + i * dim;
      double dn = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        out[j] += f * gp[j];
        const double d = static_cast<double>(out[j]) - static_cast<double>(clean[j]);
        dn += d * d;
      }
      dn = std::sqrt(dn);
      if (dn > cfg.eps) {
        const T s = static_cast<T>(cfg.eps / dn);
        for (std::size_t j = 0; j < dim; ++j)
          out[j] = clean[j] + s * (out[j] - clean[j]);
      }
    }
    if (cfg.clip_box) detail::clip_to_box(adv);
  }
  return adv;
}

template <typename T>
Tensor<T> run_attack(const Model<T>& model, const Tensor<T>& x, const std::vector<std::uint8_t>& y,
                     const AttackConfig& cfg) {
  return cfg.kind == AttackKind::Fgm ? fgm_l2(model, x, y, cfg.eps, cfg.clip_box)
                                     : pgd_l2(model, x, y, cfg);
}

// Attack the batch, train on the adversarial examples, then re-apply the
// spectral constraints.
template <typename T>
void adversarial_train_step(Model<T>& model, const Tensor<T>& x, const std::vector<std::uint8_t>& y,
                            const AttackConfig& attack, Optimizer<T>& opt,
                            const RegularizerConfig& reg, Rng& rng) {
  const Tensor<T> adv = run_attack(model, x, y, attack);
  ModelCache<T> cache;
  const Tensor<T> logits = model.forward(adv, &cache);
  const LossResult<T> loss = cross_entropy(logits, y);
  std::vector<ParamGrad<T>> grads;
  model.backward(cache, loss.grad, &grads);
  opt.step(model, grads);
  apply_constraints(model, reg, rng);
}

}  // namespace lyapnet
