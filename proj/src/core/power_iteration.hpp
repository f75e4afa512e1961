#pragma once

#include <cmath>
#include <optional>

#include "core/linop.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace lyapnet {

// Persisted singular-vector pair. `v` lives in the operator's input space,
// `u` in its output space; reusing the pair warm-starts the next estimate.
template <typename T>
struct PowerState {
  Tensor<T> v;
  Tensor<T> u;
};

template <typename T>
PowerState<T> random_power_state(const LinearOperator<T>& op, Rng& rng) {
  PowerState<T> s;
  s.v = Tensor<T>::zeros(op.in_shape());
  s.u = Tensor<T>::zeros(op.out_shape());
  for (auto& x : s.v.data) x = static_cast<T>(rng.normal());
  double n = norm2(s.v);
  if (n > 0)
    for (auto& x : s.v.data) x = static_cast<T>(x / n);
  return s;
}

// Largest-singular-value estimate by alternating application of the operator
// and its adjoint. The returned value is ||op(v)|| for a unit v, so it never
// exceeds sigma_max beyond round-off. `tol` stops early once the estimate
// stagnates; pass tol = 0 to always run `iters` rounds.
template <typename T>
double power_iteration(const LinearOperator<T>& op, std::size_t iters, double tol,
                       PowerState<T>& state, Rng* restart_rng = nullptr) {
  if (shape_numel(op.in_shape()) == 0 || shape_numel(op.out_shape()) == 0)
    raise(ErrorCode::Shape, "power_iteration: operator with empty shape");
  if (state.v.shape != op.in_shape())
    raise(ErrorCode::Shape, "power_iteration: state does not match operator input shape");

  double sigma = 0.0;
  double prev = -1.0;
  for (std::size_t it = 0; it < iters; ++it) {
    Tensor<T> u = op.apply(state.v);
    double un = norm2(u);
    if (!std::isfinite(un))
      raise(ErrorCode::Numeric, "power_iteration: non-finite value");
    if (un == 0.0) {
      // v landed in the null space; restart from a fresh random direction.
      if (restart_rng != nullptr) {
        bool recovered = false;
        for (int attempt = 0; attempt < 3 && !recovered; ++attempt) {
          state = random_power_state(op, *restart_rng);
          u = op.apply(state.v);
          un = norm2(u);
          recovered = un > 0.0;
        }
      }
      if (un == 0.0) {
        state.u = Tensor<T>::zeros(op.out_shape());
        return 0.0;
      }
    }
    for (auto& x : u.data) x = static_cast<T>(x / un);
    Tensor<T> v = op.adjoint(u);
    const double vn = norm2(v);
    if (!std::isfinite(vn))
      raise(ErrorCode::Numeric, "power_iteration: non-finite value");
    if (vn == 0.0) {
      state.u = std::move(u);
      return un;
    }
    for (auto& x : v.data) x = static_cast<T>(x / vn);
    state.v = std::move(v);
    state.u = std::move(u);
    // With unit u and v, <u, A v> is the Rayleigh estimate of sigma_max.
    sigma = dot(state.u, op.apply(state.v));
    if (tol > 0.0 && prev >= 0.0 && std::abs(sigma - prev) <= tol * std::max(sigma, 1e-30))
      break;
    prev = sigma;
  }
  return sigma;
}

// Convenience overload: fresh seeded state.
template <typename T>
double power_iteration(const LinearOperator<T>& op, std::size_t iters, double tol,
                       std::uint64_t seed) {
  Rng rng(seed);
  PowerState<T> st = random_power_state(op, rng);
  return power_iteration(op, iters, tol, st, &rng);
}

}  // namespace lyapnet
