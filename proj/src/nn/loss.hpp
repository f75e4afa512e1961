#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace lyapnet {

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // d loss / d logits
};

// Mean softmax cross-entropy over the batch; grad = (softmax - onehot)/batch.
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& logits, const std::vector<std::uint8_t>& labels) {
  if (logits.rank() != 2) raise(ErrorCode::Shape, "cross_entropy: (batch, classes) logits required");
  const std::size_t n = logits.shape[0], k = logits.shape[1];
  if (labels.size() != n) raise(ErrorCode::Input, "cross_entropy: label count mismatch");
  logits.ensure_finite("cross_entropy");
  LossResult<T> r;
  r.grad = Tensor<T>::zeros(logits.shape);
  if (n == 0) return r;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= k)
      raise(ErrorCode::Input, "cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range for " + std::to_string(k) + " classes");
    const T* row = logits.data.data() + i * k;
    double mx = static_cast<double>(row[0]);
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    const double logz = std::log(z) + mx;
    total += logz - static_cast<double>(row[labels[i]]);
    T* g = r.grad.data.data() + i * k;
    for (std::size_t j = 0; j < k; ++j)
      g[j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - logz) / static_cast<double>(n));
    g[labels[i]] -= static_cast<T>(1.0 / static_cast<double>(n));
  }
  r.loss = total / static_cast<double>(n);
  return r;
}

template <typename T>
std::size_t argmax_row(const Tensor<T>& logits, std::size_t row) {
  const std::size_t k = logits.shape[1];
  const T* p = logits.data.data() + row * k;
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (p[j] > p[best]) best = j;
  return best;
}

}  // namespace lyapnet
