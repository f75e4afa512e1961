#pragma once

#include "attack/attacks.hpp"
#include "data/dataset.hpp"
#include "harness/parallel.hpp"

namespace lyapnet {

// Evaluation fans out over fixed 256-sample chunks; per-sample numbers are
// independent of the worker count and merged in dataset order.
inline constexpr std::size_t kEvalChunk = 256;

template <typename T>
double clean_accuracy(const Model<T>& model, const Dataset& data) {
  if (data.size() == 0) raise(ErrorCode::Input, "clean_accuracy: empty dataset");
  std::vector<std::uint8_t> correct(data.size(), 0);
  parallel_chunks(data.size(), kEvalChunk, [&](std::size_t lo, std::size_t hi) {
    const auto x = cast_tensor<T>(data.slice(lo, hi));
    const auto logits = model.forward(x);
    for (std::size_t i = lo; i < hi; ++i)
      correct[i] = argmax_row(logits, i - lo) == data.labels[i] ? 1 : 0;
  });
  std::size_t hits = 0;
  for (auto c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Fraction of samples still classified correctly after the attack.
template <typename T>
double robust_accuracy(const Model<T>& model, const Dataset& data, const AttackConfig& cfg) {
  if (data.size() == 0) raise(ErrorCode::Input, "robust_accuracy: empty dataset");
  cfg.validate();
  std::vector<std::uint8_t> correct(data.size(), 0);
  parallel_chunks(data.size(), kEvalChunk, [&](std::size_t lo, std::size_t hi) {
    const auto x = cast_tensor<T>(data.slice(lo, hi));
    const auto y = data.label_slice(lo, hi);
    const auto adv = run_attack(model, x, y, cfg);
    const auto logits = model.forward(adv);
    for (std::size_t i = lo; i < hi; ++i)
      correct[i] = argmax_row(logits, i - lo) == data.labels[i] ? 1 : 0;
  });
  std::size_t hits = 0;
  for (auto c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Mean l2 distance between the model's final activations on clean and
// attacked inputs, averaged over the dataset.
template <typename T>
double measure_deviation(const Model<T>& model, const Dataset& data, const AttackConfig& cfg) {
  if (data.size() == 0) raise(ErrorCode::Input, "measure_deviation: empty dataset");
  cfg.validate();
  if (cfg.eps == 0.0) return 0.0;
  std::vector<double> dev(data.size(), 0.0);
  parallel_chunks(data.size(), kEvalChunk, [&](std::size_t lo, std::size_t hi) {
    const auto x = cast_tensor<T>(data.slice(lo, hi));
    const auto y = data.label_slice(lo, hi);
    const auto clean = model.forward(x);
    const auto adv = run_attack(model, x, y, cfg);
    const auto attacked = model.forward(adv);
    const std::size_t n = hi - lo;
    const std::size_t dim = n > 0 ? clean.numel() / n : 0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = static_cast<double>(attacked.data[i * dim + j]) -
                         static_cast<double>(clean.data[i * dim + j]);
        acc += d * d;
      }
      dev[lo + i] = std::sqrt(acc);
    }
  });
  double total = 0.0;
  for (double v : dev) total += v;
  return total / static_cast<double>(data.size());
}

}  // namespace lyapnet
