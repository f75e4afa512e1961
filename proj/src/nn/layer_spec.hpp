#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/tensor.hpp"

namespace lyapnet {

enum class LayerKind : std::uint32_t {
  Dense = 1,
  Conv = 2,
  LeakyReLU = 3,
  MaxPool = 4,
  AvgPool = 5,
  Flatten = 6,
  Residual = 7,
};

// Declarative layer description; the model builder turns a list of these into
// runnable layers and checks that consecutive shapes compose.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  // Dense
  std::size_t in = 0, out = 0;
  // Conv
  std::size_t out_ch = 0, in_ch = 0, kh = 0, kw = 0, stride = 1, pad = 0;
  // LeakyReLU; slope in (0, 1], 1 degenerates to identity
  double slope = 0.01;
  // Pools
  std::size_t window = 2;
  // Residual branch
  std::vector<LayerSpec> branch;

  static LayerSpec dense(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in = in;
    s.out = out;
    return s;
  }
  static LayerSpec conv(std::size_t out_ch, std::size_t in_ch, std::size_t kh, std::size_t kw,
                        std::size_t stride = 1, std::size_t pad = 0) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.out_ch = out_ch;
    s.in_ch = in_ch;
    s.kh = kh;
    s.kw = kw;
    s.stride = stride;
    s.pad = pad;
    return s;
  }
  static LayerSpec leaky_relu(double slope) {
    LayerSpec s;
    s.kind = LayerKind::LeakyReLU;
    s.slope = slope;
    return s;
  }
  static LayerSpec max_pool(std::size_t window) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.window = window;
    return s;
  }
  static LayerSpec avg_pool(std::size_t window) {
    LayerSpec s;
    s.kind = LayerKind::AvgPool;
    s.window = window;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
  }
  static LayerSpec residual(std::vector<LayerSpec> branch) {
    LayerSpec s;
    s.kind = LayerKind::Residual;
    s.branch = std::move(branch);
    return s;
  }

  void validate() const {
    switch (kind) {
      case LayerKind::Dense:
        if (in == 0 || out == 0) raise(ErrorCode::Config, "dense layer needs in/out > 0");
        break;
      case LayerKind::Conv:
        if (out_ch == 0 || in_ch == 0 || kh == 0 || kw == 0 || stride == 0)
          raise(ErrorCode::Config, "conv layer needs positive channels/kernel/stride");
        break;
      case LayerKind::LeakyReLU:
        if (!(slope > 0.0 && slope <= 1.0))
          raise(ErrorCode::Config, "leaky_relu slope must be in (0, 1], got " +
                                       std::to_string(slope));
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        if (window == 0) raise(ErrorCode::Config, "pool window must be positive");
        break;
      case LayerKind::Flatten:
        break;
      case LayerKind::Residual:
        if (branch.empty()) raise(ErrorCode::Config, "residual block needs a branch");
        for (const auto& b : branch) b.validate();
        break;
    }
  }
};

}  // namespace lyapnet
