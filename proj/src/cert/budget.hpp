#pragma once

#include <string>
#include <vector>

#include "core/error.hpp"

namespace lyapnet {

// Per-layer Lyapunov pair. delta * nu <= 0.25 always; delta > 0 is required
// wherever a layer is actually trained robustly (the spectral cap needs it).
struct LayerBudget {
  double delta = 0.0;
  double nu = 0.0;

  void validate() const {
    if (delta * nu > 0.25 + 1e-12)
      raise(ErrorCode::Budget, "layer budget violates delta*nu <= 0.25 (got " +
                                   std::to_string(delta * nu) + ")");
  }
};

// Network-level Lyapunov pair; a positive delta yields the finite gain 1/delta.
struct GlobalBudget {
  double delta = 0.0;
  double nu = 0.0;

  double gain() const {
    if (delta <= 0.0) raise(ErrorCode::Budget, "global budget requires delta > 0");
    return 1.0 / delta;
  }

  void validate() const {
    if (delta <= 0.0) raise(ErrorCode::Budget, "global budget requires delta > 0");
    if (nu <= 0.0) raise(ErrorCode::Budget, "global budget requires nu > 0");
  }
};

using Budgets = std::vector<LayerBudget>;

}  // namespace lyapnet
