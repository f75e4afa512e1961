#pragma once

#include "core/tensor.hpp"

namespace lyapnet {

// Largest singular value of a rank-2 tensor, computed by a dense SVD.
// Test-oracle precision (<= 1e-10 relative); refuses inputs beyond 256x256.
double spectral_norm_exact(const Tensor<double>& m);

}  // namespace lyapnet
