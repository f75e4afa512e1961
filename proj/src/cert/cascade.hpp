#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cert/budget.hpp"
#include "core/tensor.hpp"

namespace lyapnet {

// Cascade matrix A of the layer stack: tridiagonal in the budgets with 1/2 on
// the off-diagonals and -1/2 corner couplings between input and output ports.
//   diag(A) = [nu - nu_1, -delta_1 - nu_2, ..., -delta_{n-1} - nu_n, delta - delta_n]
// Symmetric, (n+1)x(n+1); requires n > 2.
Tensor<double> build_cascade_matrix(const Budgets& budgets, const GlobalBudget& g);

// Comparison matrix: keeps the diagonal, negates absolute off-diagonals.
Tensor<double> comparison_matrix(const Tensor<double>& m);

struct QuasiDominanceResult {
  bool pass = false;
  // Positive diagonal witness p with m_ii p_i > sum_{j!=i} |m_ij| p_j, when it exists.
  std::vector<double> witness;
  std::string note;
};

// Decides whether a positive diagonal scaling makes M strictly row-sum
// dominant. Equivalent test: every diagonal entry exceeds tol and the
// comparison matrix is a nonsingular M-matrix (inverse entrywise >= 0);
// the witness is then C^{-1} * 1.
QuasiDominanceResult is_quasi_dominant(const Tensor<double>& m, double tol = 1e-9);

struct Remark3Violation {
  std::string constraint;
  int layer = 0;  // 1-based; 0 when the constraint is network-level
  double value = 0.0;
};

// Planning rules that keep the cascade certifiable:
//   delta_l > 0 for all l;  delta_n > delta > 0;  nu_1 > nu > 0;
//   delta_l + nu_{l+1} > 1 for l = 1..n-1;  delta_l * nu_l <= 0.25 for all l.
std::vector<Remark3Violation> check_remark3(const Budgets& budgets, const GlobalBudget& g);

struct CascadeCertificate {
  Tensor<double> a;                    // the cascade matrix A
  QuasiDominanceResult quasi_dominant; // verdict for -A
  std::vector<Remark3Violation> remark3_violations;
  std::vector<double> caps;            // per-layer spectral caps
  double coefficient_c = 0.0;          // 1/delta^2 + 2 nu/delta
  bool pass = false;                   // planning rules hold (and -A check in strict mode)
  bool strict = false;
  std::vector<std::string> notes;
};

// Full certificate for a budget assignment. `pass` keys on the planning rules;
// the -A quasi-dominance verdict is always reported and only gates the result
// in strict mode.
CascadeCertificate certify(const Budgets& budgets, const GlobalBudget& g, bool strict = false);

}  // namespace lyapnet
