#pragma once

#include <utility>

#include "cert/budget.hpp"

namespace lyapnet {

// Spectral-norm ceiling 1/delta^2 + 2|nu|/delta for a layer trained with
// budget b. Requires b.delta > 0.
double spectral_cap(const LayerBudget& b);

// Coefficient c = 1/delta^2 + 2 nu/delta of the global perturbation bound.
double bound_coefficient(const GlobalBudget& g);

// ||Delta_n||_2 <= sqrt(c) * eps.
double corollary_bound(const GlobalBudget& g, double eps);

// sqrt(c * eps): the form that reproduces the published verification table.
// The two bounds scale differently in eps; reports always carry both.
double table_bound(const GlobalBudget& g, double eps);

// Block-level budget of a residual connection whose branch has budget b:
// delta' = nu' = (nu + delta - 1) / (1 - 2 delta).
// Requires 0 < delta < 0.5, nu + delta >= 1 and delta*nu <= 0.25.
LayerBudget residual_effective_budget(const LayerBudget& b);

// Conic sector with boundary slopes a <= b maps to delta = 1/(a+b),
// nu = ab/(a+b). Requires a + b != 0.
std::pair<double, double> conic_from_slopes(double a, double b);

// Inverse map: slopes are the roots of t^2 - t/delta + nu/delta = 0, returned
// with a <= b. delta*nu > 0.25 means complex roots and is rejected.
std::pair<double, double> slopes_from_budget(double delta, double nu);

}  // namespace lyapnet
