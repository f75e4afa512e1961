#pragma once

#include "cert/budget.hpp"
#include "cert/cascade.hpp"

namespace lyapnet {

struct PlanPolicy {
  double margin_out = 0.08;  // delta_n above the global delta
  double margin_in = 0.03;   // nu_1 above the global nu
  double slack = 0.005;      // distance kept from every binding inequality
};

// Picks per-layer budgets for an n-layer stack that satisfy the planning
// rules for the global budget g: the last layer anchors delta_n, the first
// anchors nu_1, interior layers chain delta_l just above 1 - nu_{l+1} with
// nu_l backed off from the 0.25 product ceiling. The result always passes
// check_remark3 or a planning-error names the binding constraint.
Budgets plan_parameters(std::size_t n, const GlobalBudget& g, const PlanPolicy& policy = {});

// Validates user-supplied budgets instead of choosing them.
void validate_plan(const Budgets& budgets, const GlobalBudget& g);

}  // namespace lyapnet
