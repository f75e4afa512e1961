#include "cert/planner.hpp"

#include <string>

namespace lyapnet {

namespace {

std::string violation_text(const Remark3Violation& v) {
  std::string s = v.constraint;
  if (v.layer > 0) s += " at layer " + std::to_string(v.layer);
  s += " (value " + std::to_string(v.value) + ")";
  return s;
}

}  // namespace

void validate_plan(const Budgets& budgets, const GlobalBudget& g) {
  const auto violations = check_remark3(budgets, g);
  if (!violations.empty())
    raise(ErrorCode::Planning, "budget plan infeasible: " + violation_text(violations.front()));
}

Budgets plan_parameters(std::size_t n, const GlobalBudget& g, const PlanPolicy& policy) {
  if (n <= 2) raise(ErrorCode::Size, "plan_parameters requires n > 2 layers");
  g.validate();

  Budgets budgets(n);
  // Output anchor.
  budgets[n - 1].delta = g.delta + policy.margin_out;
  budgets[n - 1].nu = 0.25 / budgets[n - 1].delta - policy.slack;
  // Interior layers, chained backwards from the output.
  for (std::size_t l = n - 1; l >= 2; --l) {
    budgets[l - 1].delta = 1.0 - budgets[l].nu + policy.slack;
    budgets[l - 1].nu = 0.25 / budgets[l - 1].delta - policy.slack;
  }
  // Input anchor overrides the chained nu_1 and re-derives delta_1 from the
  // product ceiling.
  budgets[0].nu = g.nu + policy.margin_in;
  budgets[0].delta = 0.25 / budgets[0].nu - policy.slack;

  validate_plan(budgets, g);
  return budgets;
}

}  // namespace lyapnet
