#include "cert/bounds.hpp"

#include <cmath>
#include <string>

namespace lyapnet {

double spectral_cap(const LayerBudget& b) {
  if (b.delta <= 0.0)
    raise(ErrorCode::Budget, "spectral_cap requires delta > 0, got " + std::to_string(b.delta));
  b.validate();
  return 1.0 / (b.delta * b.delta) + 2.0 * std::abs(b.nu) / b.delta;
}

double bound_coefficient(const GlobalBudget& g) {
  g.validate();
  return 1.0 / (g.delta * g.delta) + 2.0 * g.nu / g.delta;
}

double corollary_bound(const GlobalBudget& g, double eps) {
  if (eps < 0.0) raise(ErrorCode::Budget, "bound requires eps >= 0");
  return std::sqrt(bound_coefficient(g)) * eps;
}

double table_bound(const GlobalBudget& g, double eps) {
  if (eps < 0.0) raise(ErrorCode::Budget, "bound requires eps >= 0");
  return std::sqrt(bound_coefficient(g) * eps);
}

LayerBudget residual_effective_budget(const LayerBudget& b) {
  if (!(b.delta > 0.0 && b.delta < 0.5))
    raise(ErrorCode::Budget,
          "residual branch budget requires 0 < delta < 0.5, got delta=" + std::to_string(b.delta));
  if (b.nu + b.delta < 1.0 - 1e-12)
    raise(ErrorCode::Budget, "residual branch budget requires nu + delta >= 1, got " +
                                 std::to_string(b.nu + b.delta));
  if (b.delta * b.nu > 0.25 + 1e-12)
    raise(ErrorCode::Budget, "residual branch budget requires delta*nu <= 0.25, got " +
                                 std::to_string(b.delta * b.nu));
  const double v = (b.nu + b.delta - 1.0) / (1.0 - 2.0 * b.delta);
  return LayerBudget{v, v};
}

std::pair<double, double> conic_from_slopes(double a, double b) {
  const double s = a + b;
  if (s == 0.0) raise(ErrorCode::DegenerateCone, "conic sector with a + b = 0 has no budget");
  return {1.0 / s, a * b / s};
}

std::pair<double, double> slopes_from_budget(double delta, double nu) {
  if (delta == 0.0) raise(ErrorCode::Budget, "slopes_from_budget requires delta != 0");
  if (delta * nu > 0.25 + 1e-15)
    raise(ErrorCode::ComplexSlopes, "delta*nu = " + std::to_string(delta * nu) +
                                        " > 0.25 gives a complex-sloped cone");
  const double half_sum = 0.5 / delta;
  const double disc = half_sum * half_sum - nu / delta;
  const double half_diff = std::sqrt(std::max(disc, 0.0));
  double a = half_sum - half_diff;
  double b = half_sum + half_diff;
  if (a > b) std::swap(a, b);
  return {a, b};
}

}  // namespace lyapnet
