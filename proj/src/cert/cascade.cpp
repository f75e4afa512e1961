#include "cert/cascade.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cert/bounds.hpp"

namespace lyapnet {

Tensor<double> build_cascade_matrix(const Budgets& budgets, const GlobalBudget& g) {
  const std::size_t n = budgets.size();
  if (n <= 2) raise(ErrorCode::Size, "cascade matrix is defined for n > 2 layers");
  const std::size_t m = n + 1;
  auto a = Tensor<double>::zeros({m, m});
  a.at(0, 0) = g.nu - budgets[0].nu;
  for (std::size_t l = 1; l < n; ++l)
    a.at(l, l) = -budgets[l - 1].delta - budgets[l].nu;
  a.at(n, n) = g.delta - budgets[n - 1].delta;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    a.at(i, i + 1) = 0.5;
    a.at(i + 1, i) = 0.5;
  }
  a.at(0, m - 1) = -0.5;
  a.at(m - 1, 0) = -0.5;
  return a;
}

Tensor<double> comparison_matrix(const Tensor<double>& m) {
  if (m.rank() != 2 || m.shape[0] != m.shape[1])
    raise(ErrorCode::Shape, "comparison_matrix: square matrix required");
  const std::size_t n = m.shape[0];
  auto c = Tensor<double>::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c.at(i, j) = (i == j) ? m.at(i, j) : -std::abs(m.at(i, j));
  return c;
}

QuasiDominanceResult is_quasi_dominant(const Tensor<double>& m, double tol) {
  if (m.rank() != 2 || m.shape[0] != m.shape[1])
    raise(ErrorCode::Shape, "is_quasi_dominant: square matrix required");
  m.ensure_finite("is_quasi_dominant");
  const std::size_t n = m.shape[0];
  QuasiDominanceResult r;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.at(i, i) <= tol) {
      r.note = "diagonal entry " + std::to_string(i + 1) + " = " +
               std::to_string(m.at(i, i)) + " is not positive";
      return r;
    }
  }
  const Tensor<double> c = comparison_matrix(m);
  Eigen::MatrixXd cm = c.as_matrix(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cm);
  if (!lu.isInvertible()) {
    r.note = "comparison matrix is singular";
    return r;
  }
  Eigen::MatrixXd inv = lu.inverse();
  if ((inv.array() < -tol).any()) {
    r.note = "comparison matrix inverse has negative entries; no positive diagonal witness";
    return r;
  }
  Eigen::VectorXd p = inv * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  if ((p.array() <= 0.0).any()) {
    r.note = "candidate witness is not strictly positive";
    return r;
  }
  r.pass = true;
  r.witness.assign(p.data(), p.data() + p.size());
  r.note = "comparison matrix is a nonsingular M-matrix";
  return r;
}

std::vector<Remark3Violation> check_remark3(const Budgets& budgets, const GlobalBudget& g) {
  if (budgets.empty()) raise(ErrorCode::Budget, "check_remark3: no budgets given");
  std::vector<Remark3Violation> v;
  const std::size_t n = budgets.size();
  for (std::size_t l = 0; l < n; ++l) {
    if (!(budgets[l].delta > 0.0))
      v.push_back({"delta_l > 0", static_cast<int>(l + 1), budgets[l].delta});
    const double prod = budgets[l].delta * budgets[l].nu;
    if (prod > 0.25 + 1e-12)
      v.push_back({"delta_l * nu_l <= 0.25", static_cast<int>(l + 1), prod});
  }
  if (!(g.delta > 0.0)) v.push_back({"delta > 0", 0, g.delta});
  if (!(budgets[n - 1].delta > g.delta))
    v.push_back({"delta_n > delta", static_cast<int>(n), budgets[n - 1].delta});
  if (!(g.nu > 0.0)) v.push_back({"nu > 0", 0, g.nu});
  if (!(budgets[0].nu > g.nu)) v.push_back({"nu_1 > nu", 1, budgets[0].nu});
  for (std::size_t l = 0; l + 1 < n; ++l) {
    const double s = budgets[l].delta + budgets[l + 1].nu;
    if (!(s > 1.0)) v.push_back({"delta_l + nu_{l+1} > 1", static_cast<int>(l + 1), s});
  }
  return v;
}

CascadeCertificate certify(const Budgets& budgets, const GlobalBudget& g, bool strict) {
  CascadeCertificate cert;
  cert.strict = strict;
  cert.a = build_cascade_matrix(budgets, g);

  const std::size_t m = cert.a.shape[0];
  auto neg_a = Tensor<double>::zeros({m, m});
  for (std::size_t i = 0; i < m * m; ++i) neg_a.data[i] = -cert.a.data[i];
  cert.quasi_dominant = is_quasi_dominant(neg_a);

  cert.remark3_violations = check_remark3(budgets, g);

  cert.caps.reserve(budgets.size());
  bool caps_ok = true;
  for (const auto& b : budgets) {
    if (b.delta > 0.0) {
      cert.caps.push_back(spectral_cap(b));
    } else {
      cert.caps.push_back(std::numeric_limits<double>::quiet_NaN());
      caps_ok = false;
    }
  }
  cert.coefficient_c = bound_coefficient(g);

  cert.pass = cert.remark3_violations.empty() && caps_ok;
  if (strict && !cert.quasi_dominant.pass) cert.pass = false;

  if (!cert.quasi_dominant.pass)
    cert.notes.push_back("-A is not quasi-dominant: " + cert.quasi_dominant.note +
                         "; planning rules are reported independently");
  if (cert.quasi_dominant.pass) {
    // Symmetric quasi-dominant matrices are positive definite; record the check.
    Eigen::MatrixXd na = neg_a.as_matrix(m, m);
    Eigen::LLT<Eigen::MatrixXd> llt(na);
    cert.notes.push_back(llt.info() == Eigen::Success
                             ? "-A factorizes as positive definite"
                             : "-A quasi-dominant but Cholesky failed (numerical)");
  }
  return cert;
}

}  // namespace lyapnet
