#include "core/exact_norm.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace lyapnet {

double spectral_norm_exact(const Tensor<double>& m) {
  if (m.rank() != 2) raise(ErrorCode::Shape, "spectral_norm_exact: rank-2 tensor required");
  if (m.shape[0] > 256 || m.shape[1] > 256)
    raise(ErrorCode::Size, "spectral_norm_exact: input exceeds 256x256");
  m.ensure_finite("spectral_norm_exact");
  if (m.numel() == 0) return 0.0;
  Eigen::MatrixXd a = m.as_matrix(m.shape[0], m.shape[1]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace lyapnet
