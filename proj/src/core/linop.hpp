#pragma once

#include <memory>

#include "core/tensor.hpp"

namespace lyapnet {

// A linear map together with its exact adjoint: <apply(x), y> == <x, adjoint(y)>.
template <typename T>
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Shape in_shape() const = 0;
  virtual Shape out_shape() const = 0;
  virtual Tensor<T> apply(const Tensor<T>& x) const = 0;
  virtual Tensor<T> adjoint(const Tensor<T>& y) const = 0;
};

// Explicit rank-2 matrix as an operator on flat vectors.
template <typename T>
class MatrixOperator final : public LinearOperator<T> {
 public:
  explicit MatrixOperator(Tensor<T> m) : m_(std::move(m)) {
    if (m_.rank() != 2) raise(ErrorCode::Shape, "MatrixOperator needs a rank-2 tensor");
  }

  Shape in_shape() const override { return {m_.shape[1]}; }
  Shape out_shape() const override { return {m_.shape[0]}; }

  Tensor<T> apply(const Tensor<T>& x) const override {
    auto out = Tensor<T>::zeros({m_.shape[0]});
    out.as_vector() = m_.as_matrix(m_.shape[0], m_.shape[1]) * x.as_vector();
    return out;
  }

  Tensor<T> adjoint(const Tensor<T>& y) const override {
    auto out = Tensor<T>::zeros({m_.shape[1]});
    out.as_vector() = m_.as_matrix(m_.shape[0], m_.shape[1]).transpose() * y.as_vector();
    return out;
  }

  const Tensor<T>& matrix() const { return m_; }

 private:
  Tensor<T> m_;
};

}  // namespace lyapnet
