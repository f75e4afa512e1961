#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace lyapnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Dense row-major tensor. Shape extents are positive; the flat buffer length
// equals the product of extents, and stored values are finite.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
      raise(ErrorCode::Shape, "tensor data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
  }

  static Tensor zeros(Shape s) {
    std::size_t n = shape_numel(s);
    return Tensor(std::move(s), std::vector<T>(n, T(0)));
  }

  static Tensor full(Shape s, T value) {
    std::size_t n = shape_numel(s);
    return Tensor(std::move(s), std::vector<T>(n, value));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t extent(std::size_t i) const { return shape.at(i); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // Rank-2 element access.
  T& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void ensure_finite(const char* context) const {
    if (!all_finite())
      raise(ErrorCode::Numeric, std::string(context) + ": non-finite value in tensor");
  }

  // Eigen views over the flat buffer.
  Eigen::Map<MatrixRM<T>> as_matrix(std::size_t rows, std::size_t cols) {
    if (rows * cols != data.size())
      raise(ErrorCode::Shape, "matrix view mismatch for " + shape_str(shape));
    return Eigen::Map<MatrixRM<T>>(data.data(), static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(cols));
  }
  Eigen::Map<const MatrixRM<T>> as_matrix(std::size_t rows, std::size_t cols) const {
    if (rows * cols != data.size())
      raise(ErrorCode::Shape, "matrix view mismatch for " + shape_str(shape));
    return Eigen::Map<const MatrixRM<T>>(data.data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(cols));
  }
  Eigen::Map<VectorX<T>> as_vector() {
    return Eigen::Map<VectorX<T>>(data.data(), static_cast<Eigen::Index>(data.size()));
  }
  Eigen::Map<const VectorX<T>> as_vector() const {
    return Eigen::Map<const VectorX<T>>(data.data(),
                                        static_cast<Eigen::Index>(data.size()));
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
double norm2(const Tensor<T>& t) {
  double acc = 0.0;
  for (const T& v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    acc += static_cast<double>(a.data[i]) * static_cast<double>(b.data[i]);
  return acc;
}

template <typename To, typename From>
Tensor<To> cast_tensor(const Tensor<From>& t) {
  std::vector<To> out(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) out[i] = static_cast<To>(t.data[i]);
  return Tensor<To>(t.shape, std::move(out));
}

}  // namespace lyapnet
