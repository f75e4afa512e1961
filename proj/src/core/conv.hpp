#pragma once

#include <cstddef>

#include "core/linop.hpp"
#include "core/tensor.hpp"

namespace lyapnet {

// Geometry of a 2-d convolution with zero padding.
struct ConvGeometry {
  std::size_t in_ch = 0, in_h = 0, in_w = 0;
  std::size_t out_ch = 0, kh = 0, kw = 0;
  std::size_t stride = 1, pad = 0;

  std::size_t out_h() const {
    return (in_h + 2 * pad - kh) / stride + 1;
  }
  std::size_t out_w() const {
    return (in_w + 2 * pad - kw) / stride + 1;
  }

  void validate() const {
    if (stride == 0) raise(ErrorCode::Shape, "conv: stride must be positive");
    if (in_h + 2 * pad < kh || in_w + 2 * pad < kw)
      raise(ErrorCode::Shape, "conv: kernel larger than padded input");
  }
};

// out[oc,oy,ox] = sum_{ic,ky,kx} k[oc,ic,ky,kx] * in[ic, oy*s-p+ky, ox*s-p+kx]
template <typename T>
Tensor<T> conv_apply(const Tensor<T>& kernel, const ConvGeometry& g, const Tensor<T>& in) {
  auto out = Tensor<T>::zeros({g.out_ch, g.out_h(), g.out_w()});
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t oc = 0; oc < g.out_ch; ++oc)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ic = 0; ic < g.in_ch; ++ic)
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              acc += static_cast<double>(kernel.data[((oc * g.in_ch + ic) * g.kh + ky) * g.kw + kx]) *
                     static_cast<double>(in.data[(ic * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                                                 static_cast<std::size_t>(ix)]);
            }
          }
        out.data[(oc * oh + oy) * ow + ox] = static_cast<T>(acc);
      }
  return out;
}

// Exact adjoint of conv_apply (transposed convolution / backward-data).
template <typename T>
Tensor<T> conv_adjoint(const Tensor<T>& kernel, const ConvGeometry& g, const Tensor<T>& gy) {
  auto gin = Tensor<T>::zeros({g.in_ch, g.in_h, g.in_w});
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t oc = 0; oc < g.out_ch; ++oc)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double v = static_cast<double>(gy.data[(oc * oh + oy) * ow + ox]);
        if (v == 0.0) continue;
        for (std::size_t ic = 0; ic < g.in_ch; ++ic)
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              gin.data[(ic * g.in_h + static_cast<std::size_t>(iy)) * g.in_w +
                       static_cast<std::size_t>(ix)] +=
                  static_cast<T>(v * static_cast<double>(
                                         kernel.data[((oc * g.in_ch + ic) * g.kh + ky) * g.kw + kx]));
            }
          }
      }
  return gin;
}

// The convolution's linear part (bias excluded) as an operator on (C,H,W) tensors.
template <typename T>
class ConvOperator final : public LinearOperator<T> {
 public:
  ConvOperator(Tensor<T> kernel, ConvGeometry g) : kernel_(std::move(kernel)), g_(g) {
    g_.validate();
    if (kernel_.shape != Shape{g_.out_ch, g_.in_ch, g_.kh, g_.kw})
      raise(ErrorCode::Shape, "conv kernel shape mismatch");
  }

  Shape in_shape() const override { return {g_.in_ch, g_.in_h, g_.in_w}; }
  Shape out_shape() const override { return {g_.out_ch, g_.out_h(), g_.out_w()}; }
  Tensor<T> apply(const Tensor<T>& x) const override { return conv_apply(kernel_, g_, x); }
  Tensor<T> adjoint(const Tensor<T>& y) const override { return conv_adjoint(kernel_, g_, y); }
  const ConvGeometry& geometry() const { return g_; }

 private:
  Tensor<T> kernel_;
  ConvGeometry g_;
};

// Explicit matrix W with W * vec(input) == vec(conv output). Boundary handling
// is the same zero padding as the operator form, so both paths agree exactly.
// Oracle-sized only: refuses matrices beyond 4096 x 4096.
template <typename T>
Tensor<double> materialize_conv_matrix(const Tensor<T>& kernel, const ConvGeometry& g) {
  g.validate();
  if (kernel.shape != Shape{g.out_ch, g.in_ch, g.kh, g.kw})
    raise(ErrorCode::Shape, "conv kernel shape mismatch");
  const std::size_t rows = g.out_ch * g.out_h() * g.out_w();
  const std::size_t cols = g.in_ch * g.in_h * g.in_w;
  if (rows > 4096 || cols > 4096)
    raise(ErrorCode::Size, "materialize_conv_matrix: " + std::to_string(rows) + "x" +
                               std::to_string(cols) + " exceeds 4096x4096");
  auto w = Tensor<double>::zeros({rows, cols});
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t oc = 0; oc < g.out_ch; ++oc)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t row = (oc * oh + oy) * ow + ox;
        for (std::size_t ic = 0; ic < g.in_ch; ++ic)
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              const std::size_t col =
                  (ic * g.in_h + static_cast<std::size_t>(iy)) * g.in_w + static_cast<std::size_t>(ix);
              w.at(row, col) = static_cast<double>(
                  kernel.data[((oc * g.in_ch + ic) * g.kh + ky) * g.kw + kx]);
            }
          }
      }
  return w;
}

}  // namespace lyapnet
