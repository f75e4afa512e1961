#pragma once

#include <memory>
#include <vector>

#include "core/conv.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "nn/layer_spec.hpp"

namespace lyapnet {

// Whatever a layer needs to replay its backward pass: saved tensors, pooling
// argmax indices and (for residual blocks) the branch's own cache chain.
template <typename T>
struct LayerCache {
  std::vector<Tensor<T>> tensors;
  std::vector<std::size_t> indices;
  std::vector<LayerCache<T>> branch;
};

template <typename T>
struct ParamGrad {
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
class Layer;

template <typename T>
using LayerPtr = std::unique_ptr<Layer<T>>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  // Per-sample shape transform; raises shape-error when x does not fit.
  virtual Shape out_shape(const Shape& in) const = 0;
  virtual bool has_params() const { return false; }
  virtual Tensor<T>* weight() { return nullptr; }
  virtual Tensor<T>* bias() { return nullptr; }

  // x carries a leading batch extent. The cache written here is consumed by
  // backward; grads, when non-null, receives this layer's parameter gradient.
  virtual Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const = 0;
  virtual Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                             ParamGrad<T>* grads) const = 0;

  virtual LayerPtr<T> clone() const = 0;
};

namespace detail {

inline Shape batched(const Shape& sample, std::size_t n) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

inline Shape sample_of(const Shape& batchShape) {
  return Shape(batchShape.begin() + 1, batchShape.end());
}

}  // namespace detail

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(std::size_t in, std::size_t out)
      : in_(in), out_(out), w_(Tensor<T>::zeros({out, in})), b_(Tensor<T>::zeros({out})) {}

  LayerKind kind() const override { return LayerKind::Dense; }
  bool has_params() const override { return true; }
  Tensor<T>* weight() override { return &w_; }
  Tensor<T>* bias() override { return &b_; }
  std::size_t fan_in() const { return in_; }

  Shape out_shape(const Shape& in) const override {
    if (shape_numel(in) != in_)
      raise(ErrorCode::Shape, "dense layer expects input of " + std::to_string(in_) +
                                  " values, got " + shape_str(in));
    return {out_};
  }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    const std::size_t n = x.shape.empty() ? 0 : x.shape[0];
    if (x.numel() != n * in_) raise(ErrorCode::Shape, "dense forward: batch shape mismatch");
    auto y = Tensor<T>::zeros({n, out_});
    if (n > 0) {
      y.as_matrix(n, out_).noalias() = x.as_matrix(n, in_) * w_.as_matrix(out_, in_).transpose();
      y.as_matrix(n, out_).rowwise() += b_.as_vector().transpose();
    }
    cache.tensors = {x};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>* grads) const override {
    const Tensor<T>& x = cache.tensors.at(0);
    const std::size_t n = x.shape[0];
    auto gx = Tensor<T>::zeros(x.shape);
    if (n > 0)
      gx.as_matrix(n, in_).noalias() = gy.as_matrix(n, out_) * w_.as_matrix(out_, in_);
    if (grads != nullptr) {
      grads->weight = Tensor<T>::zeros(w_.shape);
      grads->bias = Tensor<T>::zeros(b_.shape);
      if (n > 0) {
        grads->weight.as_matrix(out_, in_).noalias() =
            gy.as_matrix(n, out_).transpose() * x.as_matrix(n, in_);
        grads->bias.as_vector() = gy.as_matrix(n, out_).colwise().sum().transpose();
      }
    }
    return gx;
  }

  LayerPtr<T> clone() const override { return std::make_unique<DenseLayer<T>>(*this); }

 private:
  std::size_t in_, out_;
  Tensor<T> w_, b_;
};

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  ConvLayer(std::size_t out_ch, std::size_t in_ch, std::size_t kh, std::size_t kw,
            std::size_t stride, std::size_t pad)
      : w_(Tensor<T>::zeros({out_ch, in_ch, kh, kw})), b_(Tensor<T>::zeros({out_ch})) {
    g_.out_ch = out_ch;
    g_.in_ch = in_ch;
    g_.kh = kh;
    g_.kw = kw;
    g_.stride = stride;
    g_.pad = pad;
  }

  LayerKind kind() const override { return LayerKind::Conv; }
  bool has_params() const override { return true; }
  Tensor<T>* weight() override { return &w_; }
  Tensor<T>* bias() override { return &b_; }

  Shape out_shape(const Shape& in) const override {
    if (in.size() != 3 || in[0] != g_.in_ch)
      raise(ErrorCode::Shape, "conv layer expects (C,H,W) input with C=" +
                                  std::to_string(g_.in_ch) + ", got " + shape_str(in));
    ConvGeometry g = geometry(in[1], in[2]);
    g.validate();
    return {g.out_ch, g.out_h(), g.out_w()};
  }

  ConvGeometry geometry(std::size_t h, std::size_t w) const {
    ConvGeometry g = g_;
    g.in_h = h;
    g.in_w = w;
    return g;
  }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    if (x.rank() != 4 || x.shape[1] != g_.in_ch)
      raise(ErrorCode::Shape, "conv forward: (N,C,H,W) batch required");
    const std::size_t n = x.shape[0];
    ConvGeometry g = geometry(x.shape[2], x.shape[3]);
    g.validate();
    const std::size_t oh = g.out_h(), ow = g.out_w();
    const std::size_t ckk = g.in_ch * g.kh * g.kw;

    // im2col: one row per output position, then a single GEMM with the kernel.
    auto cols = Tensor<T>::zeros({n * oh * ow, ckk});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T* row = cols.data.data() + ((s * oh + oy) * ow + ox) * ckk;
          std::size_t c = 0;
          for (std::size_t ic = 0; ic < g.in_ch; ++ic)
            for (std::size_t ky = 0; ky < g.kh; ++ky)
              for (std::size_t kx = 0; kx < g.kw; ++kx, ++c) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                row[c] = (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) || ix < 0 ||
                          ix >= static_cast<std::ptrdiff_t>(g.in_w))
                             ? T(0)
                             : x.data[((s * g.in_ch + ic) * g.in_h + iy) * g.in_w + ix];
              }
        }

    auto rows = Tensor<T>::zeros({n * oh * ow, g.out_ch});
    if (n > 0)
      rows.as_matrix(n * oh * ow, g.out_ch).noalias() =
          cols.as_matrix(n * oh * ow, ckk) * w_.as_matrix(g.out_ch, ckk).transpose();

    auto y = Tensor<T>::zeros({n, g.out_ch, oh, ow});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t oc = 0; oc < g.out_ch; ++oc)
        for (std::size_t p = 0; p < oh * ow; ++p)
          y.data[(s * g.out_ch + oc) * oh * ow + p] =
              rows.data[(s * oh * ow + p) * g.out_ch + oc] + b_.data[oc];

    cache.tensors = {cols};
    cache.indices = {n, x.shape[2], x.shape[3]};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>* grads) const override {
    const Tensor<T>& cols = cache.tensors.at(0);
    const std::size_t n = cache.indices.at(0);
    ConvGeometry g = geometry(cache.indices.at(1), cache.indices.at(2));
    const std::size_t oh = g.out_h(), ow = g.out_w();
    const std::size_t ckk = g.in_ch * g.kh * g.kw;

    auto grows = Tensor<T>::zeros({n * oh * ow, g.out_ch});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t oc = 0; oc < g.out_ch; ++oc)
        for (std::size_t p = 0; p < oh * ow; ++p)
          grows.data[(s * oh * ow + p) * g.out_ch + oc] =
              gy.data[(s * g.out_ch + oc) * oh * ow + p];

    if (grads != nullptr) {
      grads->weight = Tensor<T>::zeros(w_.shape);
      grads->bias = Tensor<T>::zeros(b_.shape);
      if (n > 0) {
        grads->weight.as_matrix(g.out_ch, ckk).noalias() =
            grows.as_matrix(n * oh * ow, g.out_ch).transpose() * cols.as_matrix(n * oh * ow, ckk);
        grads->bias.as_vector() =
            grows.as_matrix(n * oh * ow, g.out_ch).colwise().sum().transpose();
      }
    }

    auto gcols = Tensor<T>::zeros(cols.shape);
    if (n > 0)
      gcols.as_matrix(n * oh * ow, ckk).noalias() =
          grows.as_matrix(n * oh * ow, g.out_ch) * w_.as_matrix(g.out_ch, ckk);

    // col2im scatter-add.
    auto gx = Tensor<T>::zeros({n, g.in_ch, g.in_h, g.in_w});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T* row = gcols.data.data() + ((s * oh + oy) * ow + ox) * ckk;
          std::size_t c = 0;
          for (std::size_t ic = 0; ic < g.in_ch; ++ic)
            for (std::size_t ky = 0; ky < g.kh; ++ky)
              for (std::size_t kx = 0; kx < g.kw; ++kx, ++c) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) || ix < 0 ||
                    ix >= static_cast<std::ptrdiff_t>(g.in_w))
                  continue;
                gx.data[((s * g.in_ch + ic) * g.in_h + iy) * g.in_w + ix] += row[c];
              }
        }
    return gx;
  }

  LayerPtr<T> clone() const override { return std::make_unique<ConvLayer<T>>(*this); }

 private:
  Tensor<T> w_, b_;
  ConvGeometry g_;
};

// h(x) = max(x, a x). At exactly zero the subgradient a is used, matching the
// right limit of max(y, ay) from below.
template <typename T>
class LeakyReLULayer final : public Layer<T> {
 public:
  explicit LeakyReLULayer(double slope) : a_(static_cast<T>(slope)) {}

  LayerKind kind() const override { return LayerKind::LeakyReLU; }
  Shape out_shape(const Shape& in) const override { return in; }
  double slope() const { return static_cast<double>(a_); }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    Tensor<T> y = x;
    for (auto& v : y.data)
      if (v <= T(0)) v *= a_;
    cache.tensors = {x};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>*) const override {
    const Tensor<T>& x = cache.tensors.at(0);
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      if (x.data[i] <= T(0)) gx.data[i] *= a_;
    return gx;
  }

  LayerPtr<T> clone() const override { return std::make_unique<LeakyReLULayer<T>>(*this); }

 private:
  T a_;
};

// Non-overlapping window pooling; trailing rows/cols that do not fill a
// window are dropped. Gradient routes to the first maximal element in scan
// order on ties.
template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  explicit MaxPoolLayer(std::size_t window) : w_(window) {}

  LayerKind kind() const override { return LayerKind::MaxPool; }
  std::size_t window() const { return w_; }

  Shape out_shape(const Shape& in) const override {
    if (in.size() != 3) raise(ErrorCode::Shape, "max_pool expects (C,H,W) input");
    if (in[1] < w_ || in[2] < w_) raise(ErrorCode::Shape, "max_pool window exceeds input");
    return {in[0], in[1] / w_, in[2] / w_};
  }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    const std::size_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t oh = h / w_, ow = w / w_;
    auto y = Tensor<T>::zeros({n, c, oh, ow});
    cache.indices.assign(n * c * oh * ow + 4, 0);
    cache.indices[0] = n;
    cache.indices[1] = c;
    cache.indices[2] = h;
    cache.indices[3] = w;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            T best = x.data[((s * c + ch) * h + oy * w_) * w + ox * w_];
            std::size_t best_idx = ((s * c + ch) * h + oy * w_) * w + ox * w_;
            for (std::size_t ky = 0; ky < w_; ++ky)
              for (std::size_t kx = 0; kx < w_; ++kx) {
                const std::size_t idx = ((s * c + ch) * h + oy * w_ + ky) * w + ox * w_ + kx;
                if (x.data[idx] > best) {
                  best = x.data[idx];
                  best_idx = idx;
                }
              }
            y.data[((s * c + ch) * oh + oy) * ow + ox] = best;
            cache.indices[4 + ((s * c + ch) * oh + oy) * ow + ox] = best_idx;
          }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>*) const override {
    const std::size_t n = cache.indices[0], c = cache.indices[1], h = cache.indices[2],
                      w = cache.indices[3];
    auto gx = Tensor<T>::zeros({n, c, h, w});
    for (std::size_t i = 0; i < gy.data.size(); ++i)
      gx.data[cache.indices[4 + i]] += gy.data[i];
    return gx;
  }

  LayerPtr<T> clone() const override { return std::make_unique<MaxPoolLayer<T>>(*this); }

 private:
  std::size_t w_;
};

template <typename T>
class AvgPoolLayer final : public Layer<T> {
 public:
  explicit AvgPoolLayer(std::size_t window) : w_(window) {}

  LayerKind kind() const override { return LayerKind::AvgPool; }
  std::size_t window() const { return w_; }

  Shape out_shape(const Shape& in) const override {
    if (in.size() != 3) raise(ErrorCode::Shape, "avg_pool expects (C,H,W) input");
    if (in[1] < w_ || in[2] < w_) raise(ErrorCode::Shape, "avg_pool window exceeds input");
    return {in[0], in[1] / w_, in[2] / w_};
  }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    const std::size_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    const std::size_t oh = h / w_, ow = w / w_;
    auto y = Tensor<T>::zeros({n, c, oh, ow});
    const T inv = T(1) / static_cast<T>(w_ * w_);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            T acc = T(0);
            for (std::size_t ky = 0; ky < w_; ++ky)
              for (std::size_t kx = 0; kx < w_; ++kx)
                acc += x.data[((s * c + ch) * h + oy * w_ + ky) * w + ox * w_ + kx];
            y.data[((s * c + ch) * oh + oy) * ow + ox] = acc * inv;
          }
    cache.indices = {n, c, h, w};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>*) const override {
    const std::size_t n = cache.indices[0], c = cache.indices[1], h = cache.indices[2],
                      w = cache.indices[3];
    const std::size_t oh = h / w_, ow = w / w_;
    auto gx = Tensor<T>::zeros({n, c, h, w});
    const T inv = T(1) / static_cast<T>(w_ * w_);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const T v = gy.data[((s * c + ch) * oh + oy) * ow + ox] * inv;
            for (std::size_t ky = 0; ky < w_; ++ky)
              for (std::size_t kx = 0; kx < w_; ++kx)
                gx.data[((s * c + ch) * h + oy * w_ + ky) * w + ox * w_ + kx] += v;
          }
    return gx;
  }

  LayerPtr<T> clone() const override { return std::make_unique<AvgPoolLayer<T>>(*this); }

 private:
  std::size_t w_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::Flatten; }
  Shape out_shape(const Shape& in) const override { return {shape_numel(in)}; }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    cache.indices.assign(x.shape.begin(), x.shape.end());
    Tensor<T> y = x;
    y.shape = {x.shape[0], x.numel() / std::max<std::size_t>(x.shape[0], 1)};
    if (x.shape[0] == 0) y.shape = {0, shape_numel(detail::sample_of(x.shape))};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>*) const override {
    Tensor<T> gx = gy;
    gx.shape.assign(cache.indices.begin(), cache.indices.end());
    return gx;
  }

  LayerPtr<T> clone() const override { return std::make_unique<FlattenLayer<T>>(*this); }
};

// y = x + branch(x); the branch must preserve the sample shape.
template <typename T>
class ResidualLayer final : public Layer<T> {
 public:
  explicit ResidualLayer(std::vector<LayerPtr<T>> branch) : branch_(std::move(branch)) {}

  ResidualLayer(const ResidualLayer& other) {
    branch_.reserve(other.branch_.size());
    for (const auto& l : other.branch_) branch_.push_back(l->clone());
  }

  LayerKind kind() const override { return LayerKind::Residual; }
  std::vector<LayerPtr<T>>& branch() { return branch_; }
  const std::vector<LayerPtr<T>>& branch() const { return branch_; }

  Shape out_shape(const Shape& in) const override {
    Shape s = in;
    for (const auto& l : branch_) s = l->out_shape(s);
    if (s != in)
      raise(ErrorCode::Shape, "residual branch maps " + shape_str(in) + " to " + shape_str(s) +
                                  "; skip connection requires matching shapes");
    return in;
  }

  Tensor<T> forward(const Tensor<T>& x, LayerCache<T>& cache) const override {
    cache.branch.assign(branch_.size(), LayerCache<T>{});
    Tensor<T> h = x;
    for (std::size_t i = 0; i < branch_.size(); ++i) h = branch_[i]->forward(h, cache.branch[i]);
    if (h.shape != x.shape) raise(ErrorCode::Shape, "residual branch changed batch shape");
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += h.data[i];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const LayerCache<T>& cache,
                     ParamGrad<T>* grads) const override {
    // Branch parameter grads need the model walker; see backward_with_grads.
    (void)gy;
    (void)cache;
    (void)grads;
    raise(ErrorCode::Contract, "ResidualLayer::backward must go through backward_with_grads");
  }

  Tensor<T> backward_with_grads(const Tensor<T>& gy, const LayerCache<T>& cache,
                                std::vector<ParamGrad<T>>& sink) const {
    Tensor<T> g = gy;
    std::vector<ParamGrad<T>> local(count_param_layers());
    std::size_t gi = local.size();
    for (std::size_t i = branch_.size(); i-- > 0;) {
      if (branch_[i]->has_params()) {
        --gi;
        g = branch_[i]->backward(g, cache.branch[i], &local[gi]);
      } else if (branch_[i]->kind() == LayerKind::Residual) {
        auto* nested = static_cast<const ResidualLayer<T>*>(branch_[i].get());
        std::vector<ParamGrad<T>> sub;
        g = nested->backward_with_grads(g, cache.branch[i], sub);
        gi -= sub.size();
        for (std::size_t k = 0; k < sub.size(); ++k) local[gi + k] = std::move(sub[k]);
      } else {
        g = branch_[i]->backward(g, cache.branch[i], nullptr);
      }
    }
    for (auto& pg : local) sink.push_back(std::move(pg));
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g.data[i];
    return gx;
  }

  std::size_t count_param_layers() const {
    std::size_t c = 0;
    for (const auto& l : branch_) {
      if (l->has_params())
        ++c;
      else if (l->kind() == LayerKind::Residual)
        c += static_cast<const ResidualLayer<T>*>(l.get())->count_param_layers();
    }
    return c;
  }

  LayerPtr<T> clone() const override { return std::make_unique<ResidualLayer<T>>(*this); }

 private:
  std::vector<LayerPtr<T>> branch_;
};

}  // namespace lyapnet
