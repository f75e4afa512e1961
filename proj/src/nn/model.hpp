#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/power_iteration.hpp"
#include "nn/layers.hpp"

namespace lyapnet {

// Reference to one parameterized layer inside a model, in depth-first order.
template <typename T>
struct ParamRef {
  Layer<T>* layer = nullptr;
  std::string name;
  Shape in_sample_shape;  // resolved input shape of the layer (no batch)
};

template <typename T>
struct ModelCache {
  const void* owner = nullptr;
  std::size_t batch = 0;
  std::vector<LayerCache<T>> layers;
};

template <typename T>
class Model {
 public:
  Model() = default;

  // Builds and initializes a model. Weight init is seeded He-normal, biases
  // zero; the init stream is consumed in layer order so a fixed seed yields a
  // fixed parameter vector.
  static Model build(const std::vector<LayerSpec>& specs, Shape input_sample, Rng& rng) {
    Model m;
    m.specs_ = specs;
    m.input_shape_ = std::move(input_sample);
    Shape s = m.input_shape_;
    for (const auto& spec : specs) {
      spec.validate();
      m.layers_.push_back(make_layer(spec));
      s = m.layers_.back()->out_shape(s);  // raises on incompatible chains
    }
    m.output_shape_ = s;
    m.collect_params();
    for (auto& p : m.params_) init_layer(*p.layer, rng);
    m.power_states_.assign(m.params_.size(), PowerState<T>{});
    return m;
  }

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  std::vector<ParamRef<T>>& params() { return params_; }
  const std::vector<ParamRef<T>>& params() const { return params_; }
  std::vector<PowerState<T>>& power_states() { return power_states_; }
  std::size_t num_layers() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

  Tensor<T> forward(const Tensor<T>& batch, ModelCache<T>* cache = nullptr) const {
    if (batch.shape.empty() || detail::sample_of(batch.shape) != input_shape_)
      raise(ErrorCode::Shape, "model forward: batch of samples " + shape_str(input_shape_) +
                                  " required, got " + shape_str(batch.shape));
    if (cache != nullptr) {
      cache->owner = this;
      cache->batch = batch.shape[0];
      cache->layers.assign(layers_.size(), LayerCache<T>{});
    }
    Tensor<T> h = batch;
    LayerCache<T> scratch;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      h = layers_[i]->forward(h, cache != nullptr ? cache->layers[i] : scratch);
    return h;
  }

  // Gradients for every parameter (aligned with params()) plus the gradient
  // with respect to the input batch.
  Tensor<T> backward(const ModelCache<T>& cache, const Tensor<T>& grad_out,
                     std::vector<ParamGrad<T>>* grads) const {
    if (cache.owner != this || cache.layers.size() != layers_.size())
      raise(ErrorCode::Contract, "model backward: cache does not belong to this model/forward");
    if (!grad_out.shape.empty() && grad_out.shape[0] != cache.batch)
      raise(ErrorCode::Contract, "model backward: stale cache (batch size mismatch)");
    if (grads != nullptr) grads->assign(params_.size(), ParamGrad<T>{});
    Tensor<T> g = grad_out;
    std::size_t idx = params_.size();
    for (std::size_t i = layers_.size(); i-- > 0;) {
      Layer<T>* l = layers_[i].get();
      if (l->has_params()) {
        --idx;
        ParamGrad<T> pg;
        g = l->backward(g, cache.layers[i], grads != nullptr ? &(*grads)[idx] : &pg);
      } else if (l->kind() == LayerKind::Residual) {
        auto* res = static_cast<const ResidualLayer<T>*>(l);
        std::vector<ParamGrad<T>> sub;
        g = res->backward_with_grads(g, cache.layers[i], sub);
        idx -= sub.size();
        if (grads != nullptr)
          for (std::size_t k = 0; k < sub.size(); ++k) (*grads)[idx + k] = std::move(sub[k]);
      } else {
        g = l->backward(g, cache.layers[i], nullptr);
      }
    }
    return g;
  }

  void ensure_params_finite(const char* context) const {
    for (const auto& p : params_) {
      p.layer->weight()->ensure_finite(context);
      p.layer->bias()->ensure_finite(context);
    }
  }

  template <typename U>
  Model<U> cast() const {
    Rng dummy(0);
    Model<U> out = Model<U>::build(specs_, input_shape_, dummy);
    auto& dst = out.params();
    for (std::size_t i = 0; i < params_.size(); ++i) {
      *dst[i].layer->weight() = cast_tensor<U>(*params_[i].layer->weight());
      *dst[i].layer->bias() = cast_tensor<U>(*params_[i].layer->bias());
    }
    return out;
  }

  Model clone() const {
    Model m;
    m.specs_ = specs_;
    m.input_shape_ = input_shape_;
    m.output_shape_ = output_shape_;
    for (const auto& l : layers_) m.layers_.push_back(l->clone());
    m.collect_params();
    m.power_states_ = power_states_;
    return m;
  }

 private:
  template <typename>
  friend class Model;

  static LayerPtr<T> make_layer(const LayerSpec& spec) {
    switch (spec.kind) {
      case LayerKind::Dense:
        return std::make_unique<DenseLayer<T>>(spec.in, spec.out);
      case LayerKind::Conv:
        return std::make_unique<ConvLayer<T>>(spec.out_ch, spec.in_ch, spec.kh, spec.kw,
                                              spec.stride, spec.pad);
      case LayerKind::LeakyReLU:
        return std::make_unique<LeakyReLULayer<T>>(spec.slope);
      case LayerKind::MaxPool:
        return std::make_unique<MaxPoolLayer<T>>(spec.window);
      case LayerKind::AvgPool:
        return std::make_unique<AvgPoolLayer<T>>(spec.window);
      case LayerKind::Flatten:
        return std::make_unique<FlattenLayer<T>>();
      case LayerKind::Residual: {
        std::vector<LayerPtr<T>> branch;
        for (const auto& b : spec.branch) branch.push_back(make_layer(b));
        return std::make_unique<ResidualLayer<T>>(std::move(branch));
      }
    }
    raise(ErrorCode::Config, "unknown layer kind");
  }

  static void init_layer(Layer<T>& l, Rng& rng) {
    Tensor<T>* w = l.weight();
    std::size_t fan_in = 0;
    if (l.kind() == LayerKind::Dense) {
      fan_in = w->shape[1];
    } else {
      fan_in = w->shape[1] * w->shape[2] * w->shape[3];
    }
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w->data) v = static_cast<T>(rng.normal(0.0, stddev));
  }

  void collect_params() {
    params_.clear();
    Shape s = input_shape_;
    std::size_t pos = 0;
    for (auto& l : layers_) {
      collect_from(*l, s, "layer" + std::to_string(pos + 1));
      s = l->out_shape(s);
      ++pos;
    }
  }

  void collect_from(Layer<T>& l, const Shape& in, const std::string& name) {
    if (l.has_params()) {
      params_.push_back({&l, name, in});
    } else if (l.kind() == LayerKind::Residual) {
      auto& res = static_cast<ResidualLayer<T>&>(l);
      Shape s = in;
      std::size_t k = 0;
      for (auto& b : res.branch()) {
        collect_from(*b, s, name + ".branch" + std::to_string(k + 1));
        s = b->out_shape(s);
        ++k;
      }
    }
  }

  std::vector<LayerSpec> specs_;
  Shape input_shape_, output_shape_;
  std::vector<LayerPtr<T>> layers_;
  std::vector<ParamRef<T>> params_;
  std::vector<PowerState<T>> power_states_;
};

using ModelF = Model<float>;
using ModelD = Model<double>;

}  // namespace lyapnet
