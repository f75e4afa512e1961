#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace lyapnet {

struct Dataset {
  Shape sample_shape;
  std::size_t num_classes = 0;
  std::vector<float> images;  // row-major, one flattened sample per row
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_dim() const { return shape_numel(sample_shape); }

  TensorF batch(const std::vector<std::size_t>& idx) const {
    const std::size_t d = sample_dim();
    Shape s{idx.size()};
    s.insert(s.end(), sample_shape.begin(), sample_shape.end());
    auto t = TensorF::zeros(s);
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy(images.begin() + idx[i] * d, images.begin() + (idx[i] + 1) * d,
                t.data.begin() + i * d);
    return t;
  }

  TensorF slice(std::size_t from, std::size_t to) const {
    const std::size_t d = sample_dim();
    Shape s{to - from};
    s.insert(s.end(), sample_shape.begin(), sample_shape.end());
    auto t = TensorF::zeros(s);
    std::copy(images.begin() + from * d, images.begin() + to * d, t.data.begin());
    return t;
  }

  std::vector<std::uint8_t> label_slice(std::size_t from, std::size_t to) const {
    return {labels.begin() + from, labels.begin() + to};
  }
};

// Reads an IDX image/label pair. Pixels are mapped affinely to [-0.5, +0.5];
// image and label counts must agree. Malformed input raises a format-error
// naming the byte offset of the problem.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Seeded Gaussian class blobs: class means on a scaled sphere, isotropic
// noise. Deterministic for a fixed seed.
Dataset synth_dataset(std::size_t classes, std::size_t dim, std::size_t per_class,
                      std::uint64_t seed, double separation = 3.0, double noise = 1.0);

// Train/test pair drawn around the same class means.
std::pair<Dataset, Dataset> synth_split(std::size_t classes, std::size_t dim,
                                        std::size_t per_class, std::size_t test_per_class,
                                        std::uint64_t seed, double separation = 3.0,
                                        double noise = 1.0);

}  // namespace lyapnet
