#include "data/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "core/rng.hpp"

namespace lyapnet {

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f)
    raise(ErrorCode::Format,
          path + ": truncated header at byte offset " + std::to_string(offset));
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

std::vector<unsigned char> read_payload(std::ifstream& f, const std::string& path,
                                        std::size_t count, std::size_t offset) {
  std::vector<unsigned char> buf(count);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(f.gcount()) != count)
    raise(ErrorCode::Format, path + ": truncated payload at byte offset " +
                                 std::to_string(offset + static_cast<std::size_t>(f.gcount())));
  return buf;
}

std::vector<std::vector<double>> blob_means(std::size_t classes, std::size_t dim, Rng& rng,
                                            double separation) {
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
  for (auto& mu : means) {
    double n = 0.0;
    for (auto& v : mu) {
      v = rng.normal();
      n += v * v;
    }
    n = std::sqrt(n);
    for (auto& v : mu) v = n > 0 ? v / n * separation : 0.0;
  }
  return means;
}

Dataset sample_blobs(const std::vector<std::vector<double>>& means, std::size_t dim,
                     std::size_t per_class, double noise, Rng& rng) {
  const std::size_t classes = means.size();
  Dataset d;
  d.sample_shape = {dim};
  d.num_classes = classes;
  d.images.resize(classes * per_class * dim);
  d.labels.resize(classes * per_class);
  std::size_t s = 0;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i, ++s) {
      d.labels[s] = static_cast<std::uint8_t>(c);
      for (std::size_t j = 0; j < dim; ++j)
        d.images[s * dim + j] = static_cast<float>(means[c][j] + noise * rng.normal());
    }
  // Deterministic interleave so mini-batches mix classes.
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  Dataset out;
  out.sample_shape = d.sample_shape;
  out.num_classes = d.num_classes;
  out.images.resize(d.images.size());
  out.labels.resize(d.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.labels[i] = d.labels[order[i]];
    std::copy(d.images.begin() + order[i] * dim, d.images.begin() + (order[i] + 1) * dim,
              out.images.begin() + i * dim);
  }
  return out;
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) raise(ErrorCode::Io, "cannot open " + images_path);
  const std::uint32_t magic_i = read_be32(fi, images_path, 0);
  if (magic_i != 0x00000803u)
    raise(ErrorCode::Format, images_path + ": bad magic at byte offset 0 (expected 0x00000803)");
  const std::uint32_t n = read_be32(fi, images_path, 4);
  const std::uint32_t rows = read_be32(fi, images_path, 8);
  const std::uint32_t cols = read_be32(fi, images_path, 12);
  const auto pixels = read_payload(fi, images_path, std::size_t(n) * rows * cols, 16);

  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) raise(ErrorCode::Io, "cannot open " + labels_path);
  const std::uint32_t magic_l = read_be32(fl, labels_path, 0);
  if (magic_l != 0x00000801u)
    raise(ErrorCode::Format, labels_path + ": bad magic at byte offset 0 (expected 0x00000801)");
  const std::uint32_t nl = read_be32(fl, labels_path, 4);
  if (nl != n)
    raise(ErrorCode::Format, labels_path + ": label count " + std::to_string(nl) +
                                 " does not match image count " + std::to_string(n) +
                                 " (byte offset 4)");
  const auto raw_labels = read_payload(fl, labels_path, nl, 8);

  Dataset d;
  d.sample_shape = {std::size_t(rows) * cols};
  d.num_classes = 10;
  d.images.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    d.images[i] = static_cast<float>(pixels[i]) / 255.0f - 0.5f;
  d.labels.resize(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (raw_labels[i] > 9)
      raise(ErrorCode::Format, labels_path + ": label " + std::to_string(int(raw_labels[i])) +
                                   " out of range at byte offset " + std::to_string(8 + i));
    d.labels[i] = raw_labels[i];
  }
  return d;
}

Dataset synth_dataset(std::size_t classes, std::size_t dim, std::size_t per_class,
                      std::uint64_t seed, double separation, double noise) {
  if (classes == 0 || dim == 0 || per_class == 0)
    raise(ErrorCode::Config, "synth_dataset: counts must be positive");
  Rng rng(seed);
  const auto means = blob_means(classes, dim, rng, separation);
  return sample_blobs(means, dim, per_class, noise, rng);
}

std::pair<Dataset, Dataset> synth_split(std::size_t classes, std::size_t dim,
                                        std::size_t per_class, std::size_t test_per_class,
                                        std::uint64_t seed, double separation, double noise) {
  if (classes == 0 || dim == 0 || per_class == 0 || test_per_class == 0)
    raise(ErrorCode::Config, "synth_split: counts must be positive");
  Rng rng(seed);
  const auto means = blob_means(classes, dim, rng, separation);
  Dataset train = sample_blobs(means, dim, per_class, noise, rng);
  Dataset test = sample_blobs(means, dim, test_per_class, noise, rng);
  return {std::move(train), std::move(test)};
}

}  // namespace lyapnet
