#include "io/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace lyapnet {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) raise(ErrorCode::Format, path + ": truncated checkpoint");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  const std::uint64_t lo = get_u32(is, path);
  const std::uint64_t hi = get_u32(is, path);
  return lo | (hi << 32);
}

double get_f64(std::istream& is, const std::string& path) {
  const std::uint64_t bits = get_u64(is, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_spec(std::ostream& os, const LayerSpec& s) {
  put_u32(os, static_cast<std::uint32_t>(s.kind));
  switch (s.kind) {
    case LayerKind::Dense:
      put_u32(os, static_cast<std::uint32_t>(s.in));
      put_u32(os, static_cast<std::uint32_t>(s.out));
      break;
    case LayerKind::Conv:
      put_u32(os, static_cast<std::uint32_t>(s.out_ch));
      put_u32(os, static_cast<std::uint32_t>(s.in_ch));
      put_u32(os, static_cast<std::uint32_t>(s.kh));
      put_u32(os, static_cast<std::uint32_t>(s.kw));
      put_u32(os, static_cast<std::uint32_t>(s.stride));
      put_u32(os, static_cast<std::uint32_t>(s.pad));
      break;
    case LayerKind::LeakyReLU:
      put_f64(os, s.slope);
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      put_u32(os, static_cast<std::uint32_t>(s.window));
      break;
    case LayerKind::Flatten:
      break;
    case LayerKind::Residual:
      put_u32(os, static_cast<std::uint32_t>(s.branch.size()));
      for (const auto& b : s.branch) write_spec(os, b);
      break;
  }
}

LayerSpec read_spec(std::istream& is, const std::string& path) {
  LayerSpec s;
  const std::uint32_t kind = get_u32(is, path);
  switch (kind) {
    case static_cast<std::uint32_t>(LayerKind::Dense): {
      const std::uint32_t in = get_u32(is, path);
      const std::uint32_t out = get_u32(is, path);
      s = LayerSpec::dense(in, out);
      break;
    }
    case static_cast<std::uint32_t>(LayerKind::Conv): {
      const std::uint32_t oc = get_u32(is, path), ic = get_u32(is, path);
      const std::uint32_t kh = get_u32(is, path), kw = get_u32(is, path);
      const std::uint32_t stride = get_u32(is, path), pad = get_u32(is, path);
      s = LayerSpec::conv(oc, ic, kh, kw, stride, pad);
      break;
    }
    case static_cast<std::uint32_t>(LayerKind::LeakyReLU):
      s = LayerSpec::leaky_relu(get_f64(is, path));
      break;
    case static_cast<std::uint32_t>(LayerKind::MaxPool):
      s = LayerSpec::max_pool(get_u32(is, path));
      break;
    case static_cast<std::uint32_t>(LayerKind::AvgPool):
      s = LayerSpec::avg_pool(get_u32(is, path));
      break;
    case static_cast<std::uint32_t>(LayerKind::Flatten):
      s = LayerSpec::flatten();
      break;
    case static_cast<std::uint32_t>(LayerKind::Residual): {
      const std::uint32_t n = get_u32(is, path);
      std::vector<LayerSpec> branch;
      branch.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) branch.push_back(read_spec(is, path));
      s = LayerSpec::residual(std::move(branch));
      break;
    }
    default:
      raise(ErrorCode::Format, path + ": unknown layer kind code " + std::to_string(kind));
  }
  return s;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void save_checkpoint(const ModelF& model, const std::string& path, std::uint64_t config_digest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(ErrorCode::Io, "cannot write " + path);
  os.write("LYAP", 4);
  put_u32(os, kCheckpointVersion);
  put_u64(os, config_digest);
  put_u32(os, static_cast<std::uint32_t>(model.input_shape().size()));
  for (std::size_t e : model.input_shape()) put_u32(os, static_cast<std::uint32_t>(e));
  put_u32(os, static_cast<std::uint32_t>(model.specs().size()));
  for (const auto& s : model.specs()) write_spec(os, s);
  for (const auto& p : model.params()) {
    for (const Tensor<float>* t : {static_cast<const Tensor<float>*>(p.layer->weight()),
                                   static_cast<const Tensor<float>*>(p.layer->bias())}) {
      for (float v : t->data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(os, bits);
      }
    }
  }
  if (!os) raise(ErrorCode::Io, "failed while writing " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(ErrorCode::Io, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LYAP", 4) != 0)
    raise(ErrorCode::Format, path + ": bad magic at byte offset 0 (expected \"LYAP\")");
  const std::uint32_t version = get_u32(is, path);
  if (version != kCheckpointVersion)
    raise(ErrorCode::Format, path + ": unsupported checkpoint version " + std::to_string(version) +
                                 " (expected " + std::to_string(kCheckpointVersion) + ")");
  LoadedCheckpoint out;
  out.config_digest = get_u64(is, path);
  const std::uint32_t rank = get_u32(is, path);
  Shape input(rank);
  for (auto& e : input) e = get_u32(is, path);
  const std::uint32_t nspecs = get_u32(is, path);
  std::vector<LayerSpec> specs;
  specs.reserve(nspecs);
  for (std::uint32_t i = 0; i < nspecs; ++i) specs.push_back(read_spec(is, path));
  Rng init_rng(0);
  out.model = ModelF::build(specs, input, init_rng);
  for (auto& p : out.model.params()) {
    for (Tensor<float>* t : {p.layer->weight(), p.layer->bias()}) {
      for (float& v : t->data) {
        const std::uint32_t bits = get_u32(is, path);
        std::memcpy(&v, &bits, 4);
      }
    }
  }
  is.peek();
  if (!is.eof()) raise(ErrorCode::Format, path + ": trailing bytes after payload");
  return out;
}

}  // namespace lyapnet
