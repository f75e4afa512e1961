#pragma once

#include <cstdint>
#include <string>

#include "nn/model.hpp"

namespace lyapnet {

// Binary model snapshot.
//   magic   "LYAP"
//   version u32 little-endian (currently 1)
//   config digest u64 little-endian (FNV-1a of the resolved config text)
//   input sample shape: u32 rank, u32 extents
//   layer table (recursive): u32 kind code + per-kind fields
//   payload: per parameterized layer in depth-first order, weights then bias,
//            little-endian f32
// Round-trips are bit-exact; a version mismatch is rejected.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t fnv1a64(const std::string& text);

void save_checkpoint(const ModelF& model, const std::string& path, std::uint64_t config_digest);

struct LoadedCheckpoint {
  ModelF model;
  std::uint64_t config_digest = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lyapnet
