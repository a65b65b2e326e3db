// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary checkpoint, little-endian throughout:
//
//   "TANC"                     4 bytes magic
//   u32 version                currently 1
//   ModelConfig                11 x u32: channels, smfm_count, rb_per_smfm,
//                              transformer_blocks, heads, patch_h, patch_w,
//                              scale, attention_scope, use_layer_norm, variant
//   u32 parameter count
//   per parameter:             u32 name length, name bytes, u8 dtype tag
//                              (1 = float64), u32 rank, rank x u64 extents,
//                              raw data
//   u8 has_training_state
//   [training state]           u64 step, u32 epochs_done, u64 adam_t,
//                              then Adam m and v for every parameter in the
//                              same order (raw float64, extents implied)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tanet/model.hpp"

namespace tanet {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Optimizer progress carried alongside the parameters for resume.
struct TrainingState {
  std::uint64_t step = 0;
  std::uint32_t epochs_done = 0;
  std::uint64_t adam_t = 0;
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
};

struct Checkpoint {
  ModelConfig config;
  TANetParams params;
  std::optional<TrainingState> state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws CheckpointError on bad magic, unknown version, truncation, or when
/// the stored parameters do not match the layout implied by the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As above, additionally rejecting a stored config that differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace tanet
