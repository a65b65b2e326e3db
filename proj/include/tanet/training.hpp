// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tanet/checkpoint.hpp"
#include "tanet/image.hpp"
#include "tanet/model.hpp"

namespace tanet {

/// Non-finite loss or gradient.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed training data (empty set, HR/LR size disagreement).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor> m;  // aligned with TANetParams iteration order
  std::vector<Tensor> v;
};

/// Zeroed moments shaped like `params`.
AdamState make_adam(const TANetParams& params);

/// Bias-corrected Adam update from each parameter's gradient slot (a missing
/// slot counts as zero gradient). Throws NumericalError naming the parameter
/// when a gradient is not finite; parameters are untouched in that case.
void adam_step(TANetParams& params, AdamState& state);

struct TrainSchedule {
  double base_lr = 2e-4;
  std::size_t halve_every = 60;
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  /// Global step budget; 0 means run all epochs.
  std::uint64_t max_steps = 0;

  /// base_lr * 0.5^floor(epoch / halve_every)
  double lr(std::size_t epoch) const;
};

/// Applies the same dihedral transform to both images.
std::pair<Image, Image> augment(const Image& hr, const Image& lr, Dihedral d);
/// Draws one of the 8 dihedral transforms (4 for non-square images, which
/// keep their orientation so batches stay stackable).
Dihedral draw_dihedral(const Image& img, Rng& rng);
std::pair<Image, Image> augment(const Image& hr, const Image& lr, Rng& rng);

struct TrainPair {
  std::string name;
  Image hr;
  Image lr;
};

struct LossRecord {
  std::uint64_t step = 0;  // 1-based
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainOptions {
  /// When set, last.ckpt (every epoch end and at stop) and best.ckpt (best
  /// validation PSNR) are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Continue from this checkpoint's parameters and optimizer state.
  std::optional<Checkpoint> resume;
  std::function<void(const LossRecord&)> on_step;
  std::function<void(std::size_t epoch, double val_psnr, double val_ssim)> on_epoch;
  bool augment = true;
};

struct TrainResult {
  TANetParams params;
  AdamState adam;
  std::vector<LossRecord> history;
  std::uint64_t steps = 0;
  double best_val_psnr = -std::numeric_limits<double>::infinity();
  /// Hash of the sample order and augmentation draws actually consumed.
  std::uint64_t order_digest = 0;
};

/// Epoch loop: seeded shuffle, augmentation, forward, L1 loss, backward,
/// Adam with the scheduled learning rate. Bit-deterministic for a fixed seed.
TrainResult train(const std::vector<TrainPair>& train_set, const std::vector<TrainPair>& val_set,
                  const ModelConfig& cfg, const TrainSchedule& sched, const TrainOptions& opts = {});

void write_loss_csv_header(std::ostream& os);
void write_loss_csv_row(std::ostream& os, const LossRecord& r);

}  // namespace tanet
