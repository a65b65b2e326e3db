// SPDX-License-Identifier: Apache-2.0
#pragma once

// Subcommand bodies behind the `tanet` binary. Each returns a process exit
// code and never throws: 0 success, 1 usage/config error, 2 data error
// (including unreadable images, bad checkpoints, inputs violating the patch
// constraint), 3 numerical abort.
//
// Artifacts go to one run directory: out_dir when set, otherwise
// runs/<YYYYmmdd-HHMMSS>-seed<seed>.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "tanet/run_config.hpp"

namespace tanet {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

struct CommandIO {
  std::ostream& out;
  std::ostream& err;
};

std::filesystem::path resolve_run_dir(const RunConfig& cfg);

/// data_dir -> <run>/manifest.tsv plus hr/ and lr/ caches.
int cmd_prepare(const RunConfig& cfg, CommandIO io);

/// Trains on the manifest's train split (val split for per-epoch validation).
/// Writes loss.csv, last.ckpt, best.ckpt and config.txt. With `resume` set,
/// step numbering continues and loss.csv is appended to.
int cmd_train(const RunConfig& cfg, CommandIO io);

/// Bicubic baseline plus, when a checkpoint is given, the model; per-image
/// and mean rows to eval.csv. `with_reference` adds an "hr" row comparing the
/// ground truth with itself.
int cmd_eval(const RunConfig& cfg, bool with_reference, CommandIO io);

/// Super-resolves one PNG with the checkpoint. Output defaults to
/// <run>/<stem>_x<scale>.png.
int cmd_sr(const RunConfig& cfg, const std::filesystem::path& input,
           const std::optional<std::filesystem::path>& output, CommandIO io);

/// Trains full, no_local and no_global under one schedule and seed for every
/// scale and writes ablation.csv.
int cmd_ablate(const RunConfig& cfg, CommandIO io);

/// Number of trailing steps averaged into the ablation report's final_loss.
inline constexpr std::size_t kFinalLossWindow = 10;

}  // namespace tanet
