// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat key=value run configuration. '#' starts a comment, blank lines are
// ignored, unknown keys are rejected. Values are layered: built-in defaults,
// then the config file, then command-line overrides.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tanet/data.hpp"
#include "tanet/metrics.hpp"
#include "tanet/model.hpp"
#include "tanet/training.hpp"

namespace tanet {

struct RunConfig {
  ModelConfig model;
  TrainSchedule schedule;

  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> lpips;

  SplitCounts split_counts{38, 1, 1};
  std::size_t hr_height = 64;
  std::size_t hr_width = 64;
  bool generate_lr_on_load = false;
  Split eval_split = Split::test;
  MetricSpace metric_space = MetricSpace::rgb;
  bool augment = true;
  /// Scales swept by ablate; empty means just model.scale.
  std::vector<std::size_t> ablate_scales;

  /// Sets one key; throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies every line of a config file.
  void apply_file(const std::filesystem::path& file);
  void apply_text(std::istream& is, const std::string& source = "<config>");

  /// Every key with its current value, one "key=value" per line, in a fixed
  /// order. Feeding the output back through apply_text reproduces the config.
  void write(std::ostream& os) const;
};

/// Keys accepted by RunConfig::set, in write() order.
const std::vector<std::string_view>& run_config_keys();

}  // namespace tanet
