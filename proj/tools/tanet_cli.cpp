// SPDX-License-Identifier: Apache-2.0
// tanet: prepare | train | eval | sr | ablate
//
// Precedence: command-line flag > --config file > built-in default.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tanet/commands.hpp"
#include "tanet/kernels.hpp"

namespace {

// Flags that map one-to-one onto config keys.
struct KeyFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr KeyFlag kCommonFlags[] = {
    {"--seed", "seed", "RNG seed (shuffle, init, augmentation)"},
    {"--out", "out_dir", "run directory (default runs/<timestamp>-seed<seed>)"},
    {"--scale", "scale", "upscaling factor (power of two, 4 or 8 in practice)"},
    {"--variant", "variant", "full | no_local | no_global"},
    {"--checkpoint", "checkpoint", "model checkpoint"},
    {"--data-dir", "data_dir", "directory of HR PNGs"},
    {"--manifest", "manifest", "manifest.tsv from prepare"},
    {"--split-counts", "split_counts", "train,val,test image counts"},
    {"--hr-size", "hr_size", "HR size HxW (or one number for square)"},
    {"--channels", "channels", "feature channels C"},
    {"--smfm", "smfm_count", "number of SMFMs G"},
    {"--rbs", "rb_per_smfm", "residual blocks per SMFM I"},
    {"--blocks", "transformer_blocks", "transformer blocks N"},
    {"--heads", "heads", "attention heads"},
    {"--attention", "attention_scope", "per_patch | full_image"},
    {"--epochs", "epochs", "training epochs"},
    {"--batch-size", "batch_size", "batch size"},
    {"--lr", "base_lr", "base learning rate"},
    {"--halve-every", "halve_every", "halve the learning rate every this many epochs"},
    {"--max-steps", "max_steps", "global step budget (0 = unlimited)"},
    {"--resume", "resume", "checkpoint to resume training from"},
    {"--split", "split", "evaluation split: train | val | test"},
    {"--metric-space", "metric_space", "rgb | y"},
    {"--lpips", "lpips", "CSV of image,lpips for the model outputs"},
    {"--scales", "ablate_scales", "comma-separated scales for ablate"},
};

struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;  // (key, value) in flag order
  std::vector<std::string> sets;                            // raw key=value
  std::optional<std::string> config;
};

void add_common(CLI::App* sub, Overrides& o, std::vector<std::optional<std::string>>& slots) {
  sub->add_option("--config", o.config, "key=value run config file");
  for (std::size_t i = 0; i < std::size(kCommonFlags); ++i)
    sub->add_option(kCommonFlags[i].flag, slots[i], kCommonFlags[i].help);
  sub->add_option("--set", o.sets, "override any config key: --set key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("TANET_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) tanet::kernels::set_max_threads(n);
  }

  CLI::App app{"TANet face super-resolution"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::optional<std::string>> slots(std::size(kCommonFlags));

  auto* prepare = app.add_subcommand("prepare", "scan images, split, cache HR/LR and write manifest.tsv");
  auto* train = app.add_subcommand("train", "train a model; writes loss.csv and checkpoints");
  auto* eval = app.add_subcommand("eval", "compare the model with bicubic on a split");
  auto* sr = app.add_subcommand("sr", "super-resolve one PNG");
  auto* ablate = app.add_subcommand("ablate", "train full / no_local / no_global and report");
  for (auto* sub : {prepare, train, eval, sr, ablate}) add_common(sub, o, slots);

  bool lr_on_load = false, no_augment = false, with_reference = false;
  prepare->add_flag("--lr-on-load", lr_on_load, "do not cache LR images; regenerate them on load");
  train->add_flag("--no-augment", no_augment, "disable dihedral augmentation");
  ablate->add_flag("--no-augment", no_augment, "disable dihedral augmentation");
  eval->add_flag("--with-reference", with_reference, "add an hr-vs-hr row");
  std::string input;
  std::optional<std::string> output;
  sr->add_option("input", input, "LR PNG")->required();
  sr->add_option("-o,--output", output, "output PNG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : tanet::kExitUsage;
  }

  tanet::RunConfig cfg;
  try {
    if (o.config) cfg.apply_file(*o.config);
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (slots[i]) cfg.set(kCommonFlags[i].key, *slots[i]);
    for (const auto& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw tanet::ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (lr_on_load) cfg.generate_lr_on_load = true;
    if (no_augment) cfg.augment = false;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return tanet::kExitUsage;
  }

  const tanet::CommandIO io{std::cout, std::cerr};
  if (*prepare) return tanet::cmd_prepare(cfg, io);
  if (*train) return tanet::cmd_train(cfg, io);
  if (*eval) return tanet::cmd_eval(cfg, with_reference, io);
  if (*sr) {
    std::optional<std::filesystem::path> out;
    if (output) out = *output;
    return tanet::cmd_sr(cfg, input, out, io);
  }
  return tanet::cmd_ablate(cfg, io);
}
