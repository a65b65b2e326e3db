// SPDX-License-Identifier: Apache-2.0
#include "tanet/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace tanet {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::optional<std::filesystem::path> to_path(std::string_view v) {
  if (v.empty()) return std::nullopt;
  return std::filesystem::path(std::string(v));
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string_view>& run_config_keys() {
  static const std::vector<std::string_view> keys = {
      "channels",       "smfm_count",   "rb_per_smfm", "transformer_blocks", "heads",
      "patch_h",        "patch_w",      "scale",       "attention_scope",    "layer_norm",
      "variant",        "base_lr",      "halve_every", "epochs",             "batch_size",
      "seed",           "max_steps",    "augment",     "data_dir",           "out_dir",
      "manifest",       "checkpoint",   "resume",      "lpips",              "split_counts",
      "hr_size",        "lr_on_load",   "split",       "metric_space",       "ablate_scales",
  };
  return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  ModelConfig& m = model;
  TrainSchedule& s = schedule;
  if (key == "channels") m.channels = to_u64(key, value);
  else if (key == "smfm_count") m.smfm_count = to_u64(key, value);
  else if (key == "rb_per_smfm") m.rb_per_smfm = to_u64(key, value);
  else if (key == "transformer_blocks") m.transformer_blocks = to_u64(key, value);
  else if (key == "heads") m.heads = to_u64(key, value);
  else if (key == "patch_h") m.patch_h = to_u64(key, value);
  else if (key == "patch_w") m.patch_w = to_u64(key, value);
  else if (key == "scale") m.scale = to_u64(key, value);
  else if (key == "attention_scope") m.attention_scope = parse_attention_scope(value);
  else if (key == "layer_norm") m.use_layer_norm = to_bool(key, value);
  else if (key == "variant") m.variant = parse_variant(value);
  else if (key == "base_lr") s.base_lr = to_double(key, value);
  else if (key == "halve_every") s.halve_every = to_u64(key, value);
  else if (key == "epochs") s.epochs = to_u64(key, value);
  else if (key == "batch_size") s.batch_size = to_u64(key, value);
  else if (key == "seed") s.seed = to_u64(key, value);
  else if (key == "max_steps") s.max_steps = to_u64(key, value);
  else if (key == "augment") augment = to_bool(key, value);
  else if (key == "data_dir") data_dir = to_path(value);
  else if (key == "out_dir") out_dir = to_path(value);
  else if (key == "manifest") manifest = to_path(value);
  else if (key == "checkpoint") checkpoint = to_path(value);
  else if (key == "resume") resume = to_path(value);
  else if (key == "lpips") lpips = to_path(value);
  else if (key == "split_counts") split_counts = parse_split_counts(value);
  else if (key == "hr_size") {
    const auto x = value.find('x');
    if (x == std::string_view::npos) {
      hr_height = hr_width = to_u64(key, value);
    } else {
      hr_height = to_u64(key, value.substr(0, x));
      hr_width = to_u64(key, value.substr(x + 1));
    }
  } else if (key == "lr_on_load") generate_lr_on_load = to_bool(key, value);
  else if (key == "split") eval_split = parse_split(value);
  else if (key == "metric_space") {
    try {
      metric_space = parse_metric_space(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "ablate_scales") {
    ablate_scales.clear();
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      ablate_scales.push_back(to_u64(key, trim(rest.substr(0, comma))));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void RunConfig::apply_text(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    try {
      set(trim(v.substr(0, eq)), v.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::apply_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config file " + file.string());
  apply_text(is, file.string());
}

void RunConfig::write(std::ostream& os) const {
  auto path_or_empty = [](const std::optional<std::filesystem::path>& p) { return p ? p->string() : std::string(); };
  std::string scales;
  for (std::size_t i = 0; i < ablate_scales.size(); ++i) scales += (i ? "," : "") + std::to_string(ablate_scales[i]);
  os << "channels=" << model.channels << '\n'
     << "smfm_count=" << model.smfm_count << '\n'
     << "rb_per_smfm=" << model.rb_per_smfm << '\n'
     << "transformer_blocks=" << model.transformer_blocks << '\n'
     << "heads=" << model.heads << '\n'
     << "patch_h=" << model.patch_h << '\n'
     << "patch_w=" << model.patch_w << '\n'
     << "scale=" << model.scale << '\n'
     << "attention_scope=" << to_string(model.attention_scope) << '\n'
     << "layer_norm=" << (model.use_layer_norm ? "true" : "false") << '\n'
     << "variant=" << to_string(model.variant) << '\n'
     << "base_lr=" << fmt_double(schedule.base_lr) << '\n'
     << "halve_every=" << schedule.halve_every << '\n'
     << "epochs=" << schedule.epochs << '\n'
     << "batch_size=" << schedule.batch_size << '\n'
     << "seed=" << schedule.seed << '\n'
     << "max_steps=" << schedule.max_steps << '\n'
     << "augment=" << (augment ? "true" : "false") << '\n'
     << "data_dir=" << path_or_empty(data_dir) << '\n'
     << "out_dir=" << path_or_empty(out_dir) << '\n'
     << "manifest=" << path_or_empty(manifest) << '\n'
     << "checkpoint=" << path_or_empty(checkpoint) << '\n'
     << "resume=" << path_or_empty(resume) << '\n'
     << "lpips=" << path_or_empty(lpips) << '\n'
     << "split_counts=" << to_string(split_counts) << '\n'
     << "hr_size=" << hr_height << 'x' << hr_width << '\n'
     << "lr_on_load=" << (generate_lr_on_load ? "true" : "false") << '\n'
     << "split=" << to_string(eval_split) << '\n'
     << "metric_space=" << to_string(metric_space) << '\n'
     << "ablate_scales=" << scales << '\n';
}

}  // namespace tanet
