// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dual-path face super-resolution network: shallow conv, Transformer global
// path, SMFM local path, global-local aggregation (GLAM), sub-pixel upscale
// and a 3x3 reconstruction conv.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tanet/ops.hpp"
#include "tanet/tape.hpp"
#include "tanet/tensor.hpp"

namespace tanet {

enum class AttentionScope : std::uint32_t { per_patch = 0, full_image = 1 };
enum class Variant : std::uint32_t { full = 0, no_local = 1, no_global = 2 };

std::string_view to_string(AttentionScope s);
std::string_view to_string(Variant v);
AttentionScope parse_attention_scope(std::string_view s);
Variant parse_variant(std::string_view s);

/// Raised for invalid configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  std::size_t channels = 64;           // C
  std::size_t smfm_count = 10;         // G
  std::size_t rb_per_smfm = 10;        // I
  std::size_t transformer_blocks = 4;  // N
  std::size_t heads = 4;
  std::size_t patch_h = 4;
  std::size_t patch_w = 4;
  std::size_t scale = 4;
  AttentionScope attention_scope = AttentionScope::per_patch;
  bool use_layer_norm = true;
  Variant variant = Variant::full;

  bool has_global() const { return variant != Variant::no_global; }
  bool has_local() const { return variant != Variant::no_local; }
  std::size_t head_dim() const { return channels / heads; }
  std::size_t tokens_per_patch() const { return patch_h * patch_w; }
  std::size_t upscale_stages() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Throws ShapeError unless an h x w input satisfies the patch constraint.
  void check_input(std::size_t h, std::size_t w) const;

  bool operator==(const ModelConfig&) const = default;
};

/// Learnable parameters addressed by hierarchical dotted name, e.g.
/// "local.smfm0.rb1.conv2.weight". Iteration order is lexicographic.
class TANetParams {
 public:
  using Map = std::map<std::string, Tensor, std::less<>>;

  void insert(std::string name, Tensor t);
  bool contains(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  Map& tensors() { return tensors_; }
  const Map& tensors() const { return tensors_; }
  std::size_t tensor_count() const { return tensors_.size(); }
  /// Total number of scalar parameters.
  std::size_t parameter_count() const;

  void set_requires_grad(bool on);
  void clear_grads();

 private:
  Map tensors_;
};

TANetParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// Parameters registered on one tape.
class BoundParams {
 public:
  Var operator[](std::string_view name) const;
  bool contains(std::string_view name) const { return vars_.find(name) != vars_.end(); }

 private:
  friend BoundParams bind(Tape&, TANetParams&);
  friend BoundParams bind_const(Tape&, const TANetParams&);
  friend BoundParams bind_vars(const TANetParams&, std::span<const Var>);
  std::map<std::string, Var, std::less<>> vars_;
};

/// Registers every parameter as a tape leaf (gradients flow back into the
/// tensors' gradient slots when their requires_grad flag is set).
BoundParams bind(Tape& tape, TANetParams& params);
/// Read-only binding for inference.
BoundParams bind_const(Tape& tape, const TANetParams& params);

/// Pairs already-recorded vars with parameter names, in `layout` iteration
/// order (used by grad_check, which owns the leaves).
BoundParams bind_vars(const TANetParams& layout, std::span<const Var> vars);

/// Intermediate activations, captured when a bundle is passed to forward().
struct FeatureBundle {
  Tensor f_shallow;
  Tensor f_global;
  Tensor f_local;
  Tensor f_gl;
  Tensor f_up;
};

Var shallow_extract(const Var& img, const BoundParams& p, const ModelConfig& cfg);

/// B x C x h x w -> (B*P) x T x C in per-patch scope or B x (P*T) x C in
/// full-image scope, T = patch_h * patch_w, patches in row-major order.
Var tokenize(const Var& f, const ModelConfig& cfg);
Var detokenize(const Var& tokens, const ModelConfig& cfg, std::size_t batch, std::size_t h, std::size_t w);

/// One pre-norm (optional) block: y = attn(x) + x; out = mlp(y) + y.
Var transformer_block(const Var& tokens, const BoundParams& p, std::size_t block, const ModelConfig& cfg);
Var global_path(const Var& f_shallow, const BoundParams& p, const ModelConfig& cfg);

Var residual_block(const Var& x, const BoundParams& p, std::size_t smfm, std::size_t rb);
Var smfm(const Var& f_in, const BoundParams& p, std::size_t index, const ModelConfig& cfg);
Var local_path(const Var& f_shallow, const BoundParams& p, const ModelConfig& cfg);

/// Either path may be absent (ablation variants); its fine-tuned feature is
/// replaced by zeros at the concatenation.
Var glam(const std::optional<Var>& f_global, const std::optional<Var>& f_local, const BoundParams& p,
         const ModelConfig& cfg);
Var upscale_reconstruct(const Var& f_gl, const Var& f_shallow, const BoundParams& p, const ModelConfig& cfg,
                        FeatureBundle* debug = nullptr);

/// Full network, img: B x 3 x h x w -> B x 3 x (scale h) x (scale w). Output is unclamped.
Var forward(const Var& img, const BoundParams& p, const ModelConfig& cfg, FeatureBundle* debug = nullptr);

/// Forward without gradient tracking.
Tensor super_resolve(const Tensor& img, const TANetParams& params, const ModelConfig& cfg);

namespace param_names {
std::string shallow(std::string_view leaf);
std::string pos_encoding();
std::string block(std::size_t n, std::string_view leaf);
std::string rb(std::size_t g, std::size_t i, std::string_view leaf);
std::string smfm(std::size_t g, std::string_view leaf);
std::string glam(std::string_view leaf);
std::string upscale(std::size_t stage, std::string_view leaf);
std::string recon(std::string_view leaf);
}  // namespace param_names

}  // namespace tanet
