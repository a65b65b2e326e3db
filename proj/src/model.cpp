// SPDX-License-Identifier: Apache-2.0
#include "tanet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace tanet {

std::string_view to_string(AttentionScope s) { return s == AttentionScope::per_patch ? "per_patch" : "full_image"; }

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full:
      return "full";
    case Variant::no_local:
      return "no_local";
    case Variant::no_global:
      return "no_global";
  }
  return "?";
}

AttentionScope parse_attention_scope(std::string_view s) {
  if (s == "per_patch" || s == "per-patch") return AttentionScope::per_patch;
  if (s == "full_image" || s == "full-image") return AttentionScope::full_image;
  throw ConfigError("attention_scope must be per_patch or full_image, got '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::full;
  if (s == "no_local") return Variant::no_local;
  if (s == "no_global") return Variant::no_global;
  throw ConfigError("variant must be full, no_local or no_global, got '" + std::string(s) + "'");
}

std::size_t ModelConfig::upscale_stages() const {
  std::size_t n = 0;
  for (std::size_t s = scale; s > 1; s >>= 1) ++n;
  return n;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(channels, "channels");
  positive(heads, "heads");
  positive(patch_h, "patch_h");
  positive(patch_w, "patch_w");
  if (channels % heads != 0)
    throw ConfigError("channels (" + std::to_string(channels) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  if (scale < 2 || (scale & (scale - 1)) != 0)
    throw ConfigError("scale must be a power of 2, got " + std::to_string(scale));
  if (static_cast<std::uint32_t>(variant) > 2) throw ConfigError("unknown variant");
  if (static_cast<std::uint32_t>(attention_scope) > 1) throw ConfigError("unknown attention_scope");
}

namespace {

void check_patch_grid(const ModelConfig& cfg, std::size_t h, std::size_t w) {
  const std::size_t patch_h = cfg.patch_h, patch_w = cfg.patch_w;
  if (h % patch_h != 0 || w % patch_w != 0)
    throw ShapeError("input " + std::to_string(h) + "x" + std::to_string(w) + " violates the " +
                     std::to_string(patch_h) + "x" + std::to_string(patch_w) +
                     " patch constraint: height must be divisible by " + std::to_string(patch_h) +
                     " and width by " + std::to_string(patch_w));
}

}  // namespace

void ModelConfig::check_input(std::size_t h, std::size_t w) const {
  if (h == 0 || w == 0) throw ShapeError("input image is empty");
  if (has_global()) check_patch_grid(*this, h, w);
}

// ---------------------------------------------------------------------------

void TANetParams::insert(std::string name, Tensor t) {
  auto [it, fresh] = tensors_.emplace(std::move(name), std::move(t));
  if (!fresh) throw std::logic_error("duplicate parameter name: " + it->first);
}

Tensor& TANetParams::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return it->second;
}

const Tensor& TANetParams::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return it->second;
}

std::size_t TANetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

void TANetParams::set_requires_grad(bool on) {
  for (auto& [_, t] : tensors_) t.set_requires_grad(on);
}

void TANetParams::clear_grads() {
  for (auto& [_, t] : tensors_) t.clear_grad();
}

namespace param_names {
std::string shallow(std::string_view leaf) { return "shallow." + std::string(leaf); }
std::string pos_encoding() { return "global.pos"; }
std::string block(std::size_t n, std::string_view leaf) {
  return "global.block" + std::to_string(n) + "." + std::string(leaf);
}
std::string rb(std::size_t g, std::size_t i, std::string_view leaf) {
  return "local.smfm" + std::to_string(g) + ".rb" + std::to_string(i) + "." + std::string(leaf);
}
std::string smfm(std::size_t g, std::string_view leaf) {
  return "local.smfm" + std::to_string(g) + "." + std::string(leaf);
}
std::string glam(std::string_view leaf) { return "glam." + std::string(leaf); }
std::string upscale(std::size_t stage, std::string_view leaf) {
  return "up.stage" + std::to_string(stage) + "." + std::string(leaf);
}
std::string recon(std::string_view leaf) { return "recon." + std::string(leaf); }
}  // namespace param_names

namespace {

namespace pn = param_names;

void add_conv(TANetParams& p, Rng& rng, const std::string& prefix, std::size_t cout, std::size_t cin, std::size_t k,
              bool zero_bias = false) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
  p.insert(prefix + ".weight", Tensor::uniform({cout, cin, k, k}, rng, -bound, bound));
  p.insert(prefix + ".bias", zero_bias ? Tensor::zeros({cout}) : Tensor::uniform({cout}, rng, -bound, bound));
}

}  // namespace

TANetParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  TANetParams p;
  const std::size_t c = cfg.channels;

  add_conv(p, rng, "shallow", c, 3, 3);

  if (cfg.has_global()) {
    p.insert(pn::pos_encoding(), Tensor::normal({cfg.tokens_per_patch(), c}, rng, 0.02));
    for (std::size_t n = 0; n < cfg.transformer_blocks; ++n) {
      if (cfg.use_layer_norm) {
        p.insert(pn::block(n, "norm1.gamma"), Tensor::full({c}, 1.0));
        p.insert(pn::block(n, "norm1.beta"), Tensor::zeros({c}));
        p.insert(pn::block(n, "norm2.gamma"), Tensor::full({c}, 1.0));
        p.insert(pn::block(n, "norm2.beta"), Tensor::zeros({c}));
      }
      p.insert(pn::block(n, "attn.wq"), Tensor::normal({c, c}, rng, 0.02));
      p.insert(pn::block(n, "attn.wk"), Tensor::normal({c, c}, rng, 0.02));
      p.insert(pn::block(n, "attn.wv"), Tensor::normal({c, c}, rng, 0.02));
      p.insert(pn::block(n, "mlp.fc1.weight"), Tensor::normal({c, 4 * c}, rng, 0.02));
      p.insert(pn::block(n, "mlp.fc1.bias"), Tensor::zeros({4 * c}));
      p.insert(pn::block(n, "mlp.fc2.weight"), Tensor::zeros({4 * c, c}));
      p.insert(pn::block(n, "mlp.fc2.bias"), Tensor::zeros({c}));
    }
    add_conv(p, rng, pn::glam("global_ft"), c, c, 1);
  }

  if (cfg.has_local()) {
    for (std::size_t g = 0; g < cfg.smfm_count; ++g) {
      for (std::size_t i = 0; i < cfg.rb_per_smfm; ++i) {
        add_conv(p, rng, pn::rb(g, i, "conv1"), c, c, 3);
        add_conv(p, rng, pn::rb(g, i, "conv2"), c, c, 3);
      }
      add_conv(p, rng, pn::smfm(g, "cal1"), c, c, 1);
      add_conv(p, rng, pn::smfm(g, "cal2"), c, c, 1);
      add_conv(p, rng, pn::smfm(g, "fuse"), c, 2 * c, 1);
    }
    add_conv(p, rng, pn::glam("local_ft"), c, c, 3);
  }

  add_conv(p, rng, pn::glam("fuse"), c, 2 * c, 1, /*zero_bias=*/true);
  for (std::size_t s = 0; s < cfg.upscale_stages(); ++s) add_conv(p, rng, pn::upscale(s, "conv"), 4 * c, c, 3);
  add_conv(p, rng, "recon", 3, c, 3);
  return p;
}

// ---------------------------------------------------------------------------

Var BoundParams::operator[](std::string_view name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("parameter not bound: " + std::string(name));
  return it->second;
}

BoundParams bind(Tape& tape, TANetParams& params) {
  BoundParams b;
  for (auto& [name, t] : params.tensors()) b.vars_.emplace(name, tape.leaf(t));
  return b;
}

BoundParams bind_const(Tape& tape, const TANetParams& params) {
  BoundParams b;
  for (const auto& [name, t] : params.tensors()) b.vars_.emplace(name, tape.view(t));
  return b;
}

BoundParams bind_vars(const TANetParams& layout, std::span<const Var> vars) {
  if (vars.size() != layout.tensor_count())
    throw std::invalid_argument("bind_vars: got " + std::to_string(vars.size()) + " vars for " +
                                std::to_string(layout.tensor_count()) + " parameters");
  BoundParams b;
  std::size_t i = 0;
  for (const auto& [name, t] : layout.tensors()) {
    if (vars[i].shape() != t.shape()) throw ShapeError("bind_vars: shape mismatch for " + name);
    b.vars_.emplace(name, vars[i++]);
  }
  return b;
}

namespace {

Var conv(const Var& x, const BoundParams& p, const std::string& prefix) {
  const Var w = p[prefix + ".weight"];
  return conv2d(x, w, p[prefix + ".bias"], 1, w.dim(2) / 2);
}

Var zeros_like(const Var& x) { return x.tape()->constant(Tensor::zeros(x.shape())); }

Var linear(const Var& x, const BoundParams& p, const std::string& prefix) {
  return add_tiled(matmul(x, p[prefix + ".weight"]), p[prefix + ".bias"]);
}

}  // namespace

Var shallow_extract(const Var& img, const BoundParams& p, const ModelConfig&) {
  if (img.rank() != 4 || img.dim(1) != 3)
    throw ShapeError("shallow_extract: expected B x 3 x h x w image, got " + to_string(img.shape()));
  return conv(img, p, "shallow");
}

Var tokenize(const Var& f, const ModelConfig& cfg) {
  if (f.rank() != 4) throw ShapeError("tokenize: expected B x C x h x w, got " + to_string(f.shape()));
  const std::size_t b = f.dim(0), c = f.dim(1), h = f.dim(2), w = f.dim(3);
  check_patch_grid(cfg, h, w);
  const std::size_t ph = cfg.patch_h, pw = cfg.patch_w;
  Var t = reshape(f, {b, c, h / ph, ph, w / pw, pw});
  t = permute(t, {0, 2, 4, 3, 5, 1});
  const std::size_t patches = (h / ph) * (w / pw);
  if (cfg.attention_scope == AttentionScope::per_patch) return reshape(t, {b * patches, ph * pw, c});
  return reshape(t, {b, patches * ph * pw, c});
}

Var detokenize(const Var& tokens, const ModelConfig& cfg, std::size_t batch, std::size_t h, std::size_t w) {
  const std::size_t ph = cfg.patch_h, pw = cfg.patch_w;
  const std::size_t c = tokens.shape().back();
  if (tokens.value().size() != batch * c * h * w)
    throw ShapeError("detokenize: token tensor " + to_string(tokens.shape()) + " does not cover a " +
                     std::to_string(h) + "x" + std::to_string(w) + " map");
  check_patch_grid(cfg, h, w);
  Var t = reshape(tokens, {batch, h / ph, w / pw, ph, pw, c});
  t = permute(t, {0, 5, 1, 3, 2, 4});
  return reshape(t, {batch, c, h, w});
}

Var transformer_block(const Var& x, const BoundParams& p, std::size_t n, const ModelConfig& cfg) {
  namespace pn = param_names;
  if (x.rank() != 3 || x.dim(2) != cfg.channels)
    throw ShapeError("transformer_block: expected S x L x " + std::to_string(cfg.channels) + " tokens, got " +
                     to_string(x.shape()));
  const std::size_t seqs = x.dim(0), len = x.dim(1), c = cfg.channels, heads = cfg.heads, d = cfg.head_dim();

  const Var h = cfg.use_layer_norm ? layer_norm(x, p[pn::block(n, "norm1.gamma")], p[pn::block(n, "norm1.beta")]) : x;
  auto split = [&](const Var& m) { return permute(reshape(m, {seqs, len, heads, d}), {0, 2, 1, 3}); };
  const Var q = split(matmul(h, p[pn::block(n, "attn.wq")]));
  const Var k = split(matmul(h, p[pn::block(n, "attn.wk")]));
  const Var v = split(matmul(h, p[pn::block(n, "attn.wv")]));

  const Var scores = scale(matmul(q, transpose_last2(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  const Var attended = matmul(softmax_lastdim(scores), v);
  const Var weighted = reshape(permute(attended, {0, 2, 1, 3}), {seqs, len, c});

  const Var y = add(weighted, x);
  const Var h2 = cfg.use_layer_norm ? layer_norm(y, p[pn::block(n, "norm2.gamma")], p[pn::block(n, "norm2.beta")]) : y;
  const Var mlp = linear(gelu(linear(h2, p, pn::block(n, "mlp.fc1"))), p, pn::block(n, "mlp.fc2"));
  return add(mlp, y);
}

Var global_path(const Var& f, const BoundParams& p, const ModelConfig& cfg) {
  if (!cfg.has_global()) throw std::logic_error("global_path called for variant " + std::string(to_string(cfg.variant)));
  const std::size_t b = f.dim(0), c = f.dim(1), h = f.dim(2), w = f.dim(3);
  ModelConfig patch_cfg = cfg;
  patch_cfg.attention_scope = AttentionScope::per_patch;
  // Positional encoding is shared across patches, so add it on the per-patch view.
  Var t = add_tiled(tokenize(f, patch_cfg), p[param_names::pos_encoding()]);
  if (cfg.attention_scope == AttentionScope::full_image) t = reshape(t, {b, t.value().size() / (b * c), c});
  for (std::size_t n = 0; n < cfg.transformer_blocks; ++n) t = transformer_block(t, p, n, cfg);
  return detokenize(t, cfg, b, h, w);
}

Var residual_block(const Var& x, const BoundParams& p, std::size_t g, std::size_t i) {
  namespace pn = param_names;
  return conv(relu(conv(x, p, pn::rb(g, i, "conv1"))), p, pn::rb(g, i, "conv2"));
}

Var smfm(const Var& f_in, const BoundParams& p, std::size_t g, const ModelConfig& cfg) {
  namespace pn = param_names;
  Var res = f_in;
  for (std::size_t i = 0; i < cfg.rb_per_smfm; ++i) res = residual_block(res, p, g, i);
  if (cfg.rb_per_smfm == 0) res = zeros_like(f_in);
  const Var weight_cal = sigmoid(conv(conv(f_in, p, pn::smfm(g, "cal1")), p, pn::smfm(g, "cal2")));
  const Var calibrated = mul(weight_cal, f_in);
  const Var fused = conv(concat_channels(res, calibrated), p, pn::smfm(g, "fuse"));
  return add(add(res, fused), f_in);
}

Var local_path(const Var& f, const BoundParams& p, const ModelConfig& cfg) {
  if (!cfg.has_local()) throw std::logic_error("local_path called for variant " + std::string(to_string(cfg.variant)));
  Var out = f;
  for (std::size_t g = 0; g < cfg.smfm_count; ++g) out = smfm(out, p, g, cfg);
  return out;
}

Var glam(const std::optional<Var>& f_global, const std::optional<Var>& f_local, const BoundParams& p,
         const ModelConfig&) {
  namespace pn = param_names;
  if (!f_global && !f_local) throw std::logic_error("glam needs at least one path");
  if (f_global && f_local && f_global->shape() != f_local->shape())
    throw ShapeError("glam: path shapes differ " + to_string(f_global->shape()) + " vs " +
                     to_string(f_local->shape()));
  const Var g_ft = f_global ? conv(*f_global, p, pn::glam("global_ft")) : Var{};
  const Var l_ft = f_local ? conv(*f_local, p, pn::glam("local_ft")) : Var{};
  const Var g_in = f_global ? g_ft : zeros_like(l_ft);
  const Var l_in = f_local ? l_ft : zeros_like(g_ft);
  return conv(concat_channels(g_in, l_in), p, pn::glam("fuse"));
}

Var upscale_reconstruct(const Var& f_gl, const Var& f_shallow, const BoundParams& p, const ModelConfig& cfg,
                        FeatureBundle* debug) {
  if (cfg.scale < 2 || (cfg.scale & (cfg.scale - 1)) != 0)
    throw ConfigError("scale must be a power of 2, got " + std::to_string(cfg.scale));
  Var up = add(f_gl, f_shallow);
  for (std::size_t s = 0; s < cfg.upscale_stages(); ++s) up = pixel_shuffle(conv(up, p, param_names::upscale(s, "conv")), 2);
  if (debug) debug->f_up = up.value();
  return conv(up, p, "recon");
}

Var forward(const Var& img, const BoundParams& p, const ModelConfig& cfg, FeatureBundle* debug) {
  if (img.rank() != 4) throw ShapeError("forward: expected B x 3 x h x w image, got " + to_string(img.shape()));
  cfg.check_input(img.dim(2), img.dim(3));
  const Var shallow = shallow_extract(img, p, cfg);
  std::optional<Var> g, l;
  if (cfg.has_global()) g = global_path(shallow, p, cfg);
  if (cfg.has_local()) l = local_path(shallow, p, cfg);
  const Var fused = glam(g, l, p, cfg);
  if (debug) {
    debug->f_shallow = shallow.value();
    debug->f_global = g ? g->value() : Tensor::zeros(shallow.shape());
    debug->f_local = l ? l->value() : Tensor::zeros(shallow.shape());
    debug->f_gl = fused.value();
  }
  return upscale_reconstruct(fused, shallow, p, cfg, debug);
}

Tensor super_resolve(const Tensor& img, const TANetParams& params, const ModelConfig& cfg) {
  Tape tape;
  const BoundParams p = bind_const(tape, params);
  return forward(tape.view(img), p, cfg).value();
}

}  // namespace tanet
