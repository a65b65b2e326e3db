// SPDX-License-Identifier: Apache-2.0
#include "tanet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace tanet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'A', 'N', 'C'};
constexpr std::uint8_t kFloat64 = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& os) : os_(os) {}
  template <class T>
  void put(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

 private:
  std::ofstream& os_;
};

class Reader {
 public:
  Reader(std::ifstream& is, const std::filesystem::path& path) : is_(is), path_(path) {}
  template <class T>
  T get() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated file");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError("checkpoint " + path_.string() + ": " + what);
  }

 private:
  std::ifstream& is_;
  const std::filesystem::path& path_;
};

void write_config(Writer& w, const ModelConfig& c) {
  for (std::size_t v : {c.channels, c.smfm_count, c.rb_per_smfm, c.transformer_blocks, c.heads, c.patch_h, c.patch_w,
                        c.scale})
    w.put(static_cast<std::uint32_t>(v));
  w.put(static_cast<std::uint32_t>(c.attention_scope));
  w.put(static_cast<std::uint32_t>(c.use_layer_norm ? 1 : 0));
  w.put(static_cast<std::uint32_t>(c.variant));
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  for (std::size_t* f : {&c.channels, &c.smfm_count, &c.rb_per_smfm, &c.transformer_blocks, &c.heads, &c.patch_h,
                         &c.patch_w, &c.scale})
    *f = r.get<std::uint32_t>();
  const auto scope = r.get<std::uint32_t>();
  const auto ln = r.get<std::uint32_t>();
  const auto variant = r.get<std::uint32_t>();
  if (scope > 1 || ln > 1 || variant > 2) r.fail("corrupt model config");
  c.attention_scope = static_cast<AttentionScope>(scope);
  c.use_layer_norm = ln == 1;
  c.variant = static_cast<Variant>(variant);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    r.fail(std::string("invalid model config: ") + e.what());
  }
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    Writer w(os);
    w.bytes(kMagic, 4);
    w.put(kCheckpointVersion);
    write_config(w, ckpt.config);
    w.put(static_cast<std::uint32_t>(ckpt.params.tensor_count()));
    for (const auto& [name, t] : ckpt.params.tensors()) {
      w.put(static_cast<std::uint32_t>(name.size()));
      w.bytes(name.data(), name.size());
      w.put(kFloat64);
      w.put(static_cast<std::uint32_t>(t.rank()));
      for (auto e : t.shape()) w.put(static_cast<std::uint64_t>(e));
      w.bytes(t.data().data(), t.size() * sizeof(double));
    }
    w.put(static_cast<std::uint8_t>(ckpt.state ? 1 : 0));
    if (ckpt.state) {
      const TrainingState& s = *ckpt.state;
      if (s.adam_m.size() != ckpt.params.tensor_count() || s.adam_v.size() != ckpt.params.tensor_count())
        throw CheckpointError("training state does not cover every parameter");
      w.put(s.step);
      w.put(s.epochs_done);
      w.put(s.adam_t);
      for (const auto* moments : {&s.adam_m, &s.adam_v})
        for (const Tensor& t : *moments) w.bytes(t.data().data(), t.size() * sizeof(double));
    }
    if (!os) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  Reader r(is, path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) r.fail("bad magic (not a TANC checkpoint)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported format version " + std::to_string(version));

  Checkpoint ck;
  ck.config = read_config(r);
  const TANetParams layout = init_params(ck.config, 0);

  const auto count = r.get<std::uint32_t>();
  if (count != layout.tensor_count())
    r.fail("holds " + std::to_string(count) + " parameters but the config implies " +
           std::to_string(layout.tensor_count()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>();
    if (len > 4096) r.fail("implausible parameter name length");
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    if (r.get<std::uint8_t>() != kFloat64) r.fail("unsupported dtype for " + name);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail("implausible rank for " + name);
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(r.get<std::uint64_t>());
    if (!layout.contains(name)) r.fail("unexpected parameter " + name);
    if (layout.at(name).shape() != shape)
      r.fail("parameter " + name + " has shape " + to_string(shape) + ", expected " +
             to_string(layout.at(name).shape()));
    Tensor t(shape);
    r.bytes(t.data().data(), t.size() * sizeof(double));
    ck.params.insert(std::move(name), std::move(t));
  }
  if (r.get<std::uint8_t>() == 1) {
    TrainingState s;
    s.step = r.get<std::uint64_t>();
    s.epochs_done = r.get<std::uint32_t>();
    s.adam_t = r.get<std::uint64_t>();
    for (auto* moments : {&s.adam_m, &s.adam_v})
      for (const auto& [_, p] : ck.params.tensors()) {
        Tensor t(p.shape());
        r.bytes(t.data().data(), t.size() * sizeof(double));
        moments->push_back(std::move(t));
      }
    ck.state = std::move(s);
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.config == expected)) throw CheckpointError("checkpoint " + path.string() + ": model config mismatch");
  return ck;
}

}  // namespace tanet
