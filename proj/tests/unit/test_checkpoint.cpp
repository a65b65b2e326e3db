// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <iterator>

#include "synthetic.hpp"
#include "tanet/checkpoint.hpp"

using namespace tanet;
namespace fs = std::filesystem;

namespace {

ModelConfig toy() {
  ModelConfig c;
  c.channels = 4;
  c.smfm_count = 1;
  c.rb_per_smfm = 1;
  c.transformer_blocks = 1;
  c.heads = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  os << s;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip without and with training state") {
    const auto dir = testing::scratch_dir("ckpt_rt");
    Checkpoint ck{toy(), init_params(toy(), 3), std::nullopt};
    save_checkpoint(dir / "a.ckpt", ck);
    const Checkpoint back = load_checkpoint(dir / "a.ckpt");
    CHECK(back.config == ck.config);
    CHECK_FALSE(back.state);
    for (const auto& [name, t] : ck.params.tensors()) CHECK(identical(t, back.params.at(name)));

    TrainingState st;
    st.step = 17;
    st.epochs_done = 3;
    st.adam_t = 17;
    Rng rng(1);
    for (const auto& [_, t] : ck.params.tensors()) {
      st.adam_m.push_back(Tensor::normal(t.shape(), rng, 1.0));
      st.adam_v.push_back(Tensor::uniform(t.shape(), rng, 0.0, 1.0));
    }
    ck.state = st;
    save_checkpoint(dir / "b.ckpt", ck);
    const Checkpoint b = load_checkpoint(dir / "b.ckpt", toy());
    REQUIRE(b.state);
    CHECK(b.state->step == 17);
    CHECK(b.state->epochs_done == 3);
    CHECK(identical(b.state->adam_v.back(), st.adam_v.back()));
    // saving twice gives identical bytes
    save_checkpoint(dir / "c.ckpt", ck);
    CHECK(slurp(dir / "b.ckpt") == slurp(dir / "c.ckpt"));
  }

  TEST_CASE("loader rejects corrupt, versioned and mismatched files") {
    const auto dir = testing::scratch_dir("ckpt_bad");
    save_checkpoint(dir / "ok.ckpt", {toy(), init_params(toy(), 0), std::nullopt});
    const std::string bytes = slurp(dir / "ok.ckpt");

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    spit(dir / "m.ckpt", bad_magic);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt"), CheckpointError);

    std::string bad_version = bytes;
    bad_version[4] = 9;
    spit(dir / "v.ckpt", bad_version);
    CHECK_THROWS_AS(load_checkpoint(dir / "v.ckpt"), CheckpointError);

    spit(dir / "t.ckpt", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(dir / "t.ckpt"), CheckpointError);

    ModelConfig other = toy();
    other.channels = 8;
    CHECK_THROWS_AS(load_checkpoint(dir / "ok.ckpt", other), CheckpointError);

    // params that do not match the stored config
    TANetParams wrong = init_params(toy(), 0);
    wrong.insert("extra.weight", Tensor::zeros({2}));
    save_checkpoint(dir / "w.ckpt", {toy(), wrong, std::nullopt});
    CHECK_THROWS_AS(load_checkpoint(dir / "w.ckpt"), CheckpointError);

    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
  }
}
