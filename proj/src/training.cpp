// SPDX-License-Identifier: Apache-2.0
#include "tanet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "tanet/metrics.hpp"

namespace tanet {

AdamState make_adam(const TANetParams& params) {
  AdamState s;
  for (const auto& [_, t] : params.tensors()) {
    s.m.emplace_back(t.shape());
    s.v.emplace_back(t.shape());
  }
  return s;
}

void adam_step(TANetParams& params, AdamState& s) {
  if (s.m.size() != params.tensor_count() || s.v.size() != params.tensor_count())
    throw std::logic_error("adam_step: optimizer state does not match the parameter set");
  for (const auto& [name, t] : params.tensors())
    for (double g : t.grad())
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in parameter " + name);

  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  std::size_t k = 0;
  for (auto& [name, p] : params.tensors()) {
    auto m = s.m[k].data(), v = s.v[k].data();
    if (m.size() != p.size()) throw std::logic_error("adam_step: moment shape mismatch for " + name);
    auto g = p.grad();
    auto w = p.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
      const double mhat = m[i] / bc1, vhat = v[i] / bc2;
      w[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
    ++k;
  }
}

double TrainSchedule::lr(std::size_t epoch) const {
  const std::size_t halvings = halve_every == 0 ? 0 : epoch / halve_every;
  return base_lr * std::pow(0.5, static_cast<double>(halvings));
}

std::pair<Image, Image> augment(const Image& hr, const Image& lr, Dihedral d) { return {apply(hr, d), apply(lr, d)}; }

Dihedral draw_dihedral(const Image& img, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 7);
  const int i = pick(rng);
  if (img.height == img.width) return Dihedral::from_index(i);
  // keep orientation: rotations 0 or 180 only
  const Dihedral d = Dihedral::from_index(i);
  return {(d.rotation % 2) * 2, d.flip};
}

std::pair<Image, Image> augment(const Image& hr, const Image& lr, Rng& rng) {
  return augment(hr, lr, draw_dihedral(hr, rng));
}

void write_loss_csv_header(std::ostream& os) { os << "step,epoch,lr,loss\n"; }

void write_loss_csv_row(std::ostream& os, const LossRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%llu,%zu,%.10g,%.17g\n", static_cast<unsigned long long>(r.step), r.epoch, r.lr,
                r.loss);
  os << buf;
}

namespace {

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

void validate_pairs(const std::vector<TrainPair>& set, const ModelConfig& cfg, const char* which) {
  for (const auto& p : set) {
    if (p.hr.height != p.lr.height * cfg.scale || p.hr.width != p.lr.width * cfg.scale)
      throw DataError(std::string(which) + " pair '" + p.name + "': HR " + std::to_string(p.hr.height) + "x" +
                      std::to_string(p.hr.width) + " is not " + std::to_string(cfg.scale) + "x LR " +
                      std::to_string(p.lr.height) + "x" + std::to_string(p.lr.width));
    if (p.hr.channels != 3 || p.lr.channels != 3)
      throw DataError(std::string(which) + " pair '" + p.name + "' is not RGB");
  }
}

double evaluate_psnr_ssim(const std::vector<TrainPair>& val, const TANetParams& params, const ModelConfig& cfg,
                          double& ssim_out) {
  double ps = 0.0, ss = 0.0;
  for (const auto& p : val) {
    const Image sr = clamp01(from_tensor(super_resolve(to_tensor(p.lr), params, cfg)));
    ps += psnr(sr, p.hr);
    // too small for an 11x11 window: report NaN rather than fail training
    ss += sr.height >= 11 && sr.width >= 11 ? ssim(sr, p.hr) : std::numeric_limits<double>::quiet_NaN();
  }
  ssim_out = ss / static_cast<double>(val.size());
  return ps / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(const std::vector<TrainPair>& train_set, const std::vector<TrainPair>& val_set,
                  const ModelConfig& cfg, const TrainSchedule& sched, const TrainOptions& opts) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  if (sched.batch_size == 0) throw ConfigError("batch_size must be positive");
  validate_pairs(train_set, cfg, "training");
  validate_pairs(val_set, cfg, "validation");
  for (const auto& p : train_set) cfg.check_input(p.lr.height, p.lr.width);

  TrainResult res;
  std::uint64_t step = 0;
  if (opts.resume) {
    if (!(opts.resume->config == cfg)) throw CheckpointError("resume checkpoint was trained with a different config");
    res.params = opts.resume->params;
    res.adam = make_adam(res.params);
    if (opts.resume->state) {
      const TrainingState& s = *opts.resume->state;
      step = s.step;
      res.adam.t = s.adam_t;
      res.adam.m = s.adam_m;
      res.adam.v = s.adam_v;
    }
  } else {
    res.params = init_params(cfg, sched.seed);
    res.adam = make_adam(res.params);
  }
  res.params.set_requires_grad(true);

  const std::size_t n = train_set.size();
  const std::size_t per_epoch = (n + sched.batch_size - 1) / sched.batch_size;
  std::size_t epoch = static_cast<std::size_t>(step / per_epoch);
  std::size_t skip = static_cast<std::size_t>(step % per_epoch);
  std::uint64_t digest = 14695981039346656037ull;

  auto save = [&](const std::string& file, std::size_t epochs_done) {
    if (!opts.checkpoint_dir) return;
    Checkpoint ck{.config = cfg, .params = res.params, .state = TrainingState{}};
    ck.state->step = step;
    ck.state->epochs_done = static_cast<std::uint32_t>(epochs_done);
    ck.state->adam_t = res.adam.t;
    ck.state->adam_m = res.adam.m;
    ck.state->adam_v = res.adam.v;
    save_checkpoint(*opts.checkpoint_dir / file, ck);
  };

  bool budget_hit = false;
  for (; epoch < sched.epochs && !budget_hit; ++epoch) {
    const double lr = sched.lr(epoch);
    res.adam.lr = lr;
    std::seed_seq seq{static_cast<std::uint32_t>(sched.seed), static_cast<std::uint32_t>(sched.seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    Rng rng(seq);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Dihedral> flips(n);
    for (std::size_t i = 0; i < n; ++i) flips[i] = opts.augment ? draw_dihedral(train_set[order[i]].hr, rng) : Dihedral{};

    for (std::size_t b = skip; b < per_epoch; ++b) {
      if (sched.max_steps && step >= sched.max_steps) {
        budget_hit = true;
        break;
      }
      std::vector<Image> hrs, lrs;
      for (std::size_t i = b * sched.batch_size; i < std::min(n, (b + 1) * sched.batch_size); ++i) {
        auto [hr, lr_img] = augment(train_set[order[i]].hr, train_set[order[i]].lr, flips[i]);
        hrs.push_back(std::move(hr));
        lrs.push_back(std::move(lr_img));
        digest = fnv_mix(fnv_mix(digest, order[i]), static_cast<std::uint64_t>(flips[i].index()));
      }
      const Tensor hr_batch = stack(hrs);
      const Tensor lr_batch = stack(lrs);

      double loss_value = 0.0;
      {
        Tape tape;
        const BoundParams bound = bind(tape, res.params);
        const Var out = forward(tape.view(lr_batch), bound, cfg);
        const Var loss = l1_loss(out, tape.view(hr_batch));
        loss_value = loss.value().item();
        if (!std::isfinite(loss_value))
          throw NumericalError("non-finite loss at step " + std::to_string(step + 1) + " (epoch " +
                               std::to_string(epoch) + ")");
        tape.backward(loss);
      }
      adam_step(res.params, res.adam);
      res.params.clear_grads();
      ++step;
      LossRecord rec{.step = step, .epoch = epoch, .lr = lr, .loss = loss_value};
      res.history.push_back(rec);
      if (opts.on_step) opts.on_step(rec);
    }
    skip = 0;
    if (budget_hit) break;

    if (!val_set.empty()) {
      double vs = 0.0;
      const double vp = evaluate_psnr_ssim(val_set, res.params, cfg, vs);
      if (opts.on_epoch) opts.on_epoch(epoch, vp, vs);
      if (vp > res.best_val_psnr) {
        res.best_val_psnr = vp;
        save("best.ckpt", epoch + 1);
      }
    }
    save("last.ckpt", epoch + 1);
  }
  if (budget_hit) save("last.ckpt", epoch);

  res.steps = step;
  res.order_digest = digest;
  res.params.set_requires_grad(false);
  return res;
}

}  // namespace tanet
