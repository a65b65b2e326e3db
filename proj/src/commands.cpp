// SPDX-License-Identifier: Apache-2.0
#include "tanet/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "tanet/checkpoint.hpp"
#include "tanet/data.hpp"
#include "tanet/metrics.hpp"

namespace fs = std::filesystem;

namespace tanet {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
int guarded(CommandIO io, const char* name, F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const NumericalError& e) {
    io.err << name << ": numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const UsageError& e) {
    io.err << name << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    io.err << name << ": config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    io.err << name << ": data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ImageError& e) {
    io.err << name << ": image error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    io.err << name << ": checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    io.err << name << ": " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    io.err << name << ": " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    io.err << name << ": error: " << e.what() << '\n';
    return kExitUsage;
  }
}

fs::path ensure_run_dir(const RunConfig& cfg) {
  const fs::path dir = resolve_run_dir(cfg);
  fs::create_directories(dir);
  return dir;
}

// The manifest named in the config, or a fresh one built from data_dir.
DatasetManifest obtain_manifest(const RunConfig& cfg, const fs::path& run_dir, CommandIO io) {
  if (cfg.manifest) return DatasetManifest::load(*cfg.manifest);
  if (!cfg.data_dir) throw UsageError("either --manifest or --data-dir is required");
  IngestOptions opts{.generate_lr_on_load = cfg.generate_lr_on_load, .warnings = &io.err};
  return build_manifest(*cfg.data_dir, run_dir / "data", cfg.model.scale, cfg.hr_height, cfg.hr_width,
                        cfg.split_counts, cfg.schedule.seed, opts);
}

std::vector<TrainPair> load_checked(const DatasetManifest& m, Split s, CommandIO io) {
  std::vector<std::string> errors;
  auto pairs = load_split(m, s, &errors);
  for (const auto& e : errors) io.err << "warning: " << e << '\n';
  if (pairs.empty() && !errors.empty())
    throw DataError("no loadable entries in the " + std::string(to_string(s)) + " split");
  return pairs;
}

std::vector<TrainPair> at_scale(std::vector<TrainPair> pairs, std::size_t manifest_scale, std::size_t scale) {
  return scale == manifest_scale ? pairs : rescale_pairs(pairs, scale);
}

std::string method_name(Variant v) { return v == Variant::full ? "tanet" : "tanet_" + std::string(to_string(v)); }

std::vector<double> read_lpips(const fs::path& file, const std::vector<std::string>& names) {
  std::ifstream is(file);
  if (!is) throw DataError("cannot open LPIPS file " + file.string());
  std::map<std::string, double> by_name;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(file.string() + ": expected image,lpips rows");
    const std::string key = line.substr(0, comma), value = line.substr(comma + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str()) {
      if (key == "image") continue;  // header
      throw DataError(file.string() + ": bad LPIPS value '" + value + "'");
    }
    by_name[key] = v;
  }
  std::vector<double> out;
  for (const auto& n : names) {
    const auto it = by_name.find(n);
    if (it == by_name.end()) throw DataError(file.string() + ": no LPIPS value for image " + n);
    out.push_back(it->second);
  }
  return out;
}

std::pair<double, double> mean_metrics(const std::vector<TrainPair>& pairs, const TANetParams& params,
                                       const ModelConfig& model, MetricSpace space) {
  double p = 0.0, s = 0.0;
  for (const auto& pr : pairs) {
    const Image sr = clamp01(from_tensor(super_resolve(to_tensor(pr.lr), params, model)));
    p += psnr(sr, pr.hr, space);
    s += ssim(sr, pr.hr, space);
  }
  const double n = static_cast<double>(pairs.size());
  return {p / n, s / n};
}

}  // namespace

fs::path resolve_run_dir(const RunConfig& cfg) {
  if (cfg.out_dir) return *cfg.out_dir;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return fs::path("runs") / (std::string(buf) + "-seed" + std::to_string(cfg.schedule.seed));
}

int cmd_prepare(const RunConfig& cfg, CommandIO io) {
  return guarded(io, "prepare", [&] {
    if (!cfg.data_dir) throw UsageError("--data-dir is required");
    const fs::path dir = ensure_run_dir(cfg);
    IngestOptions opts{.generate_lr_on_load = cfg.generate_lr_on_load, .warnings = &io.err};
    const DatasetManifest m = build_manifest(*cfg.data_dir, dir, cfg.model.scale, cfg.hr_height, cfg.hr_width,
                                             cfg.split_counts, cfg.schedule.seed, opts);
    io.out << "manifest " << (dir / "manifest.tsv").string() << ": " << m.entries.size() << " entries (split "
           << to_string(m.counts) << ", scale " << m.scale << ", seed " << m.seed << ", skipped " << m.skipped
           << ")\n";
  });
}

int cmd_train(const RunConfig& cfg, CommandIO io) {
  return guarded(io, "train", [&] {
    cfg.model.validate();
    const fs::path dir = ensure_run_dir(cfg);
    const DatasetManifest m = obtain_manifest(cfg, dir, io);
    if (m.scale != cfg.model.scale)
      throw UsageError("manifest scale " + std::to_string(m.scale) + " differs from --scale " +
                       std::to_string(cfg.model.scale));
    const auto train_set = load_checked(m, Split::train, io);
    const auto val_set = load_checked(m, Split::val, io);
    if (train_set.empty()) throw DataError("training split is empty");
    {
      std::ofstream os(dir / "config.txt");
      cfg.write(os);
    }

    TrainOptions opts;
    opts.checkpoint_dir = dir;
    opts.augment = cfg.augment;
    if (cfg.resume) opts.resume = load_checkpoint(*cfg.resume, cfg.model);

    const fs::path loss_path = dir / "loss.csv";
    const bool append = cfg.resume && fs::exists(loss_path);
    std::ofstream loss(loss_path, append ? std::ios::app : std::ios::trunc);
    if (!loss) throw DataError("cannot write " + loss_path.string());
    if (!append) write_loss_csv_header(loss);

    double epoch_sum = 0.0;
    std::size_t epoch_n = 0;
    opts.on_step = [&](const LossRecord& r) {
      write_loss_csv_row(loss, r);
      loss.flush();
      epoch_sum += r.loss;
      ++epoch_n;
    };
    opts.on_epoch = [&](std::size_t epoch, double vp, double vs) {
      io.out << "epoch " << epoch << " loss " << std::setprecision(6) << (epoch_n ? epoch_sum / epoch_n : 0.0)
             << " val_psnr " << format_db(vp) << " val_ssim " << std::setprecision(4) << vs << '\n';
      epoch_sum = 0.0;
      epoch_n = 0;
    };
    const TrainResult res = train(train_set, val_set, cfg.model, cfg.schedule, opts);
    io.out << "trained " << res.steps << " steps (" << res.history.size() << " this run), seed "
           << cfg.schedule.seed << ", params " << res.params.parameter_count() << ", run dir " << dir.string()
           << '\n';
  });
}

int cmd_eval(const RunConfig& cfg, bool with_reference, CommandIO io) {
  return guarded(io, "eval", [&] {
    const fs::path dir = ensure_run_dir(cfg);
    const DatasetManifest m = obtain_manifest(cfg, dir, io);
    std::optional<Checkpoint> ck;
    if (cfg.checkpoint) ck = load_checkpoint(*cfg.checkpoint);
    const std::size_t scale = ck ? ck->config.scale : m.scale;
    const auto pairs = at_scale(load_checked(m, cfg.eval_split, io), m.scale, scale);
    if (pairs.empty()) throw DataError("the " + std::string(to_string(cfg.eval_split)) + " split is empty");

    std::vector<std::string> names;
    std::vector<Image> refs, bicubic;
    for (const auto& p : pairs) {
      names.push_back(p.name);
      refs.push_back(p.hr);
      bicubic.push_back(clamp01(upscale(p.lr, scale)));
    }
    EvalReport report;
    report.seed = cfg.schedule.seed;
    report.add_method("bicubic", names, bicubic, refs, cfg.metric_space);
    if (ck) {
      std::vector<Image> outs;
      for (const auto& p : pairs) outs.push_back(clamp01(from_tensor(super_resolve(to_tensor(p.lr), ck->params, ck->config))));
      std::optional<std::vector<double>> lp;
      if (cfg.lpips) lp = read_lpips(*cfg.lpips, names);
      report.add_method(method_name(ck->config.variant), names, outs, refs, cfg.metric_space, lp);
    }
    if (with_reference) report.add_method("hr", names, refs, refs, cfg.metric_space);

    std::ofstream os(dir / "eval.csv");
    report.write_csv(os);
    if (!os) throw DataError("cannot write " + (dir / "eval.csv").string());
    report.write_table(io.out);
  });
}

int cmd_sr(const RunConfig& cfg, const fs::path& input, const std::optional<fs::path>& output, CommandIO io) {
  return guarded(io, "sr", [&] {
    if (!cfg.checkpoint) throw UsageError("--checkpoint is required");
    const Checkpoint ck = load_checkpoint(*cfg.checkpoint);
    const Image lr = to_rgb(load_png(input));
    ck.config.check_input(lr.height, lr.width);
    const Image sr = clamp01(from_tensor(super_resolve(to_tensor(lr), ck.params, ck.config)));
    fs::path out_path;
    if (output) {
      out_path = *output;
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    } else {
      out_path = ensure_run_dir(cfg) / (input.stem().string() + "_x" + std::to_string(ck.config.scale) + ".png");
    }
    save_png(sr, out_path);
    io.out << input.string() << " (" << lr.height << "x" << lr.width << ") -> " << out_path.string() << " ("
           << sr.height << "x" << sr.width << "), seed " << cfg.schedule.seed << '\n';
  });
}

int cmd_ablate(const RunConfig& cfg, CommandIO io) {
  return guarded(io, "ablate", [&] {
    const fs::path dir = ensure_run_dir(cfg);
    const DatasetManifest m = obtain_manifest(cfg, dir, io);
    const auto base_train = load_checked(m, Split::train, io);
    auto base_test = load_checked(m, Split::test, io);
    if (base_test.empty()) base_test = load_checked(m, Split::val, io);
    if (base_train.empty() || base_test.empty()) throw DataError("ablation needs non-empty train and test splits");

    const std::vector<std::size_t> scales =
        cfg.ablate_scales.empty() ? std::vector<std::size_t>{cfg.model.scale} : cfg.ablate_scales;
    const Variant variants[] = {Variant::full, Variant::no_local, Variant::no_global};

    std::ofstream csv(dir / "ablation.csv");
    if (!csv) throw DataError("cannot write " + (dir / "ablation.csv").string());
    csv << "variant,scale,psnr,ssim,params,final_loss,order_digest,seed\n";
    io.out << std::left << std::setw(12) << "variant" << std::right << std::setw(6) << "scale" << std::setw(10)
           << "PSNR" << std::setw(10) << "SSIM" << std::setw(10) << "params" << std::setw(14) << "final_loss" << '\n';

    for (const std::size_t scale : scales) {
      const auto train_set = at_scale(base_train, m.scale, scale);
      const auto test_set = at_scale(base_test, m.scale, scale);
      std::map<Variant, std::pair<std::size_t, double>> summary;
      for (const Variant v : variants) {
        ModelConfig model = cfg.model;
        model.variant = v;
        model.scale = scale;
        TrainOptions opts;
        opts.augment = cfg.augment;
        const fs::path loss_path = dir / ("loss_" + std::string(to_string(v)) + "_x" + std::to_string(scale) + ".csv");
        std::ofstream loss(loss_path);
        write_loss_csv_header(loss);
        opts.on_step = [&](const LossRecord& r) { write_loss_csv_row(loss, r); };
        const TrainResult res = train(train_set, {}, model, cfg.schedule, opts);

        const std::size_t k = std::min(kFinalLossWindow, res.history.size());
        double final_loss = 0.0;
        for (std::size_t i = res.history.size() - k; i < res.history.size(); ++i) final_loss += res.history[i].loss;
        final_loss = k ? final_loss / static_cast<double>(k) : 0.0;
        const auto [p, s] = mean_metrics(test_set, res.params, model, cfg.metric_space);
        const std::size_t count = res.params.parameter_count();
        summary[v] = {count, final_loss};

        char row[256];
        std::snprintf(row, sizeof row, "%s,%zu,%s,%.6f,%zu,%.10g,%016llx,%llu\n", std::string(to_string(v)).c_str(),
                      scale, format_db(p).c_str(), s, count, final_loss, static_cast<unsigned long long>(res.order_digest),
                      static_cast<unsigned long long>(cfg.schedule.seed));
        csv << row;
        csv.flush();
        char shown[32];
        std::snprintf(shown, sizeof shown, "%.4f", s);
        io.out << std::left << std::setw(12) << to_string(v) << std::right << std::setw(6) << scale << std::setw(10)
               << format_db(p) << std::setw(10) << shown << std::setw(10) << count << std::setw(14)
               << std::setprecision(6) << final_loss << '\n';
      }
      if (summary[Variant::no_global].first >= summary[Variant::full].first)
        io.err << "note: x" << scale << " no_global has no fewer parameters than full\n";
      if (summary[Variant::full].second > summary[Variant::no_local].second)
        io.out << "note: x" << scale << " full final loss exceeds no_local under this budget\n";
    }
    io.out << "seed " << cfg.schedule.seed << ", report " << (dir / "ablation.csv").string() << '\n';
  });
}

}  // namespace tanet
