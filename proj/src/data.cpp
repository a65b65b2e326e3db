// SPDX-License-Identifier: Apache-2.0
#include "tanet/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace tanet {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("split must be train, val or test, got '" + std::string(s) + "'");
}

namespace {

std::size_t parse_size(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw ConfigError(std::string(what) + ": expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

SplitCounts parse_split_counts(std::string_view s) {
  const auto parts = split_on(s, ',');
  if (parts.size() != 3) throw ConfigError("split_counts must be train,val,test, got '" + std::string(s) + "'");
  return {parse_size(parts[0], "split_counts"), parse_size(parts[1], "split_counts"),
          parse_size(parts[2], "split_counts")};
}

std::string to_string(const SplitCounts& c) {
  return std::to_string(c.train) + "," + std::to_string(c.val) + "," + std::to_string(c.test);
}

std::vector<ManifestEntry> DatasetManifest::in_split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

void DatasetManifest::write(std::ostream& os) const {
  os << "# tanet-manifest 1\n";
  os << "# scale=" << scale << '\n';
  os << "# hr_size=" << hr_height << 'x' << hr_width << '\n';
  os << "# seed=" << seed << '\n';
  os << "# counts=" << to_string(counts) << '\n';
  for (const auto& e : entries)
    os << to_string(e.split) << '\t' << e.hr.generic_string() << '\t' << (e.lr ? e.lr->generic_string() : "-")
       << '\n';
}

void DatasetManifest::save(const fs::path& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw DataError("cannot write manifest " + file.string());
  write(os);
  if (!os) throw DataError("failed writing manifest " + file.string());
}

DatasetManifest DatasetManifest::load(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw DataError("cannot open manifest " + file.string());
  DatasetManifest m;
  m.root = file.parent_path();
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) -> DataError {
    return DataError(file.string() + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2), value = line.substr(eq + 1);
      try {
        if (key == "scale") {
          m.scale = parse_size(value, "scale");
        } else if (key == "hr_size") {
          const auto x = value.find('x');
          if (x == std::string::npos) throw fail("hr_size must be HxW");
          m.hr_height = parse_size(std::string_view(value).substr(0, x), "hr_size");
          m.hr_width = parse_size(std::string_view(value).substr(x + 1), "hr_size");
        } else if (key == "seed") {
          m.seed = parse_size(value, "seed");
        } else if (key == "counts") {
          m.counts = parse_split_counts(value);
        }
      } catch (const ConfigError& e) {
        throw fail(e.what());
      }
      continue;
    }
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) throw fail("expected 3 tab-separated columns");
    ManifestEntry e;
    try {
      e.split = parse_split(cols[0]);
    } catch (const ConfigError& err) {
      throw fail(err.what());
    }
    e.hr = fs::path(std::string(cols[1]));
    if (cols[2] != "-") e.lr = fs::path(std::string(cols[2]));
    m.entries.push_back(std::move(e));
  }
  if (m.scale == 0 || m.hr_height % m.scale != 0 || m.hr_width % m.scale != 0)
    throw DataError(file.string() + ": hr_size " + std::to_string(m.hr_height) + "x" + std::to_string(m.hr_width) +
                    " is not divisible by scale " + std::to_string(m.scale));
  return m;
}

Image make_lr(const Image& hr, std::size_t scale) { return quantize8(downscale(hr, scale)); }

DatasetManifest build_manifest(const fs::path& image_dir, const fs::path& out_dir, std::size_t scale,
                               std::size_t hr_height, std::size_t hr_width, SplitCounts counts, std::uint64_t seed,
                               const IngestOptions& opts) {
  if (scale == 0 || hr_height % scale != 0 || hr_width % scale != 0)
    throw ConfigError("hr_size " + std::to_string(hr_height) + "x" + std::to_string(hr_width) +
                      " must be divisible by scale " + std::to_string(scale));
  if (!fs::is_directory(image_dir)) throw DataError("image directory " + image_dir.string() + " does not exist");

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(image_dir)) {
    if (!de.is_regular_file()) continue;
    std::string ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());

  // Decode and resize in parallel; results land in per-file slots so the
  // outcome does not depend on scheduling.
  std::vector<std::optional<Image>> hr(files.size());
  std::vector<std::string> errors(files.size());
  const auto nfiles = static_cast<std::ptrdiff_t>(files.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < nfiles; ++i) {
    try {
      hr[i] = quantize8(resize_bicubic(to_rgb(load_png(files[i])), hr_height, hr_width));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  DatasetManifest m;
  m.root = out_dir;
  m.scale = scale;
  m.hr_height = hr_height;
  m.hr_width = hr_width;
  m.seed = seed;
  m.counts = counts;
  std::vector<std::size_t> readable;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (hr[i]) {
      readable.push_back(i);
    } else {
      ++m.skipped;
      if (opts.warnings) *opts.warnings << "warning: skipping " << files[i].string() << ": " << errors[i] << '\n';
    }
  }
  if (readable.size() < counts.total())
    throw DataError("need at least " + std::to_string(counts.total()) + " readable images in " + image_dir.string() +
                    " for split " + to_string(counts) + ", found " + std::to_string(readable.size()) +
                    (m.skipped ? " (" + std::to_string(m.skipped) + " unreadable skipped)" : ""));

  Rng rng(seed);
  std::shuffle(readable.begin(), readable.end(), rng);
  readable.resize(counts.total());

  fs::create_directories(out_dir / "hr");
  if (!opts.generate_lr_on_load) fs::create_directories(out_dir / "lr");
  for (std::size_t k = 0; k < readable.size(); ++k) {
    const std::size_t i = readable[k];
    ManifestEntry e;
    e.split = k < counts.train ? Split::train : k < counts.train + counts.val ? Split::val : Split::test;
    const std::string file = files[i].stem().string() + ".png";
    e.hr = fs::path("hr") / file;
    save_png(*hr[i], out_dir / e.hr);
    if (!opts.generate_lr_on_load) {
      e.lr = fs::path("lr") / file;
      save_png(make_lr(*hr[i], scale), out_dir / *e.lr);
    }
    m.entries.push_back(std::move(e));
  }
  m.save(out_dir / "manifest.tsv");
  return m;
}

TrainPair load_pair(const DatasetManifest& m, const ManifestEntry& e) {
  const fs::path hr_path = m.root / e.hr;
  TrainPair p;
  p.name = e.name();
  try {
    p.hr = to_rgb(load_png(hr_path));
  } catch (const ImageError& err) {
    throw DataError(std::string("cannot load HR image: ") + err.what());
  }
  if (p.hr.height != m.hr_height || p.hr.width != m.hr_width)
    throw DataError(hr_path.string() + ": expected " + std::to_string(m.hr_height) + "x" +
                    std::to_string(m.hr_width) + ", got " + std::to_string(p.hr.height) + "x" +
                    std::to_string(p.hr.width));
  if (e.lr) {
    const fs::path lr_path = m.root / *e.lr;
    try {
      p.lr = to_rgb(load_png(lr_path));
    } catch (const ImageError& err) {
      throw DataError(std::string("cannot load LR image: ") + err.what());
    }
    if (p.lr.height * m.scale != p.hr.height || p.lr.width * m.scale != p.hr.width)
      throw DataError(lr_path.string() + ": LR size does not match HR / scale");
  } else {
    p.lr = make_lr(p.hr, m.scale);
  }
  return p;
}

std::vector<TrainPair> load_split(const DatasetManifest& m, Split s, std::vector<std::string>* errors) {
  std::vector<TrainPair> out;
  for (const auto& e : m.entries) {
    if (e.split != s) continue;
    try {
      out.push_back(load_pair(m, e));
    } catch (const DataError& err) {
      if (!errors) throw;
      errors->push_back(err.what());
    }
  }
  return out;
}

std::vector<TrainPair> rescale_pairs(const std::vector<TrainPair>& pairs, std::size_t scale) {
  std::vector<TrainPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.hr.height % scale != 0 || p.hr.width % scale != 0)
      throw DataError(p.name + ": HR size is not divisible by scale " + std::to_string(scale));
    out.push_back({p.name, p.hr, make_lr(p.hr, scale)});
  }
  return out;
}

}  // namespace tanet
