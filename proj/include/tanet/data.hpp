// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dataset ingestion. build_manifest scans a directory of PNGs, shuffles them
// with a seed, resizes the HR images, derives the LR inputs by bicubic
// downscaling and caches both under the output directory:
//
//   <out>/manifest.tsv
//   <out>/hr/<stem>.png
//   <out>/lr/<stem>.png
//
// manifest.tsv starts with "# key=value" header lines (scale, hr_size, seed,
// counts) followed by one "split<TAB>hr_path<TAB>lr_path" row per entry.
// Paths are relative to the manifest. An lr_path of "-" means the LR image is
// regenerated from the HR image on load.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tanet/training.hpp"

namespace tanet {

enum class Split { train = 0, val = 1, test = 2 };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + val + test; }
  bool operator==(const SplitCounts&) const = default;
};

/// "38,1,1" -> {38, 1, 1}
SplitCounts parse_split_counts(std::string_view s);
std::string to_string(const SplitCounts& c);

struct ManifestEntry {
  Split split = Split::train;
  std::filesystem::path hr;                // relative to the manifest directory
  std::optional<std::filesystem::path> lr;  // nullopt: generated on load
  std::string name() const { return hr.stem().string(); }
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding manifest.tsv
  std::size_t scale = 4;
  std::size_t hr_height = 64;
  std::size_t hr_width = 64;
  std::uint64_t seed = 0;
  SplitCounts counts;
  std::vector<ManifestEntry> entries;
  /// Files skipped during ingest because they could not be decoded.
  std::size_t skipped = 0;

  std::vector<ManifestEntry> in_split(Split s) const;

  void write(std::ostream& os) const;
  void save(const std::filesystem::path& file) const;
  /// Throws DataError on malformed lines or inconsistent headers.
  static DatasetManifest load(const std::filesystem::path& file);
};

struct IngestOptions {
  /// Store "-" instead of caching LR images.
  bool generate_lr_on_load = false;
  /// Receives one line per skipped file; may be null.
  std::ostream* warnings = nullptr;
};

/// Needs at least counts.total() readable *.png files in `image_dir`
/// (DataError otherwise, stating the required count). Surplus images are left
/// out of the manifest. hr_height and hr_width must be divisible by `scale`.
DatasetManifest build_manifest(const std::filesystem::path& image_dir, const std::filesystem::path& out_dir,
                               std::size_t scale, std::size_t hr_height, std::size_t hr_width, SplitCounts counts,
                               std::uint64_t seed, const IngestOptions& opts = {});

/// LR from HR exactly as cached by build_manifest (bicubic then 8-bit quantization).
Image make_lr(const Image& hr, std::size_t scale);

/// Decodes one entry. Throws DataError naming the offending path.
TrainPair load_pair(const DatasetManifest& m, const ManifestEntry& e);

/// Loads every entry of a split. Entries that fail to decode are reported in
/// `errors` (when given) and skipped; without `errors` the first failure throws.
std::vector<TrainPair> load_split(const DatasetManifest& m, Split s, std::vector<std::string>* errors = nullptr);

/// Same pairs with the LR side regenerated at another scale (ablation sweeps).
std::vector<TrainPair> rescale_pairs(const std::vector<TrainPair>& pairs, std::size_t scale);

}  // namespace tanet
