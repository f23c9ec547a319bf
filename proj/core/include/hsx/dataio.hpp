#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hsx/numkit.hpp"

namespace hsx {

struct LabeledDataset {
  Matrix inputs;                    // N x in
  std::vector<std::size_t> labels;  // N
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return inputs.cols(); }
  // Labels in range, shapes consistent, inputs finite. Empty sets are
  // allowed here (a split can be empty); loaders reject them.
  void validate() const;
};

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> indices);

// IDX ------------------------------------------------------------------------
//
// Big-endian header: magic (0x00000803 images, 0x00000801 labels), then one
// u32 per dimension, then raw u8 payload. Files may be gzip-compressed; both
// forms are read transparently.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Pixels are scaled by 1/255. Throws BadMagicError, TruncatedFileError or
/// CountMismatchError for the respective defects, IoError if a file is
/// missing.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes uint8 images (count x rows x cols) and labels; gzip when requested.
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               std::span<const std::uint8_t> pixels, std::uint32_t rows, std::uint32_t cols,
               std::span<const std::uint8_t> label_bytes, bool gzip = false);

// CSV --------------------------------------------------------------------------
//
// Header `label,f0,f1,...`, one sample per row, values printed with 17
// significant digits so a write/read cycle is lossless.

LabeledDataset load_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Matrix& features,
               std::span<const std::size_t> labels);

// Synthetic --------------------------------------------------------------------

/// K isotropic Gaussian clusters (stddev `spread`) in d_in dimensions. Centers
/// are drawn by rejection so every pair is at least 6 * spread apart.
LabeledDataset synth_blobs(Rng& rng, std::size_t classes, std::size_t d_in,
                           std::size_t per_class, double spread);

// Splits and pairs --------------------------------------------------------------

struct Split {
  LabeledDataset train;
  LabeledDataset test;
};

/// Sample-level split, or with disjoint_classes a class-level split where
/// both halves have their labels remapped to 0..K'-1 in ascending order of
/// the original label.
Split train_test_split(const LabeledDataset& data, Rng& rng, double test_fraction,
                       bool disjoint_classes = false);

struct Pair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool same_class = false;
};

using PairSet = std::vector<Pair>;

/// pairs_per_polarity genuine and as many impostor pairs, distinct unordered
/// pairs where the data allows it. Throws ContractError if either polarity
/// cannot be formed.
PairSet make_pairs(const LabeledDataset& data, Rng& rng, std::size_t pairs_per_polarity);

}  // namespace hsx
