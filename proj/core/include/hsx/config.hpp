#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hsx/losses.hpp"
#include "hsx/network.hpp"
#include "hsx/optimizer.hpp"

namespace hsx {

enum class LossKind { distarc, cross_entropy, arcface, cosface };

std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& name);
TermMask parse_mask(const std::string& name);

enum class DataSource { synth, idx, csv };

struct DatasetSpec {
  DataSource source = DataSource::synth;
  // synth
  std::size_t classes = 10;
  std::size_t input_dim = 2;
  std::size_t per_class = 200;
  double spread = 0.5;
  // idx: training files, and optional separate test files
  std::filesystem::path images, labels, test_images, test_labels;
  // csv
  std::filesystem::path csv;
  // Keep only the first `limit` training samples (0 = all).
  std::size_t limit = 0;
  std::size_t test_limit = 0;
  // Used when no separate test files are given.
  double test_fraction = 0.2;
};

struct LambdaScheduleSpec {
  bool enabled = false;
  double base = 0.001;
  double increment = 0.001;
  std::size_t step_every = 10;
  double cap = 0.005;
};

struct RunConfig {
  static constexpr int kVersion = 1;

  DatasetSpec dataset;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t embedding_dim = 2;
  Activation activation = Activation::relu;

  LossKind loss = LossKind::distarc;
  DistArcConfig distarc;
  double scale = 1.0;  // ArcFace / CosFace logit scale
  LambdaScheduleSpec lambda_schedule;

  SgdConfig sgd;
  double radii_gap = 10.0;

  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;

  std::filesystem::path output_dir = "runs/default";

  // eval / ablate / plot
  std::string eval_mode = "classify";
  std::string metric = "euclidean";
  std::size_t pairs_per_polarity = 500;
  std::vector<std::uint64_t> ablate_seeds = {1, 2, 3, 4, 5};

  /// Lambda for a 0-based epoch index.
  double lambda_at(std::size_t epoch) const;

  /// Throws ConfigError describing the first violated constraint. With
  /// check_paths, referenced dataset files must exist.
  void validate(bool check_paths = true) const;
};

/// INI-style `key = value` file with [sections]. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in);

/// Writes every field so the file fully reproduces the run.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace hsx
