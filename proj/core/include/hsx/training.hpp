#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsx/config.hpp"
#include "hsx/dataio.hpp"
#include "hsx/evaluation.hpp"
#include "hsx/geometry.hpp"
#include "hsx/network.hpp"

namespace hsx {

/// Backbone plus classifier. For the proxy-based losses `bank.weights()` are
/// the class proxies and `head_bias` stays zero; for cross-entropy the same
/// matrix is the linear head W and `head_bias` its bias.
struct Model {
  LossKind loss = LossKind::distarc;
  MlpParams backbone;
  ProxyBank bank;
  Vector head_bias;

  Matrix embed(const Matrix& inputs) const { return mlp_forward(backbone, inputs); }
};

Model init_model(const RunConfig& cfg, std::size_t input_width, std::size_t classes);

// Checkpoint layout (little-endian):
//   "HSXK" | u32 version | u32 loss tag | MLP block | u64 d | u64 K |
//   W (d x K, row-major f64) | radii (K f64) | head bias (K f64)
// with the MLP block as written by write_mlp.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

/// Loads the configured dataset and splits it into train / test.
Split load_dataset(const RunConfig& cfg);

struct ClassifyReport {
  double acc_radial = 0.0;
  double acc_head = 0.0;
  double agreement = 0.0;  // fraction where both measures predict the same class
};

ClassifyReport evaluate_classify(const Model& model, const LabeledDataset& data);

VerificationResult evaluate_verify(const Model& model, const LabeledDataset& data,
                                   DistanceMetric metric, std::size_t pairs_per_polarity,
                                   std::uint64_t seed);

/// Per-class mean embedding norm; NaN for classes without samples.
Vector class_mean_norms(const Matrix& embeddings, std::span<const std::size_t> labels,
                        std::size_t classes);

struct TrainResult {
  Model model;
  Model initial;
  std::vector<MetricsRecord> history;  // one per epoch, 1-based epoch numbers
  ClassifyReport final_test;
  Vector test_class_norms;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

/// Mini-batch SGD over backbone and classifier jointly. Deterministic for a
/// given (config, data). Throws NumericError with epoch/step context if the
/// loss or a gradient goes non-finite.
TrainResult train(const RunConfig& cfg, const LabeledDataset& train_set,
                  const LabeledDataset& test_set, const MetricsSink& sink = {});

struct AblationRow {
  TermMask mask;
  std::vector<double> accuracies;  // one per seed, radial-angular measure on test
  double mean = 0.0;
};

/// Trains every ablation mask for every seed in cfg.ablate_seeds.
std::vector<AblationRow> run_ablation(const RunConfig& cfg);

}  // namespace hsx
