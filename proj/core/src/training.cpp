#include "hsx/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "hsx/binary_io.hpp"
#include "hsx/error.hpp"
#include "hsx/losses.hpp"
#include "hsx/optimizer.hpp"

namespace hsx {

namespace {

constexpr char kModelMagic[4] = {'H', 'S', 'X', 'K'};
constexpr std::uint32_t kModelVersion = 1;

// Stream offsets so data, init and shuffling draw from unrelated sequences.
constexpr std::uint64_t kDataStream = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kShuffleStream = 0xD1B54A32D192ED03ull;

std::uint32_t loss_tag(LossKind k) { return static_cast<std::uint32_t>(k); }

LabeledDataset truncate(LabeledDataset d, std::size_t limit) {
  if (limit == 0 || limit >= d.size()) return d;
  std::vector<std::size_t> idx(limit);
  std::iota(idx.begin(), idx.end(), 0);
  return subset(d, idx);
}

struct BatchLoss {
  double loss = 0.0;
  Matrix d_embeddings;
  Matrix d_weights;
  Vector d_bias;
};

BatchLoss loss_and_gradients(const RunConfig& cfg, const Model& model, const Matrix& emb,
                             std::span<const std::size_t> labels, double lambda) {
  BatchLoss out;
  switch (model.loss) {
    case LossKind::distarc: {
      DistArcConfig dc = cfg.distarc;
      dc.lambda = lambda;
      const LossBreakdown fwd = distarc_forward(emb, labels, model.bank, dc);
      GradientBundle g = distarc_backward(emb, labels, model.bank, dc, fwd);
      out.loss = fwd.loss;
      out.d_embeddings = std::move(g.d_x);
      out.d_weights = std::move(g.d_w);
      break;
    }
    case LossKind::arcface: {
      const LossBreakdown fwd =
          arcface_forward(emb, labels, model.bank.weights(), cfg.distarc.margin, cfg.scale);
      GradientBundle g = arcface_backward(emb, labels, model.bank.weights(), cfg.distarc.margin,
                                          cfg.scale, fwd);
      out.loss = fwd.loss;
      out.d_embeddings = std::move(g.d_x);
      out.d_weights = std::move(g.d_w);
      break;
    }
    case LossKind::cosface: {
      const LossBreakdown fwd =
          cosface_forward(emb, labels, model.bank.weights(), cfg.distarc.margin, cfg.scale);
      GradientBundle g = cosface_backward(emb, labels, model.bank.weights(), cfg.distarc.margin,
                                          cfg.scale, fwd);
      out.loss = fwd.loss;
      out.d_embeddings = std::move(g.d_x);
      out.d_weights = std::move(g.d_w);
      break;
    }
    case LossKind::cross_entropy: {
      const LossBreakdown fwd =
          cross_entropy_forward(emb, labels, model.bank.weights(), model.head_bias);
      LinearHeadGradients g =
          cross_entropy_backward(emb, labels, model.bank.weights(), model.head_bias, fwd);
      out.loss = fwd.loss;
      out.d_embeddings = std::move(g.d_x);
      out.d_weights = std::move(g.d_w);
      out.d_bias = std::move(g.d_b);
      break;
    }
  }
  return out;
}

}  // namespace

Model init_model(const RunConfig& cfg, std::size_t input_width, std::size_t classes) {
  Rng rng(cfg.seed);
  std::vector<std::size_t> widths{input_width};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.embedding_dim);
  Model m;
  m.loss = cfg.loss;
  m.backbone = init_mlp(widths, cfg.activation, rng);
  m.bank = ProxyBank::random(cfg.embedding_dim, classes, default_radii(classes, cfg.radii_gap), rng);
  m.head_bias.assign(classes, 0.0);
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create checkpoint " + path.string());
  out.write(kModelMagic, 4);
  binary::write_u32(out, kModelVersion);
  binary::write_u32(out, loss_tag(model.loss));
  write_mlp(out, model.backbone);
  const Matrix& w = model.bank.weights();
  binary::write_u64(out, w.rows());
  binary::write_u64(out, w.cols());
  for (double v : w.flat()) binary::write_f64(out, v);
  for (double v : model.bank.radii()) binary::write_f64(out, v);
  for (double v : model.head_bias) binary::write_f64(out, v);
  if (!out) throw IoError("short write to checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw TruncatedFileError("checkpoint header truncated");
  if (std::string_view(magic, 4) != std::string_view(kModelMagic, 4)) {
    throw BadMagicError("not a checkpoint file: " + path.string());
  }
  if (binary::read_u32(in) != kModelVersion) throw FormatError("unsupported checkpoint version");
  const std::uint32_t tag = binary::read_u32(in);
  if (tag > loss_tag(LossKind::cosface)) throw FormatError("unknown loss tag in checkpoint");
  Model m;
  m.loss = static_cast<LossKind>(tag);
  m.backbone = read_mlp(in);
  const std::uint64_t d = binary::read_u64(in);
  const std::uint64_t k = binary::read_u64(in);
  if (d != m.backbone.output_width() || k == 0 || k > (1u << 24)) {
    throw FormatError("checkpoint proxy shape does not match backbone");
  }
  Matrix w(d, k);
  for (double& v : w.flat()) v = binary::read_f64(in);
  Vector radii(k), bias(k);
  for (double& v : radii) v = binary::read_f64(in);
  for (double& v : bias) v = binary::read_f64(in);
  m.bank = ProxyBank(std::move(w), std::move(radii));
  m.head_bias = std::move(bias);
  return m;
}

Split load_dataset(const RunConfig& cfg) {
  const DatasetSpec& ds = cfg.dataset;
  Rng rng(cfg.seed ^ kDataStream);
  Split split;
  switch (ds.source) {
    case DataSource::synth: {
      const LabeledDataset all =
          synth_blobs(rng, ds.classes, ds.input_dim, ds.per_class, ds.spread);
      split = train_test_split(all, rng, ds.test_fraction);
      break;
    }
    case DataSource::idx: {
      LabeledDataset train_set = truncate(load_idx(ds.images, ds.labels), ds.limit);
      if (!ds.test_images.empty()) {
        split.train = std::move(train_set);
        split.test = truncate(load_idx(ds.test_images, ds.test_labels), ds.test_limit);
      } else {
        split = train_test_split(train_set, rng, ds.test_fraction);
      }
      break;
    }
    case DataSource::csv: {
      const LabeledDataset all = truncate(load_csv(ds.csv), ds.limit);
      split = train_test_split(all, rng, ds.test_fraction);
      break;
    }
  }
  const std::size_t k = std::max(split.train.class_count, split.test.class_count);
  split.train.class_count = k;
  split.test.class_count = k;
  if (split.train.size() == 0) throw ConfigError("dataset: training split is empty");
  split.train.validate();
  split.test.validate();
  return split;
}

ClassifyReport evaluate_classify(const Model& model, const LabeledDataset& data) {
  if (data.size() == 0) throw ContractError("evaluate_classify: empty dataset");
  const Matrix emb = model.embed(data.inputs);
  const auto radial = predict_radial_angular(emb, model.bank);
  const auto head = predict_linear_head(emb, model.bank.weights(), model.head_bias);
  ClassifyReport r;
  r.acc_radial = accuracy(radial, data.labels);
  r.acc_head = accuracy(head, data.labels);
  r.agreement = accuracy(radial, head);
  return r;
}

VerificationResult evaluate_verify(const Model& model, const LabeledDataset& data,
                                   DistanceMetric metric, std::size_t pairs_per_polarity,
                                   std::uint64_t seed) {
  Rng rng(seed ^ kDataStream);
  const PairSet pairs = make_pairs(data, rng, pairs_per_polarity);
  return verification_sweep(model.embed(data.inputs), pairs, metric);
}

Vector class_mean_norms(const Matrix& embeddings, std::span<const std::size_t> labels,
                        std::size_t classes) {
  Vector sum(classes, 0.0);
  std::vector<std::size_t> count(classes, 0);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    sum.at(labels[i]) += l2_norm(embeddings.row(i));
    ++count[labels[i]];
  }
  for (std::size_t k = 0; k < classes; ++k) {
    sum[k] = count[k] ? sum[k] / static_cast<double>(count[k])
                      : std::numeric_limits<double>::quiet_NaN();
  }
  return sum;
}

TrainResult train(const RunConfig& cfg, const LabeledDataset& train_set,
                  const LabeledDataset& test_set, const MetricsSink& sink) {
  cfg.validate(false);
  if (train_set.size() == 0) throw ContractError("train: empty training set");
  const LabeledDataset& eval_set = test_set.size() > 0 ? test_set : train_set;
  const std::size_t classes = std::max(train_set.class_count, eval_set.class_count);

  TrainResult result;
  result.model = init_model(cfg, train_set.width(), classes);
  result.initial = result.model;
  Model& model = result.model;

  Rng shuffle_rng(cfg.seed ^ kShuffleStream);
  SgdState opt_state;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  ForwardCache cache;
  ClassifyReport last_eval;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lambda = cfg.lambda_at(epoch);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const LabeledDataset batch = subset(train_set, idx);
      const Matrix emb = mlp_forward(model.backbone, batch.inputs, &cache);
      BatchLoss bl;
      try {
        bl = loss_and_gradients(cfg, model, emb, batch.labels, lambda);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + " step " +
                               std::to_string(step) + ": " + e.what(),
                           e.index());
      }
      const MlpGradients mg = mlp_backward(model.backbone, cache, bl.d_embeddings, false);

      std::vector<ParamBlock> blocks;
      for (std::size_t l = 0; l < model.backbone.layers.size(); ++l) {
        blocks.push_back({model.backbone.layers[l].weight.flat(), mg.layers[l].weight.flat()});
        blocks.push_back({model.backbone.layers[l].bias, mg.layers[l].bias});
      }
      blocks.push_back({model.bank.weights().flat(), bl.d_weights.flat()});
      if (model.loss == LossKind::cross_entropy) blocks.push_back({model.head_bias, bl.d_bias});
      try {
        sgd_step(blocks, cfg.sgd, opt_state);
        model.bank.validate();
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + " step " +
                               std::to_string(step) + ": " + e.what(),
                           e.index());
      }
      loss_sum += bl.loss * static_cast<double>(idx.size());
    }

    MetricsRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = loss_sum / static_cast<double>(order.size());
    rec.lambda = lambda;
    rec.seed = cfg.seed;
    const bool last = epoch + 1 == cfg.epochs;
    if (last || (epoch + 1) % cfg.eval_every == 0) {
      last_eval = evaluate_classify(model, eval_set);
      rec.acc_radial = last_eval.acc_radial;
      rec.acc_head = last_eval.acc_head;
    }
    result.history.push_back(rec);
    if (sink) sink(rec);
    spdlog::debug("epoch {} loss {:.6f} acc_radial {:.4f} acc_head {:.4f} lambda {}", rec.epoch,
                  rec.loss, rec.acc_radial, rec.acc_head, rec.lambda);
  }
  result.final_test = last_eval;
  result.test_class_norms = class_mean_norms(model.embed(eval_set.inputs), eval_set.labels, classes);
  return result;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg) {
  std::vector<AblationRow> rows;
  for (const TermMask& mask : ablation_masks()) {
    AblationRow row;
    row.mask = mask;
    for (std::uint64_t seed : cfg.ablate_seeds) {
      RunConfig run = cfg;
      run.loss = LossKind::distarc;
      run.distarc.mask = mask;
      run.seed = seed;
      const Split split = load_dataset(run);
      const TrainResult r = train(run, split.train, split.test);
      row.accuracies.push_back(r.final_test.acc_radial);
      spdlog::info("ablate {} seed {} acc_radial {:.4f}", mask.name(), seed,
                   r.final_test.acc_radial);
    }
    row.mean = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) /
               static_cast<double>(row.accuracies.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hsx
