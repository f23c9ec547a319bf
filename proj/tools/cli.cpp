#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>

#include "hsx/config.hpp"
#include "hsx/error.hpp"
#include "hsx/plot.hpp"
#include "hsx/training.hpp"

namespace hsx::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string checkpoint;
  std::string features;
  std::string svg;
  std::string mode;
  std::string split = "test";
};

void setup_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("hsx");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    return true;
  }();
  (void)once;
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv(kLogLevelEnv); env && *env) {
    level = spdlog::level::from_str(env);
  }
  spdlog::set_level(level);
}

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  cfg.validate(true);
  return cfg;
}

fs::path out_path(const RunConfig& cfg, const std::string& given, const char* fallback) {
  return given.empty() ? cfg.output_dir / fallback : fs::path(given);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

const LabeledDataset& pick_split(const Split& split, const std::string& which) {
  if (which == "train") return split.train;
  if (which == "test") return split.test.size() > 0 ? split.test : split.train;
  throw ConfigError("--split must be train or test");
}

void write_features(const fs::path& path, const Model& model, const LabeledDataset& data) {
  write_csv(path, model.embed(data.inputs), data.labels);
}

std::string json_text(const json& j) { return j.dump(); }

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  ensure_dir(cfg.output_dir);
  {
    std::ofstream f(cfg.output_dir / "config.ini");
    if (!f) throw IoError("cannot write resolved config");
    write_config(f, cfg);
  }
  const Split split = load_dataset(cfg);
  std::ofstream metrics(cfg.output_dir / "metrics.jsonl");
  if (!metrics) throw IoError("cannot write metrics log");
  const TrainResult r = train(cfg, split.train, split.test, [&](const MetricsRecord& rec) {
    metrics << to_json_line(rec) << '\n';
  });
  metrics.flush();
  if (!metrics) throw IoError("metrics log write failed");
  save_checkpoint(cfg.output_dir / "model.ckpt", r.model);
  write_features(cfg.output_dir / "features.csv", r.model, pick_split(split, "test"));

  const MetricsRecord& last = r.history.back();
  json j;
  j["command"] = "train";
  j["epochs"] = last.epoch;
  j["loss"] = last.loss;
  j["acc_radial"] = r.final_test.acc_radial;
  j["acc_head"] = r.final_test.acc_head;
  j["seed"] = cfg.seed;
  j["out"] = cfg.output_dir.string();
  out << json_text(j) << '\n';
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  RunConfig cfg = resolve_config(o);
  if (!o.mode.empty()) cfg.eval_mode = o.mode;
  if (cfg.eval_mode != "classify" && cfg.eval_mode != "verify") {
    throw ConfigError("--mode must be classify or verify");
  }
  const Model model = load_checkpoint(out_path(cfg, o.checkpoint, "model.ckpt"));
  const Split split = load_dataset(cfg);
  const LabeledDataset& data = pick_split(split, o.split);

  json j;
  j["command"] = "eval";
  j["mode"] = cfg.eval_mode;
  j["split"] = o.split;
  j["samples"] = data.size();
  if (cfg.eval_mode == "classify") {
    const ClassifyReport r = evaluate_classify(model, data);
    j["acc_radial"] = r.acc_radial;
    j["acc_head"] = r.acc_head;
    j["agreement"] = r.agreement;
  } else {
    const VerificationResult v = evaluate_verify(model, data, parse_metric(cfg.metric),
                                                 cfg.pairs_per_polarity, cfg.seed);
    j["metric"] = cfg.metric;
    j["pairs"] = 2 * cfg.pairs_per_polarity;
    j["best_accuracy"] = v.best_accuracy;
    j["best_threshold"] = v.best_threshold;
  }
  out << json_text(j) << '\n';
  return kOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const std::vector<AblationRow> rows = run_ablation(cfg);
  ensure_dir(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "ablation.csv");
  if (!csv) throw IoError("cannot write ablation table");
  csv << "mask,mean";
  for (auto s : cfg.ablate_seeds) csv << ",seed_" << s;
  csv << '\n' << std::setprecision(17);
  out << std::left << std::setw(26) << "mask" << "mean_acc" << '\n';
  for (const AblationRow& row : rows) {
    csv << row.mask.name() << ',' << row.mean;
    for (double a : row.accuracies) csv << ',' << a;
    csv << '\n';
    out << std::left << std::setw(26) << row.mask.name() << std::fixed << std::setprecision(4)
        << row.mean << std::defaultfloat << '\n';
  }
  if (!csv) throw IoError("ablation table write failed");
  return kOk;
}

int cmd_plot(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const fs::path features = out_path(cfg, o.features, "features.csv");
  const LabeledDataset dump = load_csv(features);
  if (dump.width() != 2) {
    throw ContractError("plot needs 2-D features, " + features.string() + " has " +
                        std::to_string(dump.width()));
  }
  LatentPlot plot;
  plot.points = dump.inputs;
  plot.labels = dump.labels;
  const fs::path ckpt = out_path(cfg, o.checkpoint, "model.ckpt");
  if (!o.checkpoint.empty() || fs::exists(ckpt)) {
    const Model model = load_checkpoint(ckpt);
    plot.radii = model.bank.radii();
    if (model.loss != LossKind::cross_entropy) plot.proxy_directions = model.bank.weights();
  } else {
    const std::size_t k = std::max(dump.class_count, cfg.dataset.classes);
    plot.radii = default_radii(k, cfg.radii_gap);
  }
  const fs::path svg = out_path(cfg, o.svg, "latent.svg");
  if (svg.has_parent_path()) ensure_dir(svg.parent_path());
  std::ofstream f(svg);
  if (!f) throw IoError("cannot write " + svg.string());
  f << render_latent_svg(plot);
  if (!f) throw IoError("write failed for " + svg.string());
  out << svg.string() << '\n';
  return kOk;
}

int cmd_dump(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(o);
  const Model model = load_checkpoint(out_path(cfg, o.checkpoint, "model.ckpt"));
  const Split split = load_dataset(cfg);
  const LabeledDataset& data = pick_split(split, o.split);
  const fs::path path = out_path(cfg, o.features, "features.csv");
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_features(path, model, data);
  out << path.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radial-angular embedding training and evaluation", "hsx"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration file")->required();
    sub->add_option("--seed", o.seed, "Override train.seed");
    sub->add_option("--out", o.out, "Override output.dir");
  };
  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, metrics, features");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* ablate_cmd = app.add_subcommand("ablate", "Run every term mask over the configured seeds");
  auto* plot_cmd = app.add_subcommand("plot", "Render a 2-D feature dump as SVG");
  auto* dump_cmd = app.add_subcommand("dump", "Write embeddings of a split as CSV");
  for (auto* sub : {train_cmd, eval_cmd, ablate_cmd, plot_cmd, dump_cmd}) common(sub);

  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint (default <out>/model.ckpt)");
  eval_cmd->add_option("--mode", o.mode, "classify or verify (default eval.mode)");
  eval_cmd->add_option("--split", o.split, "train or test");
  plot_cmd->add_option("--features", o.features, "Feature CSV (default <out>/features.csv)");
  plot_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint providing radii and proxies");
  plot_cmd->add_option("--svg", o.svg, "Output file (default <out>/latent.svg)");
  dump_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint (default <out>/model.ckpt)");
  dump_cmd->add_option("--features", o.features, "Output CSV (default <out>/features.csv)");
  dump_cmd->add_option("--split", o.split, "train or test");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    setup_logging();
    if (*train_cmd) return cmd_train(o, out);
    if (*eval_cmd) return cmd_eval(o, out);
    if (*ablate_cmd) return cmd_ablate(o, out);
    if (*plot_cmd) return cmd_plot(o, out);
    return cmd_dump(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace hsx::cli
