#include "hsx/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hsx/error.hpp"

namespace hsx {

namespace pt = boost::property_tree;

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::distarc:
      return "distarc";
    case LossKind::cross_entropy:
      return "cross_entropy";
    case LossKind::arcface:
      return "arcface";
    case LossKind::cosface:
      return "cosface";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "distarc") return LossKind::distarc;
  if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
  if (name == "arcface") return LossKind::arcface;
  if (name == "cosface") return LossKind::cosface;
  throw ConfigError("unknown loss '" + name + "'");
}

TermMask parse_mask(const std::string& name) {
  for (const TermMask& m : ablation_masks()) {
    if (m.name() == name) return m;
  }
  if (name == "full") return TermMask::full();
  throw ConfigError("unknown term mask '" + name + "'");
}

double RunConfig::lambda_at(std::size_t epoch) const {
  if (!lambda_schedule.enabled) return distarc.lambda;
  return hsx::lambda_schedule(epoch, lambda_schedule.base, lambda_schedule.increment,
                              lambda_schedule.step_every, lambda_schedule.cap);
}

void RunConfig::validate(bool check_paths) const {
  if (embedding_dim < 2) throw ConfigError("model.embedding_dim must be >= 2");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (!(radii_gap > 0.0)) throw ConfigError("radii.gap must be positive");
  if (!(scale > 0.0)) throw ConfigError("loss.scale must be positive");
  if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0)) {
    throw ConfigError("dataset.test_fraction must lie in [0, 1)");
  }
  if (pairs_per_polarity < 1) throw ConfigError("eval.pairs_per_polarity must be >= 1");
  if (eval_mode != "classify" && eval_mode != "verify") {
    throw ConfigError("eval.mode must be classify or verify");
  }
  if (metric != "euclidean" && metric != "cosine") {
    throw ConfigError("eval.metric must be euclidean or cosine");
  }
  if (ablate_seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
  try {
    distarc.validate();
    sgd.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (dataset.source == DataSource::synth) {
    if (dataset.classes < 2 || dataset.input_dim < 1 || dataset.per_class < 1) {
      throw ConfigError("dataset: synth needs classes >= 2, input_dim >= 1, per_class >= 1");
    }
  }
  if (!check_paths) return;
  auto require = [](const std::filesystem::path& p, const char* key) {
    if (p.empty()) throw ConfigError(std::string("dataset.") + key + " is required");
    if (!std::filesystem::exists(p)) {
      throw ConfigError(std::string("dataset.") + key + ": no such file " + p.string());
    }
  };
  if (dataset.source == DataSource::idx) {
    require(dataset.images, "images");
    require(dataset.labels, "labels");
    if (!dataset.test_images.empty() || !dataset.test_labels.empty()) {
      require(dataset.test_images, "test_images");
      require(dataset.test_labels, "test_labels");
    }
  } else if (dataset.source == DataSource::csv) {
    require(dataset.csv, "csv");
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

template <typename T>
std::vector<T> split_list(const std::string& text, const char* key) {
  std::vector<T> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    std::istringstream is(item);
    T v;
    if (!(is >> v)) throw ConfigError(std::string(key) + ": bad list element '" + item + "'");
    out.push_back(v);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  std::istringstream is(v);
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof()) {
    throw ConfigError(key + ": bad numeric value '" + v + "'");
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig c;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty() && body.data().empty()) continue;  // empty section
    if (body.empty()) {
      // top-level key
      const std::string key = section;
      const std::string v = body.data();
      if (key == "version") {
        if (parse_number<int>(v, key) != RunConfig::kVersion) {
          throw ConfigError("unsupported config version " + v);
        }
      } else {
        throw ConfigError("unknown top-level key '" + key + "'");
      }
      continue;
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      const std::string v = node.data();
      auto num_d = [&] { return parse_number<double>(v, key); };
      auto num_u = [&] { return parse_number<std::size_t>(v, key); };
      if (key == "dataset.source") {
        if (v == "synth") c.dataset.source = DataSource::synth;
        else if (v == "idx") c.dataset.source = DataSource::idx;
        else if (v == "csv") c.dataset.source = DataSource::csv;
        else throw ConfigError("dataset.source must be synth, idx or csv");
      } else if (key == "dataset.classes") c.dataset.classes = num_u();
      else if (key == "dataset.input_dim") c.dataset.input_dim = num_u();
      else if (key == "dataset.per_class") c.dataset.per_class = num_u();
      else if (key == "dataset.spread") c.dataset.spread = num_d();
      else if (key == "dataset.images") c.dataset.images = v;
      else if (key == "dataset.labels") c.dataset.labels = v;
      else if (key == "dataset.test_images") c.dataset.test_images = v;
      else if (key == "dataset.test_labels") c.dataset.test_labels = v;
      else if (key == "dataset.csv") c.dataset.csv = v;
      else if (key == "dataset.limit") c.dataset.limit = num_u();
      else if (key == "dataset.test_limit") c.dataset.test_limit = num_u();
      else if (key == "dataset.test_fraction") c.dataset.test_fraction = num_d();
      else if (key == "model.hidden") c.hidden = split_list<std::size_t>(v, "model.hidden");
      else if (key == "model.embedding_dim") c.embedding_dim = num_u();
      else if (key == "model.activation") {
        try {
          c.activation = parse_activation(v);
        } catch (const ContractError& e) {
          throw ConfigError(e.what());
        }
      } else if (key == "loss.name") c.loss = parse_loss_kind(v);
      else if (key == "loss.margin") c.distarc.margin = num_d();
      else if (key == "loss.lambda") c.distarc.lambda = num_d();
      else if (key == "loss.mask") c.distarc.mask = parse_mask(v);
      else if (key == "loss.symmetric_denominator") c.distarc.symmetric_denominator = parse_bool(v, key);
      else if (key == "loss.scale") c.scale = num_d();
      else if (key == "lambda_schedule.enabled") c.lambda_schedule.enabled = parse_bool(v, key);
      else if (key == "lambda_schedule.base") c.lambda_schedule.base = num_d();
      else if (key == "lambda_schedule.increment") c.lambda_schedule.increment = num_d();
      else if (key == "lambda_schedule.step_every") c.lambda_schedule.step_every = num_u();
      else if (key == "lambda_schedule.cap") c.lambda_schedule.cap = num_d();
      else if (key == "optimizer.learning_rate") c.sgd.learning_rate = num_d();
      else if (key == "optimizer.weight_decay") c.sgd.weight_decay = num_d();
      else if (key == "optimizer.momentum") c.sgd.momentum = num_d();
      else if (key == "radii.gap") c.radii_gap = num_d();
      else if (key == "train.epochs") c.epochs = num_u();
      else if (key == "train.batch_size") c.batch_size = num_u();
      else if (key == "train.seed") c.seed = parse_number<std::uint64_t>(v, key);
      else if (key == "train.eval_every") c.eval_every = num_u();
      else if (key == "output.dir") c.output_dir = v;
      else if (key == "eval.mode") c.eval_mode = v;
      else if (key == "eval.metric") c.metric = v;
      else if (key == "eval.pairs_per_polarity") c.pairs_per_polarity = num_u();
      else if (key == "ablate.seeds") c.ablate_seeds = split_list<std::uint64_t>(v, "ablate.seeds");
      else throw ConfigError("unknown config key '" + key + "'");
      if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  RunConfig c = parse_config(in);
  // Relative dataset paths are taken relative to the config file.
  const auto base = path.parent_path();
  for (auto* p : {&c.dataset.images, &c.dataset.labels, &c.dataset.test_images,
                  &c.dataset.test_labels, &c.dataset.csv}) {
    if (!p->empty() && p->is_relative()) *p = std::filesystem::absolute(base / *p).lexically_normal();
  }
  return c;
}

void write_config(std::ostream& out, const RunConfig& c) {
  const char* source = c.dataset.source == DataSource::synth ? "synth"
                       : c.dataset.source == DataSource::idx ? "idx"
                                                             : "csv";
  out << "version = " << RunConfig::kVersion << "\n\n";
  out << "[dataset]\n"
      << "source = " << source << "\n"
      << "classes = " << c.dataset.classes << "\n"
      << "input_dim = " << c.dataset.input_dim << "\n"
      << "per_class = " << c.dataset.per_class << "\n"
      << "spread = " << fmt_double(c.dataset.spread) << "\n";
  auto path_line = [&](const char* key, const std::filesystem::path& p) {
    if (!p.empty()) out << key << " = " << p.string() << "\n";
  };
  path_line("images", c.dataset.images);
  path_line("labels", c.dataset.labels);
  path_line("test_images", c.dataset.test_images);
  path_line("test_labels", c.dataset.test_labels);
  path_line("csv", c.dataset.csv);
  out << "limit = " << c.dataset.limit << "\n"
      << "test_limit = " << c.dataset.test_limit << "\n"
      << "test_fraction = " << fmt_double(c.dataset.test_fraction) << "\n\n";
  out << "[model]\n"
      << "hidden = " << join(c.hidden) << "\n"
      << "embedding_dim = " << c.embedding_dim << "\n"
      << "activation = " << to_string(c.activation) << "\n\n";
  out << "[loss]\n"
      << "name = " << to_string(c.loss) << "\n"
      << "margin = " << fmt_double(c.distarc.margin) << "\n"
      << "lambda = " << fmt_double(c.distarc.lambda) << "\n"
      << "mask = " << c.distarc.mask.name() << "\n"
      << "symmetric_denominator = " << (c.distarc.symmetric_denominator ? "true" : "false") << "\n"
      << "scale = " << fmt_double(c.scale) << "\n\n";
  out << "[lambda_schedule]\n"
      << "enabled = " << (c.lambda_schedule.enabled ? "true" : "false") << "\n"
      << "base = " << fmt_double(c.lambda_schedule.base) << "\n"
      << "increment = " << fmt_double(c.lambda_schedule.increment) << "\n"
      << "step_every = " << c.lambda_schedule.step_every << "\n"
      << "cap = " << fmt_double(c.lambda_schedule.cap) << "\n\n";
  out << "[optimizer]\n"
      << "learning_rate = " << fmt_double(c.sgd.learning_rate) << "\n"
      << "weight_decay = " << fmt_double(c.sgd.weight_decay) << "\n"
      << "momentum = " << fmt_double(c.sgd.momentum) << "\n\n";
  out << "[radii]\n"
      << "gap = " << fmt_double(c.radii_gap) << "\n\n";
  out << "[train]\n"
      << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "seed = " << c.seed << "\n"
      << "eval_every = " << c.eval_every << "\n\n";
  out << "[output]\n"
      << "dir = " << c.output_dir.string() << "\n\n";
  out << "[eval]\n"
      << "mode = " << c.eval_mode << "\n"
      << "metric = " << c.metric << "\n"
      << "pairs_per_polarity = " << c.pairs_per_polarity << "\n\n";
  out << "[ablate]\n"
      << "seeds = " << join(c.ablate_seeds) << "\n";
}

}  // namespace hsx
