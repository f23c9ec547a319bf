#include "hsx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hsx/error.hpp"

namespace hsx {

PredictionReport predict_radial_angular(std::span<const double> x, const ProxyBank& bank) {
  if (x.size() != bank.dim()) throw ContractError("predict_radial_angular: dimension mismatch");
  PredictionReport report;
  const std::size_t k_count = bank.classes();
  report.magnitudes.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    report.magnitudes[k] = std::sqrt(squared_distance(x, bank.scaled(k)));
  }
  // min_element returns the first minimum, i.e. the lowest index on ties.
  report.predicted = static_cast<std::size_t>(
      std::min_element(report.magnitudes.begin(), report.magnitudes.end()) -
      report.magnitudes.begin());
  report.confidence = confidence_scores(report, 1.0);
  return report;
}

std::vector<std::size_t> predict_radial_angular(const Matrix& embeddings, const ProxyBank& bank) {
  if (embeddings.cols() != bank.dim()) {
    throw ContractError("predict_radial_angular: dimension mismatch");
  }
  std::vector<Vector> scaled(bank.classes());
  for (std::size_t k = 0; k < bank.classes(); ++k) scaled[k] = bank.scaled(k);
  std::vector<std::size_t> out(embeddings.rows());
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    const auto xi = embeddings.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < scaled.size(); ++k) {
      const double m = std::sqrt(squared_distance(xi, scaled[k]));
      if (m < best) {
        best = m;
        out[i] = k;
      }
    }
  }
  return out;
}

std::size_t predict_linear_head(std::span<const double> x, const Matrix& w,
                                std::span<const double> bias) {
  if (x.size() != w.rows()) throw ContractError("predict_linear_head: dimension mismatch");
  if (bias.size() != w.cols()) throw ContractError("predict_linear_head: bias length mismatch");
  std::size_t best_k = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < w.cols(); ++k) {
    double z = bias[k];
    for (std::size_t a = 0; a < x.size(); ++a) z += w(a, k) * x[a];
    if (z > best) {
      best = z;
      best_k = k;
    }
  }
  return best_k;
}

std::vector<std::size_t> predict_linear_head(const Matrix& embeddings, const Matrix& w,
                                             std::span<const double> bias) {
  std::vector<std::size_t> out(embeddings.rows());
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    out[i] = predict_linear_head(embeddings.row(i), w, bias);
  }
  return out;
}

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size()) throw ContractError("accuracy: length mismatch");
  if (predictions.empty()) throw ContractError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

DistanceMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::euclidean;
  if (name == "cosine") return DistanceMetric::cosine;
  throw ContractError("unknown distance metric '" + name + "'");
}

double pair_distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric) {
  if (metric == DistanceMetric::euclidean) return std::sqrt(squared_distance(a, b));
  return 1.0 - cos_theta(a, b);
}

VerificationResult verification_sweep(std::span<const double> distances,
                                      const std::vector<bool>& same_class) {
  if (distances.size() != same_class.size()) throw ContractError("verification_sweep: length mismatch");
  if (distances.empty()) throw ContractError("verification_sweep: no pairs");
  const std::size_t n = distances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
  const std::size_t positives =
      static_cast<std::size_t>(std::count(same_class.begin(), same_class.end(), true));
  const std::size_t negatives = n - positives;

  VerificationResult result;
  result.best_accuracy = -1.0;
  // Walk thresholds left to right; `accepted` pairs (distance <= t) so far.
  std::size_t tp = 0, fp = 0;
  auto record = [&](double threshold) {
    const double acc = static_cast<double>(tp + (negatives - fp)) / static_cast<double>(n);
    result.roc.push_back({threshold, negatives ? static_cast<double>(fp) / negatives : 0.0,
                          positives ? static_cast<double>(tp) / positives : 0.0});
    if (acc > result.best_accuracy) {
      result.best_accuracy = acc;
      result.best_threshold = threshold;
    }
  };
  const double lo = distances[order.front()];
  const double hi = distances[order.back()];
  record(lo - 1.0);
  std::size_t i = 0;
  while (i < n) {
    const double d = distances[order[i]];
    while (i < n && distances[order[i]] == d) {
      (same_class[order[i]] ? tp : fp) += 1;
      ++i;
    }
    record(i < n ? 0.5 * (d + distances[order[i]]) : hi + 1.0);
  }
  return result;
}

VerificationResult verification_sweep(const Matrix& embeddings, const PairSet& pairs,
                                      DistanceMetric metric) {
  if (pairs.empty()) throw ContractError("verification_sweep: no pairs");
  Vector dist(pairs.size());
  std::vector<bool> same(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].a >= embeddings.rows() || pairs[i].b >= embeddings.rows()) {
      throw ContractError("verification_sweep: pair index out of range");
    }
    dist[i] = pair_distance(embeddings.row(pairs[i].a), embeddings.row(pairs[i].b), metric);
    same[i] = pairs[i].same_class;
  }
  return verification_sweep(dist, same);
}

Vector confidence_scores(const PredictionReport& report, double temperature) {
  if (!(temperature > 0.0)) throw ContractError("confidence_scores: temperature must be positive");
  if (report.magnitudes.empty()) throw ContractError("confidence_scores: no magnitudes");
  const double lo = *std::min_element(report.magnitudes.begin(), report.magnitudes.end());
  Vector p(report.magnitudes.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    // Shifted so the smallest magnitude maps to exp(0); overflow-free for any T.
    const double z = (report.magnitudes[k] - lo) / temperature;
    p[k] = std::exp(-z);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

double ece(std::span<const double> confidences, const std::vector<bool>& correct, std::size_t bins) {
  if (confidences.size() != correct.size()) throw ContractError("ece: length mismatch");
  if (confidences.empty()) throw ContractError("ece: empty input");
  if (bins == 0) throw ContractError("ece: need at least one bin");
  std::vector<double> conf_sum(bins, 0.0), hit_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw ContractError("ece: confidence outside [0, 1]");
    const auto b = std::min(static_cast<std::size_t>(c * static_cast<double>(bins)), bins - 1);
    conf_sum[b] += c;
    hit_sum[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  const double n = static_cast<double>(confidences.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double nb = static_cast<double>(count[b]);
    total += (nb / n) * std::abs(hit_sum[b] / nb - conf_sum[b] / nb);
  }
  return total;
}

Vector max_confidence(const Matrix& scores, double temperature) {
  if (!(temperature > 0.0)) throw ContractError("max_confidence: temperature must be positive");
  Vector out(scores.rows());
  Vector scaled(scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) scaled[k] = row[k] / temperature;
    const Vector p = softmax(scaled);
    out[i] = *std::max_element(p.begin(), p.end());
  }
  return out;
}

double temperature_calibrate(const Matrix& scores, const std::vector<bool>& correct,
                             std::span<const double> grid, std::size_t bins) {
  if (scores.rows() != correct.size()) throw ContractError("temperature_calibrate: length mismatch");
  double best_t = 1.0;
  double best = ece(max_confidence(scores, 1.0), correct, bins);
  for (double t : grid) {
    if (!(t > 0.0)) throw ContractError("temperature_calibrate: grid values must be positive");
    const double e = ece(max_confidence(scores, t), correct, bins);
    if (e < best) {
      best = e;
      best_t = t;
    }
  }
  return best_t;
}

double mcnemar_from_counts(std::size_t b, std::size_t c) {
  if (b + c == 0) return 0.0;
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  return diff * diff / static_cast<double>(b + c);
}

double mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
  if (correct_a.size() != correct_b.size()) throw ContractError("mcnemar: length mismatch");
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++b;
    if (!correct_a[i] && correct_b[i]) ++c;
  }
  return mcnemar_from_counts(b, c);
}

namespace {

bool same_or_both_nan(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

nlohmann::ordered_json number_or_null(double v) {
  return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

bool operator==(const MetricsRecord& a, const MetricsRecord& b) {
  return a.epoch == b.epoch && a.loss == b.loss && same_or_both_nan(a.acc_radial, b.acc_radial) &&
         same_or_both_nan(a.acc_head, b.acc_head) && a.lambda == b.lambda && a.seed == b.seed;
}

std::string to_json_line(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["acc_radial"] = number_or_null(r.acc_radial);
  j["acc_head"] = number_or_null(r.acc_head);
  j["lambda"] = r.lambda;
  j["seed"] = r.seed;
  return j.dump();
}

MetricsRecord parse_metrics_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    MetricsRecord r;
    r.epoch = j.at("epoch").get<std::size_t>();
    r.loss = j.at("loss").get<double>();
    r.acc_radial = number_or_nan(j.at("acc_radial"));
    r.acc_head = number_or_nan(j.at("acc_head"));
    r.lambda = j.at("lambda").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad metrics record: ") + e.what());
  }
}

std::vector<MetricsRecord> read_metrics(std::istream& in) {
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_metrics_line(line));
  }
  return out;
}

}  // namespace hsx
