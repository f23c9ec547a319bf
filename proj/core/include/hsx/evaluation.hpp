#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hsx/dataio.hpp"
#include "hsx/geometry.hpp"
#include "hsx/numkit.hpp"

namespace hsx {

struct PredictionReport {
  Vector magnitudes;  // ||x - w_r_k|| per class
  std::size_t predicted = 0;
  Vector confidence;  // softmax(-magnitudes / T), T = 1
};

/// Radial-angular predictive measure: argmin over resultant magnitudes,
/// ties resolved toward the lowest class index.
PredictionReport predict_radial_angular(std::span<const double> x, const ProxyBank& bank);

std::vector<std::size_t> predict_radial_angular(const Matrix& embeddings, const ProxyBank& bank);

/// argmax_k (W^T x + b)_k, lowest index on ties. W is d x K.
std::size_t predict_linear_head(std::span<const double> x, const Matrix& w,
                                std::span<const double> bias);

std::vector<std::size_t> predict_linear_head(const Matrix& embeddings, const Matrix& w,
                                             std::span<const double> bias);

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

// Verification -------------------------------------------------------------------

enum class DistanceMetric { euclidean, cosine };

DistanceMetric parse_metric(const std::string& name);

/// Euclidean distance, or 1 - cos for the cosine metric.
double pair_distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric);

struct RocPoint {
  double threshold = 0.0;
  double false_positive_rate = 0.0;
  double true_positive_rate = 0.0;
};

struct VerificationResult {
  double best_accuracy = 0.0;
  double best_threshold = 0.0;
  std::vector<RocPoint> roc;
};

/// Pairs with distance <= threshold are declared genuine. Candidate
/// thresholds are the midpoints between consecutive distinct sorted
/// distances plus one point below the minimum and one above the maximum.
VerificationResult verification_sweep(std::span<const double> distances,
                                      const std::vector<bool>& same_class);

VerificationResult verification_sweep(const Matrix& embeddings, const PairSet& pairs,
                                      DistanceMetric metric);

// Confidence and calibration --------------------------------------------------------

/// softmax(-magnitudes / temperature). As temperature -> 0+ this approaches
/// a one-hot vector at the argmin.
Vector confidence_scores(const PredictionReport& report, double temperature = 1.0);

/// Equal-width B-bin expected calibration error. A confidence c falls into
/// bin min(floor(c * B), B - 1).
double ece(std::span<const double> confidences, const std::vector<bool>& correct,
           std::size_t bins = 15);

/// Grid search for the temperature minimizing the ECE of
/// max softmax(scores / T). T = 1 is always a candidate and is kept unless a
/// grid value is strictly better, so the result never raises ECE.
double temperature_calibrate(const Matrix& scores, const std::vector<bool>& correct,
                             std::span<const double> grid, std::size_t bins = 15);

/// Top-class confidence of softmax(scores_row / T) for every row.
Vector max_confidence(const Matrix& scores, double temperature);

/// McNemar chi-squared with continuity correction, (|b - c| - 1)^2 / (b + c);
/// 0 when the models never disagree.
double mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b);
double mcnemar_from_counts(std::size_t b, std::size_t c);

// Metrics records ---------------------------------------------------------------------

/// One line-delimited JSON record per epoch. Accuracies are NaN (null in
/// JSON) on epochs without an evaluation.
struct MetricsRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double acc_radial = std::numeric_limits<double>::quiet_NaN();
  double acc_head = std::numeric_limits<double>::quiet_NaN();
  double lambda = 0.0;
  std::uint64_t seed = 0;

  // NaN accuracies compare equal to each other.
  friend bool operator==(const MetricsRecord& a, const MetricsRecord& b);
};

std::string to_json_line(const MetricsRecord& r);
MetricsRecord parse_metrics_line(const std::string& line);
std::vector<MetricsRecord> read_metrics(std::istream& in);

}  // namespace hsx
