#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hsx/geometry.hpp"
#include "hsx/numkit.hpp"

namespace hsx {

/// Which DistArc terms are active. cos(theta + m) is always present.
struct TermMask {
  bool use_cos_phi = true;
  bool use_delta = true;

  static TermMask cos_theta_only() { return {false, false}; }
  static TermMask with_cos_phi() { return {true, false}; }
  static TermMask with_delta() { return {false, true}; }
  static TermMask full() { return {true, true}; }

  std::string name() const;
  friend bool operator==(const TermMask&, const TermMask&) = default;
};

/// The four ablation rows, in table order.
std::vector<TermMask> ablation_masks();

struct DistArcConfig {
  double margin = 0.4;    // radians, [0, pi/2)
  double lambda = 0.003;  // weighing factor on delta, >= 0
  TermMask mask = TermMask::full();
  // Off: the true-class denominator term carries only e^{cos(theta_y + m)}.
  // On: it carries the full numerator exponent, making the loss a proper
  // softmax cross-entropy.
  bool symmetric_denominator = false;

  void validate() const;
};

struct SampleTerms {
  double cos_theta_true = 0.0;
  double cos_phi_true = 0.0;
  double delta_true = 0.0;
  double numerator = 0.0;  // exponent of the numerator
  Vector logits;           // denominator exponents, one per class
  double loss = 0.0;
};

struct LossBreakdown {
  double loss = 0.0;  // batch mean
  std::vector<SampleTerms> per_sample;
};

struct GradientBundle {
  Matrix d_x;  // N x d
  Matrix d_w;  // d x K
};

// DistArc ------------------------------------------------------------------

LossBreakdown distarc_forward(const Matrix& x, std::span<const std::size_t> labels,
                              const ProxyBank& bank, const DistArcConfig& cfg);

GradientBundle distarc_backward(const Matrix& x, std::span<const std::size_t> labels,
                                const ProxyBank& bank, const DistArcConfig& cfg,
                                const LossBreakdown& cache);

// Angular-margin baselines -------------------------------------------------
//
// W is d x K; logits are s * cos(theta_j) with the margin applied to the true
// class (additive angle for ArcFace, subtracted cosine for CosFace).

LossBreakdown arcface_forward(const Matrix& x, std::span<const std::size_t> labels,
                              const Matrix& w, double margin, double scale = 1.0);
GradientBundle arcface_backward(const Matrix& x, std::span<const std::size_t> labels,
                                const Matrix& w, double margin, double scale,
                                const LossBreakdown& cache);

LossBreakdown cosface_forward(const Matrix& x, std::span<const std::size_t> labels,
                              const Matrix& w, double margin, double scale = 1.0);
GradientBundle cosface_backward(const Matrix& x, std::span<const std::size_t> labels,
                                const Matrix& w, double margin, double scale,
                                const LossBreakdown& cache);

// Softmax cross-entropy over raw logits W^T x + b ----------------------------

struct LinearHeadGradients {
  Matrix d_x;  // N x d
  Matrix d_w;  // d x K
  Vector d_b;  // K
};

LossBreakdown cross_entropy_forward(const Matrix& x, std::span<const std::size_t> labels,
                                    const Matrix& w, std::span<const double> bias);
LinearHeadGradients cross_entropy_backward(const Matrix& x, std::span<const std::size_t> labels,
                                           const Matrix& w, std::span<const double> bias,
                                           const LossBreakdown& cache);

// Lambda schedule --------------------------------------------------------------

/// min(base + increment * floor(epoch / step_every), cap).
double lambda_schedule(std::size_t epoch, double base = 0.001, double increment = 0.001,
                       std::size_t step_every = 10, double cap = 0.005);

}  // namespace hsx
