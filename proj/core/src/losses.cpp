#include "hsx/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hsx/error.hpp"

namespace hsx {

std::string TermMask::name() const {
  if (use_cos_phi && use_delta) return "cos_theta+cos_phi+delta";
  if (use_cos_phi) return "cos_theta+cos_phi";
  if (use_delta) return "cos_theta+delta";
  return "cos_theta";
}

std::vector<TermMask> ablation_masks() {
  return {TermMask::cos_theta_only(), TermMask::with_cos_phi(), TermMask::with_delta(),
          TermMask::full()};
}

void DistArcConfig::validate() const {
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) {
    throw ContractError("DistArcConfig: margin must lie in [0, pi/2)");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractError("DistArcConfig: lambda must be finite and >= 0");
  }
}

namespace {

// Floor on sin(theta) in the derivative of cos(theta + m).
constexpr double kSinFloor = 1e-7;

enum class MarginKind { additive_angle, additive_cosine };

// Shared engine behind DistArc, ArcFace and CosFace. With the radial terms
// off and unit scale, DistArc and ArcFace run through identical arithmetic.
struct EngineParams {
  MarginKind kind = MarginKind::additive_angle;
  double margin = 0.0;
  double scale = 1.0;
  bool use_cos_phi = false;
  bool use_delta = false;
  double lambda = 0.0;
  bool symmetric = false;
};

struct ProxyView {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<Vector> unit;    // w_hat_k
  std::vector<Vector> scaled;  // r_k * w_hat_k
  Vector raw_norm;             // ||w_k||
  Vector radii;
};

ProxyView make_view(const Matrix& w, std::span<const double> radii) {
  ProxyView v;
  v.dim = w.rows();
  v.classes = w.cols();
  v.radii.assign(radii.begin(), radii.end());
  v.unit.resize(v.classes);
  v.scaled.resize(v.classes);
  v.raw_norm.resize(v.classes);
  for (std::size_t k = 0; k < v.classes; ++k) {
    Vector col = w.col(k);
    const double n = l2_norm(col);
    if (!(n > kNormEps) || !std::isfinite(n)) {
      throw DegenerateProxyError("proxy column " + std::to_string(k) + " has vanishing norm",
                                 static_cast<std::ptrdiff_t>(k));
    }
    for (double& c : col) c /= n;
    v.raw_norm[k] = n;
    v.scaled[k] = col;
    for (double& c : v.scaled[k]) c *= v.radii[k];
    v.unit[k] = std::move(col);
  }
  return v;
}

void check_inputs(const Matrix& x, std::span<const std::size_t> labels, std::size_t dim,
                  std::size_t classes) {
  if (x.rows() == 0) throw ContractError("loss: empty batch");
  if (x.cols() != dim) throw ContractError("loss: embedding dimension does not match proxies");
  if (labels.size() != x.rows()) throw ContractError("loss: label count does not match batch");
  for (std::size_t y : labels) {
    if (y >= classes) throw ContractError("loss: label out of range");
  }
}

double true_class_logit(const EngineParams& p, double cos_t) {
  if (p.kind == MarginKind::additive_angle) return cos_theta_plus_margin(cos_t, p.margin);
  return cos_t - p.margin;
}

double true_class_slope(const EngineParams& p, double cos_t) {
  if (p.kind == MarginKind::additive_cosine) return 1.0;
  const double c = clamp_unit(cos_t);
  const double s = std::max(std::sqrt(std::max(0.0, 1.0 - c * c)), kSinFloor);
  return std::cos(p.margin) + std::sin(p.margin) * c / s;
}

double phi_of(std::span<const double> r, double r_norm, std::span<const double> unit) {
  if (r_norm < kNormEps) return 1.0;
  return clamp_unit(-dot(r, unit) / r_norm);
}

LossBreakdown engine_forward(const Matrix& x, std::span<const std::size_t> labels,
                             const ProxyView& view, const EngineParams& p) {
  check_inputs(x, labels, view.dim, view.classes);
  const std::size_t n = x.rows();
  const std::size_t k_count = view.classes;
  LossBreakdown out;
  out.per_sample.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const std::size_t y = labels[i];
    const double nx = l2_norm(xi);
    SampleTerms& t = out.per_sample[i];
    t.logits.resize(k_count);
    for (std::size_t j = 0; j < k_count; ++j) {
      const double c = nx < kNormEps ? 0.0 : clamp_unit(dot(xi, view.unit[j]) / nx);
      double z;
      if (j == y) {
        t.cos_theta_true = c;
        z = p.scale * true_class_logit(p, c);
        double numer = z;
        if (p.use_cos_phi || p.use_delta) {
          const Vector r = resultant(xi, view.scaled[j]);
          const double rn = l2_norm(r);
          t.cos_phi_true = phi_of(r, rn, view.unit[j]);
          t.delta_true = rn * rn;
          if (p.use_cos_phi) numer += t.cos_phi_true;
          if (p.use_delta) numer -= p.lambda * t.delta_true;
        }
        t.numerator = numer;
        if (p.symmetric) z = numer;
      } else {
        z = p.scale * c;
        if (p.use_delta) z -= p.lambda * squared_distance(xi, view.scaled[j]);
      }
      t.logits[j] = z;
    }
    t.loss = stable_log_sum_exp(t.logits) - t.numerator;
    if (!std::isfinite(t.loss)) {
      throw NumericError("loss: non-finite value at sample " + std::to_string(i),
                         static_cast<std::ptrdiff_t>(i));
    }
    total += t.loss;
  }
  out.loss = total / static_cast<double>(n);
  return out;
}

// Gradients of the batch-mean loss. d_w is taken with respect to the raw
// (unnormalized) proxy columns.
GradientBundle engine_backward(const Matrix& x, std::span<const std::size_t> labels,
                               const ProxyView& view, const EngineParams& p,
                               const LossBreakdown& cache) {
  check_inputs(x, labels, view.dim, view.classes);
  const std::size_t n = x.rows();
  const std::size_t d = view.dim;
  const std::size_t k_count = view.classes;
  if (cache.per_sample.size() != n) throw ContractError("loss backward: cache does not match");

  GradientBundle g{Matrix(n, d), Matrix(d, k_count)};
  // Gradient with respect to the unit proxies, projected at the end.
  std::vector<Vector> g_unit(k_count, Vector(d, 0.0));
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector g_xhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const std::size_t y = labels[i];
    const SampleTerms& t = cache.per_sample[i];
    if (t.logits.size() != k_count) throw ContractError("loss backward: cache does not match");
    const Vector prob = softmax(t.logits);
    const double nx = l2_norm(xi);
    Vector xhat(d, 0.0);
    if (nx >= kNormEps) {
      for (std::size_t a = 0; a < d; ++a) xhat[a] = xi[a] / nx;
    }
    auto gxi = g.d_x.row(i);
    std::fill(g_xhat.begin(), g_xhat.end(), 0.0);

    // Upstream weight on the numerator exponent and on the true-class
    // cosine logit.
    const double g_numer = -inv_n + (p.symmetric ? prob[y] * inv_n : 0.0);
    const double g_margin_logit = g_numer + (p.symmetric ? 0.0 : prob[y] * inv_n);

    for (std::size_t j = 0; j < k_count; ++j) {
      double g_cos;
      if (j == y) {
        g_cos = g_margin_logit * p.scale * true_class_slope(p, t.cos_theta_true);
      } else {
        const double gz = prob[j] * inv_n;
        g_cos = gz * p.scale;
        if (p.use_delta) {
          // d(-lambda * delta_j) = -lambda * 2 R_j dx  and  +2 lambda r_j R_j d(w_hat_j)
          const double gd = -p.lambda * gz;
          for (std::size_t a = 0; a < d; ++a) {
            const double r = xi[a] - view.scaled[j][a];
            gxi[a] += gd * 2.0 * r;
            g_unit[j][a] += gd * (-2.0 * view.radii[j] * r);
          }
        }
      }
      for (std::size_t a = 0; a < d; ++a) {
        g_xhat[a] += g_cos * view.unit[j][a];
        g_unit[j][a] += g_cos * xhat[a];
      }
    }

    if (p.use_cos_phi || p.use_delta) {
      const Vector r = resultant(xi, view.scaled[y]);
      const double rn = l2_norm(r);
      const double ry = view.radii[y];
      if (p.use_delta) {
        const double gd = -p.lambda * g_numer;
        for (std::size_t a = 0; a < d; ++a) {
          gxi[a] += gd * 2.0 * r[a];
          g_unit[y][a] += gd * (-2.0 * ry * r[a]);
        }
      }
      if (p.use_cos_phi && rn >= kNormEps) {
        // cos(phi) = -(R . w_hat) / ||R||,  R = x - r w_hat
        const double phi = t.cos_phi_true;
        for (std::size_t a = 0; a < d; ++a) {
          const double rhat = r[a] / rn;
          const double d_r = -(view.unit[y][a] + phi * rhat) / rn;
          gxi[a] += g_numer * d_r;
          g_unit[y][a] += g_numer * (-rhat - ry * d_r);
        }
      }
    }

    if (nx >= kNormEps) {
      const double radial = dot(g_xhat, xhat);
      for (std::size_t a = 0; a < d; ++a) gxi[a] += (g_xhat[a] - radial * xhat[a]) / nx;
    }
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    const double radial = dot(g_unit[k], view.unit[k]);
    for (std::size_t a = 0; a < d; ++a) {
      g.d_w(a, k) = (g_unit[k][a] - radial * view.unit[k][a]) / view.raw_norm[k];
    }
  }
  if (!g.d_x.all_finite() || !g.d_w.all_finite()) {
    throw NumericError("loss backward: non-finite gradient");
  }
  return g;
}

EngineParams distarc_params(const DistArcConfig& cfg) {
  cfg.validate();
  EngineParams p;
  p.kind = MarginKind::additive_angle;
  p.margin = cfg.margin;
  p.scale = 1.0;
  p.use_cos_phi = cfg.mask.use_cos_phi;
  p.use_delta = cfg.mask.use_delta;
  p.lambda = cfg.lambda;
  p.symmetric = cfg.symmetric_denominator;
  return p;
}

EngineParams angular_params(MarginKind kind, double margin, double scale) {
  if (!(scale > 0.0)) throw ContractError("angular loss: scale must be positive");
  EngineParams p;
  p.kind = kind;
  p.margin = margin;
  p.scale = scale;
  return p;
}

ProxyView unit_radius_view(const Matrix& w) { return make_view(w, Vector(w.cols(), 1.0)); }

}  // namespace

LossBreakdown distarc_forward(const Matrix& x, std::span<const std::size_t> labels,
                              const ProxyBank& bank, const DistArcConfig& cfg) {
  return engine_forward(x, labels, make_view(bank.weights(), bank.radii()), distarc_params(cfg));
}

GradientBundle distarc_backward(const Matrix& x, std::span<const std::size_t> labels,
                                const ProxyBank& bank, const DistArcConfig& cfg,
                                const LossBreakdown& cache) {
  return engine_backward(x, labels, make_view(bank.weights(), bank.radii()),
                         distarc_params(cfg), cache);
}

LossBreakdown arcface_forward(const Matrix& x, std::span<const std::size_t> labels,
                              const Matrix& w, double margin, double scale) {
  return engine_forward(x, labels, unit_radius_view(w),
                        angular_params(MarginKind::additive_angle, margin, scale));
}

GradientBundle arcface_backward(const Matrix& x, std::span<const std::size_t> labels,
                                const Matrix& w, double margin, double scale,
                                const LossBreakdown& cache) {
  return engine_backward(x, labels, unit_radius_view(w),
                         angular_params(MarginKind::additive_angle, margin, scale), cache);
}

LossBreakdown cosface_forward(const Matrix& x, std::span<const std::size_t> labels,
                              const Matrix& w, double margin, double scale) {
  return engine_forward(x, labels, unit_radius_view(w),
                        angular_params(MarginKind::additive_cosine, margin, scale));
}

GradientBundle cosface_backward(const Matrix& x, std::span<const std::size_t> labels,
                                const Matrix& w, double margin, double scale,
                                const LossBreakdown& cache) {
  return engine_backward(x, labels, unit_radius_view(w),
                         angular_params(MarginKind::additive_cosine, margin, scale), cache);
}

LossBreakdown cross_entropy_forward(const Matrix& x, std::span<const std::size_t> labels,
                                    const Matrix& w, std::span<const double> bias) {
  check_inputs(x, labels, w.rows(), w.cols());
  if (bias.size() != w.cols()) throw ContractError("cross_entropy: bias length mismatch");
  const std::size_t n = x.rows();
  const Matrix logits = matmul(x, w);
  LossBreakdown out;
  out.per_sample.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    SampleTerms& t = out.per_sample[i];
    t.logits.assign(logits.row(i).begin(), logits.row(i).end());
    for (std::size_t k = 0; k < w.cols(); ++k) t.logits[k] += bias[k];
    t.numerator = t.logits[labels[i]];
    t.loss = stable_log_sum_exp(t.logits) - t.numerator;
    if (!std::isfinite(t.loss)) {
      throw NumericError("cross_entropy: non-finite value at sample " + std::to_string(i),
                         static_cast<std::ptrdiff_t>(i));
    }
    total += t.loss;
  }
  out.loss = total / static_cast<double>(n);
  return out;
}

LinearHeadGradients cross_entropy_backward(const Matrix& x, std::span<const std::size_t> labels,
                                           const Matrix& w, std::span<const double> bias,
                                           const LossBreakdown& cache) {
  check_inputs(x, labels, w.rows(), w.cols());
  if (bias.size() != w.cols()) throw ContractError("cross_entropy: bias length mismatch");
  const std::size_t n = x.rows();
  const std::size_t k_count = w.cols();
  if (cache.per_sample.size() != n) throw ContractError("cross_entropy: cache does not match");
  Matrix d_logits(n, k_count);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector prob = softmax(cache.per_sample[i].logits);
    for (std::size_t k = 0; k < k_count; ++k) d_logits(i, k) = prob[k] * inv_n;
    d_logits(i, labels[i]) -= inv_n;
  }
  LinearHeadGradients g;
  g.d_x = matmul_nt(d_logits, w);
  g.d_w = matmul_tn(x, d_logits);
  g.d_b.assign(k_count, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < k_count; ++k) g.d_b[k] += d_logits(i, k);
  return g;
}

double lambda_schedule(std::size_t epoch, double base, double increment, std::size_t step_every,
                       double cap) {
  if (!(base >= 0.0) || !(increment >= 0.0)) {
    throw ContractError("lambda_schedule: base and increment must be >= 0");
  }
  if (step_every < 1) throw ContractError("lambda_schedule: step_every must be >= 1");
  const double steps = static_cast<double>(epoch / step_every);
  return std::min(base + increment * steps, cap);
}

}  // namespace hsx
