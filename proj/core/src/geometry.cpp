#include "hsx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hsx/error.hpp"

namespace hsx {

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size()) {
    throw ContractError(std::string(who) + ": dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

ProxyBank::ProxyBank(Matrix weights, Vector radii)
    : weights_(std::move(weights)), radii_(std::move(radii)) {
  if (weights_.cols() < 1) throw ContractError("ProxyBank: need at least one class");
  if (weights_.rows() < 2) throw ContractError("ProxyBank: embedding dimension must be >= 2");
  if (radii_.size() != weights_.cols()) {
    throw ContractError("ProxyBank: radii count does not match class count");
  }
  for (double r : radii_) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ContractError("ProxyBank: radii must be positive");
  }
  validate();
}

ProxyBank ProxyBank::random(std::size_t dim, std::size_t classes, Vector radii, Rng& rng) {
  Matrix w(dim, classes);
  for (double& v : w.flat()) v = rng.normal();
  return ProxyBank(std::move(w), std::move(radii));
}

Vector ProxyBank::unit(std::size_t k) const {
  if (k >= classes()) throw ContractError("ProxyBank::unit: class index out of range");
  Vector w = weights_.col(k);
  const double n = l2_norm(w);
  if (!(n > kNormEps)) {
    throw DegenerateProxyError("proxy column " + std::to_string(k) + " has vanishing norm",
                               static_cast<std::ptrdiff_t>(k));
  }
  for (double& v : w) v /= n;
  return w;
}

Vector ProxyBank::scaled(std::size_t k) const {
  Vector u = unit(k);
  for (double& v : u) v *= radii_[k];
  return u;
}

void ProxyBank::validate() const {
  for (std::size_t k = 0; k < classes(); ++k) {
    const Vector w = weights_.col(k);
    const double n = l2_norm(w);
    if (!std::isfinite(n)) {
      throw NumericError("proxy column " + std::to_string(k) + " is non-finite",
                         static_cast<std::ptrdiff_t>(k));
    }
    if (!(n > kNormEps)) {
      throw DegenerateProxyError("proxy column " + std::to_string(k) + " has vanishing norm",
                                 static_cast<std::ptrdiff_t>(k));
    }
  }
}

Vector default_radii(std::size_t classes, double gap) {
  if (!(gap > 0.0)) throw ContractError("default_radii: gap must be positive");
  Vector r(classes);
  for (std::size_t k = 0; k < classes; ++k) r[k] = gap * static_cast<double>(k + 1);
  return r;
}

double cos_theta(std::span<const double> x, std::span<const double> w) {
  require_same_dim(x, w, "cos_theta");
  const double nx = l2_norm(x);
  const double nw = l2_norm(w);
  if (nx < kNormEps || nw < kNormEps) return 0.0;
  return clamp_unit(dot(x, w) / (nx * nw));
}

Vector scaled_proxy(const ProxyBank& bank, std::size_t k) { return bank.scaled(k); }

Vector resultant(std::span<const double> x, std::span<const double> scaled) {
  require_same_dim(x, scaled, "resultant");
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - scaled[i];
  return r;
}

double cos_phi(std::span<const double> x, std::span<const double> scaled) {
  require_same_dim(x, scaled, "cos_phi");
  const double ns = l2_norm(scaled);
  if (ns < kNormEps) throw ContractError("cos_phi: scaled proxy has vanishing norm");
  const Vector r = resultant(x, scaled);
  const double nr = l2_norm(r);
  if (nr < kNormEps) return 1.0;
  return clamp_unit(-dot(r, scaled) / (nr * ns));
}

double delta_sq(std::span<const double> x, std::span<const double> scaled) {
  return squared_distance(x, scaled);
}

double triangle_magnitude(double norm_x, double norm_scaled, double theta, double phi,
                          TriangleVariant variant) {
  const double far_angle = std::cos(std::numbers::pi - (theta + phi));
  switch (variant) {
    case TriangleVariant::swapped_sides:
      return norm_x * std::cos(phi) + norm_scaled * far_angle;
    case TriangleVariant::projection_law:
      return norm_scaled * std::cos(phi) + norm_x * far_angle;
  }
  return 0.0;
}

double cos_theta_plus_margin(double cos_t, double margin) noexcept {
  const double c = clamp_unit(cos_t);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return c * std::cos(margin) - s * std::sin(margin);
}

double decision_boundary_residual(std::span<const double> x1, std::span<const double> x2,
                                  const ProxyBank& bank, double margin, int claimed_class) {
  if (bank.classes() != 2) throw ContractError("decision_boundary_residual: requires K == 2");
  if (claimed_class != 1 && claimed_class != 2) {
    throw ContractError("decision_boundary_residual: claimed class must be 1 or 2");
  }
  const double c1 = cos_theta(x1, bank.raw(0));
  const double c2 = cos_theta(x2, bank.raw(1));
  const double t1 = claimed_class == 1 ? cos_theta_plus_margin(c1, margin) : c1;
  const double t2 = claimed_class == 2 ? cos_theta_plus_margin(c2, margin) : c2;
  return (t1 + l2_norm(x1)) - (t2 + l2_norm(x2));
}

SampleGeometry sample_geometry(std::span<const double> x, const ProxyBank& bank,
                               std::size_t reference_class) {
  if (x.size() != bank.dim()) throw ContractError("sample_geometry: dimension mismatch");
  if (reference_class >= bank.classes()) {
    throw ContractError("sample_geometry: class index out of range");
  }
  SampleGeometry g;
  const std::size_t k_count = bank.classes();
  g.cos_theta.resize(k_count);
  g.delta.resize(k_count);
  g.resultant_norms.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Vector s = bank.scaled(k);
    g.cos_theta[k] = cos_theta(x, s);
    g.delta[k] = delta_sq(x, s);
    g.resultant_norms[k] = std::sqrt(g.delta[k]);
    if (k == reference_class) g.cos_phi = cos_phi(x, s);
  }
  return g;
}

}  // namespace hsx
