#pragma once

#include <cstddef>
#include <span>

#include "hsx/numkit.hpp"

namespace hsx {

/// Learnable class proxies (columns of a d x K matrix) with one fixed radius
/// per class. Unit and radius-scaled proxies are derived on read; the raw
/// columns are never renormalized in place.
class ProxyBank {
 public:
  ProxyBank() = default;
  ProxyBank(Matrix weights, Vector radii);

  /// Gaussian-initialized columns.
  static ProxyBank random(std::size_t dim, std::size_t classes, Vector radii, Rng& rng);

  std::size_t dim() const noexcept { return weights_.rows(); }
  std::size_t classes() const noexcept { return weights_.cols(); }

  const Matrix& weights() const noexcept { return weights_; }
  Matrix& weights() noexcept { return weights_; }
  const Vector& radii() const noexcept { return radii_; }
  double radius(std::size_t k) const { return radii_.at(k); }

  Vector raw(std::size_t k) const { return weights_.col(k); }
  /// w_k / ||w_k||; throws DegenerateProxyError if ||w_k|| <= eps.
  Vector unit(std::size_t k) const;
  /// r_k * unit(k).
  Vector scaled(std::size_t k) const;

  /// Re-checks every column norm; called after optimizer steps.
  void validate() const;

 private:
  Matrix weights_;
  Vector radii_;
};

/// r_k = gap * (k + 1).
Vector default_radii(std::size_t classes, double gap = 10.0);

/// x_hat . w_hat clamped to [-1, 1]; 0 if either norm is below eps.
double cos_theta(std::span<const double> x, std::span<const double> w);

Vector scaled_proxy(const ProxyBank& bank, std::size_t k);

/// R = x - w_r.
Vector resultant(std::span<const double> x, std::span<const double> scaled);

/// R_hat . (-w_r_hat), clamped. Returns 1 when ||R|| < eps: the sample sits on
/// its scaled proxy.
double cos_phi(std::span<const double> x, std::span<const double> scaled);

/// ||w_r - x||^2.
double delta_sq(std::span<const double> x, std::span<const double> scaled);

enum class TriangleVariant {
  // ||x|| cos(phi) + ||w_r|| cos(pi - (theta + phi)). The two side lengths
  // are exchanged, so this only agrees with ||R|| in special cases.
  swapped_sides,
  // ||w_r|| cos(phi) + ||x|| cos(pi - (theta + phi)) with phi measured between
  // R and -w_r; this is the exact side-length projection law.
  projection_law,
};

double triangle_magnitude(double norm_x, double norm_scaled, double theta, double phi,
                          TriangleVariant variant);

/// Left-hand side of the two-class decision boundary line
///   (cos(theta_1 + m) + ||x_1||) - (cos(theta_2) + ||x_2||)   claimed class 1
///   (cos(theta_1) + ||x_1||) - (cos(theta_2 + m) + ||x_2||)   claimed class 2
/// where theta_k is the angle between x_k and proxy k. Requires K == 2.
double decision_boundary_residual(std::span<const double> x1, std::span<const double> x2,
                                  const ProxyBank& bank, double margin, int claimed_class);

/// cos(theta + m) from cos(theta) via the angle-addition expansion, theta in [0, pi].
double cos_theta_plus_margin(double cos_t, double margin) noexcept;

struct SampleGeometry {
  Vector cos_theta;        // per class
  double cos_phi = 1.0;    // against the reference class
  Vector delta;            // per class, squared distance to scaled proxy
  Vector resultant_norms;  // per class, ||x - w_r||
};

SampleGeometry sample_geometry(std::span<const double> x, const ProxyBank& bank,
                               std::size_t reference_class);

}  // namespace hsx
