#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hsx/numkit.hpp"

namespace hsx {

/// Maps embedding coordinates into the square SVG canvas:
///   px = size/2 + scale * x,   py = size/2 - scale * y,
///   scale = (size/2 - margin) / extent,
/// where extent is 1.05 times the largest of every radius and every |coordinate|
/// (1 if all are zero).
struct Viewport {
  double size = 800.0;
  double margin = 20.0;
  double scale = 1.0;

  double px(double x) const { return size / 2 + scale * x; }
  double py(double y) const { return size / 2 - scale * y; }

  static Viewport fit(const Matrix& points, std::span<const double> radii, double size = 800.0,
                      double margin = 20.0);
};

struct LatentPlot {
  Matrix points;                    // N x 2
  std::vector<std::size_t> labels;  // N
  Vector radii;                     // concentric circles, one per class
  Matrix proxy_directions;          // optional 2 x K; drawn as rays to r_k * w_hat_k
};

/// Standalone SVG 1.1 document: one concentric circle per radius, optional
/// scaled-proxy rays, and one dot per sample colored by class. Throws
/// ContractError unless points are two-dimensional.
std::string render_latent_svg(const LatentPlot& plot);

}  // namespace hsx
