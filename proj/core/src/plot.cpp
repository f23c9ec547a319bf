#include "hsx/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hsx/error.hpp"

namespace hsx {

namespace {

// Tableau-style categorical palette, cycled for K > 10.
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Viewport Viewport::fit(const Matrix& points, std::span<const double> radii, double size,
                       double margin) {
  double extent = 0.0;
  for (double r : radii) extent = std::max(extent, std::abs(r));
  for (double v : points.flat()) extent = std::max(extent, std::abs(v));
  extent = extent > 0.0 ? 1.05 * extent : 1.0;
  Viewport vp;
  vp.size = size;
  vp.margin = margin;
  vp.scale = (size / 2 - margin) / extent;
  return vp;
}

std::string render_latent_svg(const LatentPlot& plot) {
  if (plot.points.cols() != 2 && !(plot.points.rows() == 0 && plot.points.cols() == 0)) {
    throw ContractError("render_latent_svg: features must be 2-dimensional, got " +
                        std::to_string(plot.points.cols()));
  }
  if (plot.points.rows() != plot.labels.size()) {
    throw ContractError("render_latent_svg: point/label count mismatch");
  }
  const Matrix& points = plot.points;
  const Viewport vp = Viewport::fit(points, plot.radii);
  const double c = vp.size / 2;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(vp.size)
      << "\" height=\"" << num(vp.size) << "\" viewBox=\"0 0 " << num(vp.size) << ' '
      << num(vp.size) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g id=\"radii\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"4 3\">\n";
  for (std::size_t k = 0; k < plot.radii.size(); ++k) {
    svg << "<circle class=\"ring\" data-class=\"" << k << "\" cx=\"" << num(c) << "\" cy=\""
        << num(c) << "\" r=\"" << num(vp.scale * plot.radii[k]) << "\"/>\n";
  }
  svg << "</g>\n";

  if (!plot.proxy_directions.empty()) {
    const Matrix& w = plot.proxy_directions;
    if (w.rows() != 2) throw ContractError("render_latent_svg: proxies must be 2 x K");
    svg << "<g id=\"proxies\" stroke-width=\"1.5\">\n";
    for (std::size_t k = 0; k < w.cols() && k < plot.radii.size(); ++k) {
      const double n = std::hypot(w(0, k), w(1, k));
      if (n < kNormEps) continue;
      const double x = plot.radii[k] * w(0, k) / n;
      const double y = plot.radii[k] * w(1, k) / n;
      svg << "<line class=\"proxy\" data-class=\"" << k << "\" x1=\"" << num(c) << "\" y1=\""
          << num(c) << "\" x2=\"" << num(vp.px(x)) << "\" y2=\"" << num(vp.py(y))
          << "\" stroke=\"" << kPalette[k % 10] << "\"/>\n";
    }
    svg << "</g>\n";
  }

  svg << "<g id=\"points\" fill-opacity=\"0.7\">\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const std::size_t k = plot.labels[i];
    svg << "<circle class=\"pt\" data-class=\"" << k << "\" cx=\"" << num(vp.px(points(i, 0)))
        << "\" cy=\"" << num(vp.py(points(i, 1))) << "\" r=\"2\" fill=\"" << kPalette[k % 10]
        << "\"/>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace hsx
