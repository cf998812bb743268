#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpwlnet/cpwl.hpp"
#include "cpwlnet/data_model.hpp"
#include "cpwlnet/error.hpp"

namespace cpwlnet {

struct PlotStyle {
  int width = 640;
  int height = 420;
  int margin = 40;
  double dot_radius = 3.0;
  std::string title;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// One-dimensional panel: samples as dots (first output component), the
/// predictor as one polyline per output component through its breakpoints,
/// and auxiliary stretches overdrawn dashed.
inline std::string render_svg(const CpwlPredictor& pred, const Dataset& data, const PlotStyle& style = {}) {
  if (data.dx() != 1 || pred.dx() != 1) throw UnsupportedError("plot: only 1-D inputs can be drawn");
  const auto [x_lo, x_hi] = pred.partition.domain.bounds1d();

  std::vector<double> knots{x_lo, x_hi};
  for (const auto& r : pred.partition.regions) {
    const auto [a, b] = r.bounds1d();
    knots.push_back(a);
    knots.push_back(b);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<Eigen::VectorXd> curve;
  for (double x : knots) curve.push_back(pred.eval(Eigen::VectorXd::Constant(1, x)));

  double y_lo = curve.front()(0), y_hi = y_lo;
  for (const auto& v : curve) {
    y_lo = std::min(y_lo, v.minCoeff());
    y_hi = std::max(y_hi, v.maxCoeff());
  }
  for (const auto& s : data.samples()) {
    y_lo = std::min(y_lo, s.y(0));
    y_hi = std::max(y_hi, s.y(0));
  }
  if (y_hi - y_lo < 1e-12) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  const double w = style.width - 2.0 * style.margin, h = style.height - 2.0 * style.margin;
  auto px = [&](double x) { return detail::svg_num(style.margin + (x - x_lo) / (x_hi - x_lo) * w); };
  auto py = [&](double y) { return detail::svg_num(style.margin + (y_hi - y) / (y_hi - y_lo) * h); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
     << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height
     << "\" fill=\"white\"/>\n"
     << "<rect x=\"" << style.margin << "\" y=\"" << style.margin << "\" width=\"" << w
     << "\" height=\"" << h << "\" fill=\"none\" stroke=\"#999\"/>\n";
  if (!style.title.empty())
    os << "<text x=\"" << style.width / 2 << "\" y=\"" << style.margin / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << detail::xml_escape(style.title) << "</text>\n";

  for (int k = 0; k < pred.dy(); ++k) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 5] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < knots.size(); ++i)
      os << (i ? " " : "") << px(knots[i]) << ',' << py(curve[i](k));
    os << "\"/>\n";
  }
  for (std::size_t r = 0; r < pred.partition.regions.size(); ++r) {
    if (!pred.partition.auxiliary[r]) continue;
    const auto [a, b] = pred.partition.regions[r].bounds1d();
    const Eigen::VectorXd ya = pred.eval(Eigen::VectorXd::Constant(1, a));
    const Eigen::VectorXd yb = pred.eval(Eigen::VectorXd::Constant(1, b));
    for (int k = 0; k < pred.dy(); ++k)
      os << "<line class=\"auxiliary\" x1=\"" << px(a) << "\" y1=\"" << py(ya(k)) << "\" x2=\"" << px(b)
         << "\" y2=\"" << py(yb(k)) << "\" stroke=\"white\" stroke-width=\"3\"/>\n"
         << "<line class=\"auxiliary\" x1=\"" << px(a) << "\" y1=\"" << py(ya(k)) << "\" x2=\"" << px(b)
         << "\" y2=\"" << py(yb(k)) << "\" stroke=\"" << colors[k % 5]
         << "\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (const auto& s : data.samples())
    os << "<circle cx=\"" << px(s.x(0)) << "\" cy=\"" << py(s.y(0)) << "\" r=\"" << style.dot_radius
       << "\" fill=\"black\"/>\n";
  os << "</svg>\n";
  return os.str();
}

inline void save_svg(const std::string& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path);
  out << svg;
}

}  // namespace cpwlnet
