#pragma once

// Minimal standalone SVG boxplots: one box per sweep value plus a dashed
// horizontal line at the true parameter value.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bbis/studies.hpp"

namespace bbis {

struct BoxStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;
};

/// Quartiles with whiskers at the most extreme data within 1.5 IQR of the box.
inline BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) throw Error("box_stats: no values");
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.median = quantile_sorted(v, 0.5);
  b.q25 = quantile_sorted(v, 0.25);
  b.q75 = quantile_sorted(v, 0.75);
  const double iqr = b.q75 - b.q25;
  const double lo_fence = b.q25 - 1.5 * iqr;
  const double hi_fence = b.q75 + 1.5 * iqr;
  b.whisker_lo = b.q25;
  b.whisker_hi = b.q75;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
      continue;
    }
    b.whisker_lo = std::min(b.whisker_lo, x);
    b.whisker_hi = std::max(b.whisker_hi, x);
  }
  return b;
}

struct BoxplotGroup {
  std::string label;
  std::vector<double> values;
};

/// Plot geometry. Data value v maps to pixel row y_px(v).
struct PlotFrame {
  double width = 640.0;
  double height = 400.0;
  double left = 70.0;
  double right = 20.0;
  double top = 40.0;
  double bottom = 50.0;
  double y_lo = 0.0;
  double y_hi = 1.0;

  double plot_height() const { return height - top - bottom; }
  double plot_width() const { return width - left - right; }
  double y_px(double v) const { return top + (y_hi - v) / (y_hi - y_lo) * plot_height(); }
};

/// Axis range covering all data and the true value, padded by 5%.
inline PlotFrame make_frame(const std::vector<BoxplotGroup>& groups, double truth) {
  PlotFrame f;
  double lo = truth;
  double hi = truth;
  for (const auto& g : groups)
    for (double x : g.values) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  double pad = 0.05 * (hi - lo);
  if (!(pad > 0.0)) pad = std::max(0.5, 0.05 * std::abs(hi));
  f.y_lo = lo - pad;
  f.y_hi = hi + pad;
  return f;
}

inline std::string render_boxplot(const std::vector<BoxplotGroup>& groups, double truth,
                                  const std::string& title, const std::string& x_label) {
  if (groups.empty()) throw Error("render_boxplot: no groups");
  for (const auto& g : groups)
    if (g.values.empty()) throw Error("render_boxplot: group '" + g.label + "' has no values");
  const PlotFrame f = make_frame(groups, truth);
  auto num = [](double v) { return format_number(std::round(v * 100.0) / 100.0); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.width) << "\" height=\""
     << num(f.height) << "\" viewBox=\"0 0 " << num(f.width) << ' ' << num(f.height) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << num(f.width) << "\" height=\"" << num(f.height)
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(f.width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // Axes and y ticks.
  const double x0 = f.left;
  const double x1 = f.width - f.right;
  const double yb = f.height - f.bottom;
  os << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(f.top) << "\" x2=\"" << num(x0)
     << "\" y2=\"" << num(yb) << "\"/>\n";
  os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(yb) << "\" x2=\"" << num(x1) << "\" y2=\""
     << num(yb) << "\"/>\n";
  os << "</g>\n";
  os << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = f.y_lo + (f.y_hi - f.y_lo) * t / 4.0;
    const double py = f.y_px(v);
    std::ostringstream lab;
    lab.precision(4);
    lab << v;
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py + 4) << "\">" << lab.str()
       << "</text>\n";
  }
  os << "</g>\n";

  const double slot = f.plot_width() / static_cast<double>(groups.size());
  const double box_w = std::min(60.0, 0.5 * slot);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const BoxStats b = box_stats(groups[i].values);
    const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
    const double bl = cx - box_w / 2;
    const double ytop = f.y_px(b.q75);
    const double ybot = f.y_px(b.q25);
    os << "<g class=\"box\" stroke=\"black\" fill=\"none\">\n";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.y_px(b.whisker_hi)) << "\" x2=\""
       << num(cx) << "\" y2=\"" << num(ytop) << "\"/>\n";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(ybot) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(f.y_px(b.whisker_lo)) << "\"/>\n";
    if (ybot - ytop > 0.0) {
      os << "<rect x=\"" << num(bl) << "\" y=\"" << num(ytop) << "\" width=\"" << num(box_w)
         << "\" height=\"" << num(ybot - ytop) << "\" fill=\"#cfe0f3\"/>\n";
    }
    os << "<line class=\"median\" x1=\"" << num(bl) << "\" y1=\"" << num(f.y_px(b.median))
       << "\" x2=\"" << num(bl + box_w) << "\" y2=\"" << num(f.y_px(b.median))
       << "\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers)
      os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(f.y_px(o)) << "\" r=\"2.5\"/>\n";
    os << "</g>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << num(yb + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << groups[i].label << "</text>\n";
  }
  os << "<text x=\"" << num(x0 + f.plot_width() / 2) << "\" y=\"" << num(f.height - 8)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
     << "</text>\n";
  os << "<line class=\"truth\" x1=\"" << num(x0) << "\" y1=\"" << num(f.y_px(truth)) << "\" x2=\""
     << num(x1) << "\" y2=\"" << num(f.y_px(truth))
     << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
  os << "</svg>\n";
  return os.str();
}

/// Boxplot of one parameter (index into beta..., gamma_sq) across sweep values.
inline std::string render_parameter_boxplot(const StudyResult& r, std::size_t param) {
  const auto names = parameter_names(r.config.covariate_count());
  if (param >= names.size()) throw Error("render_parameter_boxplot: parameter out of range");
  std::vector<BoxplotGroup> groups;
  for (std::size_t s = 0; s < r.config.sweep_size(); ++s) {
    auto v = parameter_values(r, s, param);
    if (v.empty()) continue;
    groups.push_back({format_number(r.config.sweep_value(s)), std::move(v)});
  }
  return render_boxplot(groups, parameter_truth(r.config, param), names[param],
                        r.config.sweep_name());
}

inline void emit_boxplot(const StudyResult& r, std::size_t param, const std::string& path) {
  const std::string svg = render_parameter_boxplot(r, param);
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << svg;
  if (!os) throw Error("failed writing " + path);
}

}  // namespace bbis
