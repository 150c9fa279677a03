// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "fob/evaluation/aggregate.hpp"

namespace fob {

enum class HeatmapValue { best, last };

inline std::string to_string(HeatmapValue v) { return v == HeatmapValue::best ? "best" : "last"; }

inline HeatmapValue heatmap_value_from(const std::string& s) {
  if (s == "best") return HeatmapValue::best;
  if (s == "last") return HeatmapValue::last;
  throw BadParameter("evaluation.plot.value must be best or last, got '" + s + "'");
}

struct HeatmapSpec {
  std::string x_key;
  std::string y_key = "optimizer.learning_rate";
  HeatmapValue value = HeatmapValue::best;
  std::string title;
};

/// Cell layout of a heatmap before drawing.
struct HeatmapGrid {
  std::vector<Node> xs;  // ascending
  std::vector<Node> ys;  // descending, top row first
  // values[row][col]; missing combinations are NaN
  std::vector<std::vector<double>> values;
  std::size_t best_row = 0, best_col = 0;
  double lo = 0, hi = 0;
};

namespace detail {

inline std::size_t index_of(const std::vector<Node>& axis, const Node& v) {
  for (std::size_t i = 0; i < axis.size(); ++i)
    if (compare_scalar(axis[i], v) == 0) return i;
  return axis.size();
}

inline void insert_sorted(std::vector<Node>& axis, const Node& v) {
  if (index_of(axis, v) != axis.size()) return;
  axis.push_back(v);
  std::sort(axis.begin(), axis.end(),
            [](const Node& a, const Node& b) { return compare_scalar(a, b) < 0; });
}

}  // namespace detail

/// Places the cells that carry both axis keys. The best cell is the argmax
/// (or argmin) of means; ties go to the first cell in (x, y) ascending order.
inline HeatmapGrid layout_heatmap(const std::vector<AggregateCell>& cells, const HeatmapSpec& spec,
                                  Direction direction) {
  if (spec.x_key == spec.y_key) throw BadParameter("heatmap axes must differ");
  HeatmapGrid g;
  struct Placed {
    const Node* x;
    const Node* y;
    double v;
  };
  std::vector<Placed> placed;
  for (const auto& c : cells) {
    const Node* x = c.key(spec.x_key);
    const Node* y = c.key(spec.y_key);
    if (!x || !y) continue;
    placed.push_back({x, y, spec.value == HeatmapValue::best ? c.mean_best : c.mean_last});
    detail::insert_sorted(g.xs, *x);
    detail::insert_sorted(g.ys, *y);
  }
  if (placed.empty())
    throw EmptyGrid("no cells carry both " + spec.x_key + " and " + spec.y_key);
  std::reverse(g.ys.begin(), g.ys.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  g.values.assign(g.ys.size(), std::vector<double>(g.xs.size(), nan));
  for (const auto& p : placed) {
    double& slot = g.values[detail::index_of(g.ys, *p.y)][detail::index_of(g.xs, *p.x)];
    if (!std::isnan(slot))
      throw DuplicateCell("two cells at " + spec.x_key + "=" + scalar_text(*p.x) + ", " +
                          spec.y_key + "=" + scalar_text(*p.y));
    slot = p.v;
  }
  bool found = false;
  double best = 0;
  for (std::size_t col = 0; col < g.xs.size(); ++col)
    for (std::size_t row = g.ys.size(); row-- > 0;) {
      const double v = g.values[row][col];
      if (std::isnan(v)) continue;
      if (!found) {
        g.lo = g.hi = v;
      } else {
        g.lo = std::min(g.lo, v);
        g.hi = std::max(g.hi, v);
      }
      const bool better = direction == Direction::maximize ? v > best : v < best;
      if (!found || better) {
        best = v;
        g.best_row = row;
        g.best_col = col;
      }
      found = true;
    }
  return g;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Axis tick text: numbers in scientific notation with trailing zeros
/// dropped from the mantissa (1e-03, 3.16e-02), anything else verbatim.
inline std::string axis_label(const Node& v) {
  if (!v.is_number()) return scalar_text(v);
  const double x = v.as_double();
  if (x == 0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  std::string s = buf;
  const auto e = s.find('e');
  std::string mant = s.substr(0, e);
  if (mant.find('.') != std::string::npos) {
    while (mant.back() == '0') mant.pop_back();
    if (mant.back() == '.') mant.pop_back();
  }
  return mant + s.substr(e);
}

/// White to steel blue, linear in t over [0, 1].
inline std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int to) { return static_cast<int>(std::lround(255 + t * (to - 255))); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(70), mix(130), mix(180));
  return buf;
}

inline std::string render_heatmap(const std::vector<AggregateCell>& cells, const HeatmapSpec& spec,
                                  Direction direction) {
  const HeatmapGrid g = layout_heatmap(cells, spec, direction);
  constexpr int cw = 80, ch = 40, left = 110, top = 50, bottom = 60, right = 20;
  const int cols = static_cast<int>(g.xs.size()), rows = static_cast<int>(g.ys.size());
  const int width = left + cols * cw + right, height = top + rows * ch + bottom;
  std::string s;
  char buf[512];
  auto put = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    s += buf;
  };
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  put("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  s += "<defs><pattern id=\"hatch\" width=\"8\" height=\"8\" patternUnits=\"userSpaceOnUse\" "
       "patternTransform=\"rotate(45)\"><rect width=\"8\" height=\"8\" fill=\"#ffffff\"/>"
       "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"8\" stroke=\"#999999\" stroke-width=\"2\"/>"
       "</pattern></defs>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  const std::string title =
      spec.title.empty() ? "test " + to_string(spec.value) : spec.title;
  put("<text x=\"%d\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">", width / 2);
  s += xml_escape(title) + "</text>\n";

  const double range = g.hi - g.lo;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int x = left + c * cw, y = top + r * ch;
      const double v = g.values[r][c];
      if (std::isnan(v)) {
        put("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"url(#hatch)\" "
            "stroke=\"#cccccc\"/>\n",
            x, y, cw, ch);
        continue;
      }
      const double t = range > 0 ? (v - g.lo) / range : 0.0;
      put("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\" stroke=\"#cccccc\"/>\n",
          x, y, cw, ch, ramp_color(t).c_str());
      put("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" dominant-baseline=\"middle\" "
          "fill=\"%s\">%.2f</text>\n",
          x + cw / 2, y + ch / 2, t > 0.6 ? "#ffffff" : "#000000", v);
    }
  put("<rect class=\"best\" x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
      "stroke=\"#d62728\" stroke-width=\"3\"/>\n",
      left + static_cast<int>(g.best_col) * cw, top + static_cast<int>(g.best_row) * ch, cw, ch);

  for (int c = 0; c < cols; ++c) {
    put("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">", left + c * cw + cw / 2,
        top + rows * ch + 18);
    s += xml_escape(axis_label(g.xs[c])) + "</text>\n";
  }
  for (int r = 0; r < rows; ++r) {
    put("<text x=\"%d\" y=\"%d\" text-anchor=\"end\" dominant-baseline=\"middle\">", left - 8,
        top + r * ch + ch / 2);
    s += xml_escape(axis_label(g.ys[r])) + "</text>\n";
  }
  put("<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">", left + cols * cw / 2, height - 14);
  s += xml_escape(spec.x_key) + "</text>\n";
  put("<text x=\"16\" y=\"%d\" text-anchor=\"middle\" transform=\"rotate(-90 16 %d)\">",
      top + rows * ch / 2, top + rows * ch / 2);
  s += xml_escape(spec.y_key) + "</text>\n";
  s += "</svg>\n";
  return s;
}

/// The grid as CSV: first column y values (top row first), then one column
/// per x value; missing cells are empty.
inline std::string heatmap_csv(const std::vector<AggregateCell>& cells, const HeatmapSpec& spec,
                               Direction direction) {
  const HeatmapGrid g = layout_heatmap(cells, spec, direction);
  std::string s = csv_field(spec.y_key + "\\" + spec.x_key);
  for (const auto& x : g.xs) s += "," + csv_field(scalar_text(x));
  s += "\n";
  for (std::size_t r = 0; r < g.ys.size(); ++r) {
    s += csv_field(scalar_text(g.ys[r]));
    for (double v : g.values[r]) s += "," + (std::isnan(v) ? std::string() : format_double(v));
    s += "\n";
  }
  return s;
}

}  // namespace fob
