#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "skdv/io.hpp"

namespace skdv {

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel = "t";
  std::string ylabel;
  bool log_y = false;
};

namespace svg {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

/// Roughly five round tick values covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                                    "#393b79", "#637939", "#8c6d31", "#843c39", "#000000"};

}  // namespace svg

/// Self-contained SVG line plot. NaN points (and nonpositive ones on a log
/// axis) break the polyline.
inline std::string render_svg(const PlotSpec& spec, const std::vector<Curve>& curves) {
  constexpr double W = 820, H = 520, ml = 80, mr = 190, mt = 40, mb = 55;
  const double pw = W - ml - mr, ph = H - mt - mb;

  auto usable = [&](double y) { return std::isfinite(y) && (!spec.log_y || y > 0.0); };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.x.size(); ++k) {
      if (!usable(c.y[k]) || !std::isfinite(c.x[k])) continue;
      const double y = spec.log_y ? std::log10(c.y[k]) : c.y[k];
      x0 = std::min(x0, c.x[k]);
      x1 = std::max(x1, c.x[k]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  const bool empty = !(x0 <= x1);
  if (empty) {
    x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  if (spec.log_y) {
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
    if (y1 == y0) y1 = y0 + 1.0;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg::num(W) + "\" height=\"" +
       svg::num(H) + "\" viewBox=\"0 0 " + svg::num(W) + " " + svg::num(H) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + svg::num(ml + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       svg::escape(spec.title) + "</text>\n";
  s += "<rect x=\"" + svg::num(ml) + "\" y=\"" + svg::num(mt) + "\" width=\"" + svg::num(pw) +
       "\" height=\"" + svg::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : svg::linear_ticks(x0, x1)) {
    s += "<line x1=\"" + svg::num(px(t)) + "\" y1=\"" + svg::num(mt + ph) + "\" x2=\"" +
         svg::num(px(t)) + "\" y2=\"" + svg::num(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg::num(px(t)) + "\" y=\"" + svg::num(mt + ph + 18) +
         "\" text-anchor=\"middle\">" + svg::tick_label(t) + "</text>\n";
  }
  std::vector<double> yt;
  if (spec.log_y) {
    const int stride = std::max(1, static_cast<int>(std::ceil((y1 - y0) / 8.0)));
    for (double e = y0; e <= y1 + 1e-9; e += stride) yt.push_back(e);
  } else {
    yt = svg::linear_ticks(y0, y1);
  }
  for (double t : yt) {
    const std::string label = spec.log_y ? "1e" + std::to_string(static_cast<int>(t)) : svg::tick_label(t);
    s += "<line x1=\"" + svg::num(ml - 5) + "\" y1=\"" + svg::num(py(t)) + "\" x2=\"" +
         svg::num(ml + pw) + "\" y2=\"" + svg::num(py(t)) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + svg::num(ml - 8) + "\" y=\"" + svg::num(py(t) + 4) +
         "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  s += "<text x=\"" + svg::num(ml + pw / 2) + "\" y=\"" + svg::num(H - 12) +
       "\" text-anchor=\"middle\">" + svg::escape(spec.xlabel) + "</text>\n";
  s += "<text transform=\"translate(18," + svg::num(mt + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + svg::escape(spec.ylabel) + "</text>\n";
  if (empty) {
    s += "<text x=\"" + svg::num(ml + pw / 2) + "\" y=\"" + svg::num(mt + ph / 2) +
         "\" text-anchor=\"middle\" fill=\"#888888\">no plottable values</text>\n";
  }

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    const std::string color = svg::kPalette[ci % std::size(svg::kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
      }
      pts.clear();
    };
    for (std::size_t k = 0; k < c.x.size(); ++k) {
      if (!usable(c.y[k])) {
        flush();
        continue;
      }
      const double y = spec.log_y ? std::log10(c.y[k]) : c.y[k];
      pts += svg::num(px(c.x[k])) + "," + svg::num(py(y)) + " ";
    }
    flush();
    const double ly = mt + 10 + 18.0 * static_cast<double>(ci);
    s += "<line x1=\"" + svg::num(W - mr + 12) + "\" y1=\"" + svg::num(ly) + "\" x2=\"" +
         svg::num(W - mr + 36) + "\" y2=\"" + svg::num(ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + svg::num(W - mr + 42) + "\" y=\"" + svg::num(ly + 4) + "\">" +
         svg::escape(c.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

struct FigureToggles {
  bool conserved = true;
  bool budget_j = true;
  bool budget_i = true;
  bool masses = true;

  bool any() const { return conserved || budget_j || budget_i || masses; }
};

/// Renders the selected figures from a series CSV into `out_dir`; returns
/// the files written. Nothing is written when the CSV is unusable.
inline std::vector<std::filesystem::path> emit_figures(const std::filesystem::path& csv_path,
                                                       const FigureToggles& sel,
                                                       const std::filesystem::path& out_dir) {
  const CsvTable table = read_csv(csv_path);
  require_schema(table, csv_path.string());
  if (table.rows.empty()) throw IoError(csv_path.string() + ": no data rows");

  const auto t = table.column("t");
  std::vector<std::pair<std::string, std::string>> pending;  // file name, content

  if (sel.conserved) {
    std::vector<Curve> curves;
    for (const char* name : {"i1", "i2", "i3"}) {
      const auto v = table.column(name);
      const double ref = std::max(std::abs(v.front()), kDriftFloor);
      Curve c{std::string("|") + name + " - " + name + "(0)| / |" + name + "(0)|", t, {}};
      for (double x : v) c.y.push_back(std::abs(x - v.front()) / ref);
      curves.push_back(std::move(c));
    }
    pending.emplace_back("conserved.svg",
                         render_svg({"Conserved quantities: relative drift", "t", "relative drift", true},
                                    curves));
  }

  auto stacked = [&](const std::vector<std::vector<std::string>>& groups,
                     const std::vector<std::string>& labels, const std::string& residual,
                     const std::string& title, const std::string& ylabel) {
    std::vector<Curve> curves;
    std::vector<double> acc(t.size(), 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (const auto& col : groups[g]) {
        const auto v = table.column(col);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
      }
      curves.push_back({labels[g], t, acc});
    }
    curves.push_back({"residual", t, table.column(residual)});
    return render_svg({title, "t", ylabel, false}, curves);
  };

  if (sel.budget_j) {
    std::vector<std::string> a1;
    for (int k = 1; k <= 8; ++k) a1.push_back("a1_" + std::to_string(k));
    pending.emplace_back("budget_j.svg",
                         stacked({a1, {"a2"}, {"a3"}, {"a4"}},
                                 {"A1", "A1+A2", "A1+...+A3", "A1+...+A4"}, "residual_j",
                                 "dJ/dt budget (stacked)", "contribution"));
  }
  if (sel.budget_i) {
    std::vector<std::vector<std::string>> groups;
    std::vector<std::string> labels;
    for (int k = 1; k <= 13; ++k) {
      groups.push_back({"b" + std::to_string(k)});
      labels.push_back(k == 1 ? "B1" : "B1+...+B" + std::to_string(k));
    }
    pending.emplace_back("budget_i.svg", stacked(groups, labels, "residual_i",
                                                 "dI/dt budget (stacked)", "contribution"));
  }
  if (sel.masses) {
    std::vector<Curve> curves;
    for (const char* name : {"mass_v2", "mass_u2", "mass_dv2", "mass_du2", "mass_u4", "tailmin_l2"}) {
      curves.push_back({name, t, table.column(name)});
    }
    pending.emplace_back("masses.svg",
                         render_svg({"Region masses", "t", "mass", true}, curves));
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : pending) {
    const auto path = out_dir / name;
    write_file_atomic(path, content);
    written.push_back(path);
  }
  return written;
}

}  // namespace skdv
