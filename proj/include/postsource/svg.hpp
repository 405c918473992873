#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "postsource/errors.hpp"

namespace postsource {

// Minimal deterministic SVG line charts: fixed canvas, fixed palette, %.2f
// coordinates, no external resources. Byte-identical output for equal input
// is part of the contract; nothing here may consult locale or time.
struct chart_series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct chart_options {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 440;
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
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

// "Nice" tick positions covering [lo, hi] on a linear scale.
inline std::vector<double> linear_ticks(double lo, double hi) {
  if (!(hi > lo)) return {lo};
  double raw = (hi - lo) / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double norm = raw / mag;
  double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 0.5 * step; v += step) t.push_back(v);
  return t;
}

// Decade ticks for a log scale, values given in log10.
inline std::vector<double> decade_ticks(double llo, double lhi) {
  std::vector<double> t;
  for (double e = std::ceil(llo - 1e-9); e <= lhi + 1e-9; e += 1.0) t.push_back(e);
  if (t.empty()) t.push_back(llo);
  return t;
}

} // namespace detail

inline std::string render_chart(const std::vector<chart_series>& series,
                                const chart_options& opt) {
  require(!series.empty(), errc::invalid_config, "render_chart: no series");
  static const char* palette[] = {"#3366cc", "#dc3912", "#ff9900", "#109618",
                                  "#990099", "#0099c6", "#dd4477", "#66aa00"};
  constexpr int npal = 8;

  auto tx = [&](double v) { return opt.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return opt.log_y ? std::log10(v) : v; };

  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), errc::invalid_config, "render_chart: ragged series");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (opt.log_x && !(s.x[i] > 0)) continue;
      if (opt.log_y && !(s.y[i] > 0)) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, tx(s.x[i]));
      xhi = std::max(xhi, tx(s.x[i]));
      ylo = std::min(ylo, ty(s.y[i]));
      yhi = std::max(yhi, ty(s.y[i]));
    }
  }
  require(xlo <= xhi && ylo <= yhi, errc::invalid_config, "render_chart: no plottable points");
  if (xhi - xlo < 1e-12) { xlo -= 0.5; xhi += 0.5; }
  if (yhi - ylo < 1e-12) { ylo -= 0.5; yhi += 0.5; }
  double ypad = 0.05 * (yhi - ylo);
  ylo -= ypad;
  yhi += ypad;

  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  auto px = [&](double v) { return ml + pw * (tx(v) - xlo) / (xhi - xlo); };
  auto py = [&](double v) { return mt + ph * (1.0 - (ty(v) - ylo) / (yhi - ylo)); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
       "\" height=\"" + std::to_string(opt.height) + "\" viewBox=\"0 0 " +
       std::to_string(opt.width) + " " + std::to_string(opt.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"" + detail::fmt2(opt.width / 2.0) +
       "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">" +
       detail::xml_escape(opt.title) + "</text>\n";

  auto xticks = opt.log_x ? detail::decade_ticks(xlo, xhi) : detail::linear_ticks(xlo, xhi);
  auto yticks = opt.log_y ? detail::decade_ticks(ylo, yhi) : detail::linear_ticks(ylo, yhi);
  for (double t : xticks) {
    double gx = ml + pw * (t - xlo) / (xhi - xlo);
    if (gx < ml - 0.5 || gx > ml + pw + 0.5) continue;
    s += "<line x1=\"" + detail::fmt2(gx) + "\" y1=\"" + detail::fmt2(mt) + "\" x2=\"" +
         detail::fmt2(gx) + "\" y2=\"" + detail::fmt2(mt + ph) +
         "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    double shown = opt.log_x ? std::pow(10.0, t) : t;
    s += "<text x=\"" + detail::fmt2(gx) + "\" y=\"" + detail::fmt2(mt + ph + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
         detail::fmt_tick(shown) + "</text>\n";
  }
  for (double t : yticks) {
    double gy = mt + ph * (1.0 - (t - ylo) / (yhi - ylo));
    if (gy < mt - 0.5 || gy > mt + ph + 0.5) continue;
    s += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(gy) + "\" x2=\"" +
         detail::fmt2(ml + pw) + "\" y2=\"" + detail::fmt2(gy) +
         "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    double shown = opt.log_y ? std::pow(10.0, t) : t;
    s += "<text x=\"" + detail::fmt2(ml - 6) + "\" y=\"" + detail::fmt2(gy + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
         detail::fmt_tick(shown) + "</text>\n";
  }
  s += "<rect x=\"" + detail::fmt2(ml) + "\" y=\"" + detail::fmt2(mt) + "\" width=\"" +
       detail::fmt2(pw) + "\" height=\"" + detail::fmt2(ph) +
       "\" fill=\"none\" stroke=\"#444444\"/>\n";
  s += "<text x=\"" + detail::fmt2(ml + pw / 2) + "\" y=\"" +
       detail::fmt2(opt.height - 12.0) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
       detail::xml_escape(opt.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + detail::fmt2(mt + ph / 2) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       detail::fmt2(mt + ph / 2) + ")\">" + detail::xml_escape(opt.y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& sr = series[si];
    const char* color = palette[si % npal];
    std::string pts;
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (opt.log_x && !(sr.x[i] > 0)) continue;
      if (opt.log_y && !(sr.y[i] > 0)) continue;
      if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
      if (!pts.empty()) pts += " ";
      pts += detail::fmt2(px(sr.x[i])) + "," + detail::fmt2(py(sr.y[i]));
    }
    if (!pts.empty())
      s += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
    double ly = mt + 16.0 + 16.0 * static_cast<double>(si);
    s += "<line x1=\"" + detail::fmt2(ml + pw - 150) + "\" y1=\"" + detail::fmt2(ly - 4) +
         "\" x2=\"" + detail::fmt2(ml + pw - 128) + "\" y2=\"" + detail::fmt2(ly - 4) +
         "\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";
    s += "<text x=\"" + detail::fmt2(ml + pw - 122) + "\" y=\"" + detail::fmt2(ly) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::xml_escape(sr.label) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

} // namespace postsource
