#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace mglab {

// Static line chart of cumulative regret: per-seed traces faint, mean bold.
// Fixed-precision coordinates keep the output byte-stable.
inline std::string regret_svg(const std::vector<std::vector<double>>& per_seed,
                              const std::vector<double>& mean, const std::string& title) {
  const int width = 800, height = 480;
  const int left = 60, right = 20, top = 40, bottom = 40;
  const int plot_w = width - left - right;
  const int plot_h = height - top - bottom;

  std::size_t n = mean.size();
  double lo = 0.0, hi = 1e-9;
  for (const auto& trace : per_seed)
    for (double v : trace) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  for (double v : mean) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (n < 2) n = 2;

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  auto px = [&](std::size_t k, std::size_t len) {
    const std::size_t denom = len < 2 ? 1 : len - 1;
    return left + plot_w * static_cast<double>(k) / static_cast<double>(denom);
  };
  auto py = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };
  auto polyline = [&](const std::vector<double>& trace, const std::string& style) {
    std::string points;
    for (std::size_t k = 0; k < trace.size(); ++k) {
      if (k) points += ' ';
      points += fmt(px(k, trace.size())) + ',' + fmt(py(trace[k]));
    }
    return "<polyline fill=\"none\" " + style + " points=\"" + points + "\"/>\n";
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  // Axes.
  svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top) + "\" x2=\"" +
         std::to_string(left) + "\" y2=\"" + std::to_string(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top + plot_h) +
         "\" x2=\"" + std::to_string(left + plot_w) + "\" y2=\"" + std::to_string(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    const double y = py(v);
    svg += "<line x1=\"" + std::to_string(left - 4) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
           std::to_string(left) + "\" y2=\"" + fmt(y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + fmt(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(v) +
           "</text>\n";
    const std::size_t k = static_cast<std::size_t>((n - 1) * tick / 4);
    const double x = px(k, n);
    svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + std::to_string(top + plot_h) + "\" x2=\"" +
           fmt(x) + "\" y2=\"" + std::to_string(top + plot_h + 4) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt(x) + "\" y=\"" + std::to_string(top + plot_h + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(k + 1) + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(left + plot_w / 2) + "\" y=\"" +
         std::to_string(height - 6) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">episode"
         "</text>\n";
  for (const auto& trace : per_seed)
    svg += polyline(trace, "stroke=\"#9db4d8\" stroke-width=\"1\" stroke-opacity=\"0.6\"");
  svg += polyline(mean, "stroke=\"#1a3d7c\" stroke-width=\"2.5\"");
  svg += "</svg>\n";
  return svg;
}

}  // namespace mglab
