#include "loadlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "loadlab/csv.hpp"

namespace loadlab::svg {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     std::span<const Series> series) {
  constexpr double W = 900, H = 480, left = 70, right = 180, top = 40, bottom = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y1 = std::max(y1, s.band_high.empty() ? s.y[i] : s.band_high[i]);
      y0 = std::min(y0, s.band_low.empty() ? s.y[i] : s.band_low[i]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto sy = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(title) + "</text>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(H - bottom) + "\" x2=\"" + num(W - right) +
         "\" y2=\"" + num(H - bottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(H - bottom) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    double xv = x0 + (x1 - x0) * t / 5.0, yv = y0 + (y1 - y0) * t / 5.0;
    out += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(H - bottom + 18) +
           "\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
    out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" +
           num(yv) + "</text>\n";
  }
  out += "<text x=\"" + num((left + W - right) / 2) + "\" y=\"" + num(H - 15) +
         "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + num((top + H - bottom) / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.band_low.empty() && s.band_low.size() == s.x.size()) {
      out += "<polygon fill=\"" + std::string(color) + "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out += num(sx(s.x[i])) + "," + num(sy(s.band_high[i])) + " ";
      for (std::size_t i = s.x.size(); i-- > 0;)
        out += num(sx(s.x[i])) + "," + num(sy(s.band_low[i])) + " ";
      out += "\"/>\n";
    }
    out += "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" + std::string(color) + "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out += num(sx(s.x[i])) + "," + num(sy(s.y[i])) + " ";
    out += "\"/>\n";
    double ly = top + 16.0 * static_cast<double>(k);
    out += "<rect x=\"" + num(W - right + 10) + "\" y=\"" + num(ly) + "\" width=\"12\" height=\"3\" fill=\"" +
           color + "\"/>\n";
    out += "<text x=\"" + num(W - right + 28) + "\" y=\"" + num(ly + 5) + "\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  auto file = csv::open_output(path);
  file << out;
}

}  // namespace loadlab::svg
