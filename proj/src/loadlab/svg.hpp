#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace loadlab::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
  std::vector<double> band_low, band_high;  ///< optional shaded band, same length as x
};

/// Minimal line chart: shared axes, one polyline per series, legend on the right.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     std::span<const Series> series);

}  // namespace loadlab::svg
