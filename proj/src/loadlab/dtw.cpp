#include "loadlab/dtw.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "loadlab/csv.hpp"
#include "loadlab/error.hpp"
#include "loadlab/parallel.hpp"

namespace loadlab {

static_assert(std::endian::native == std::endian::little, "matrix I/O assumes little-endian");

double dtw_distance(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw DataError("dtw_distance: empty sequence");
  const std::size_t m = y.size();
  // Short series (24 h profiles) stay on the stack.
  constexpr std::size_t kStack = 64;
  double stack_buf[2 * kStack];
  std::vector<double> heap_buf;
  double* prev = stack_buf;
  double* cur = stack_buf + kStack;
  if (m > kStack) {
    heap_buf.resize(2 * m);
    prev = heap_buf.data();
    cur = heap_buf.data() + m;
  }

  // First row accumulates along the edge.
  double d = x[0] - y[0];
  prev[0] = d * d;
  for (std::size_t j = 1; j < m; ++j) {
    d = x[0] - y[j];
    prev[j] = prev[j - 1] + d * d;
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double xi = x[i];
    d = xi - y[0];
    cur[0] = prev[0] + d * d;
    for (std::size_t j = 1; j < m; ++j) {
      d = xi - y[j];
      cur[j] = d * d + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

std::vector<double> dtw_cost_matrix(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw DataError("dtw_cost_matrix: empty sequence");
  const std::size_t n = x.size(), m = y.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> c(n * m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double d = x[i] - y[j];
      double best = 0.0;
      if (i > 0 || j > 0) {
        best = inf;
        if (i > 0 && j > 0) best = std::min(best, c[(i - 1) * m + j - 1]);
        if (i > 0) best = std::min(best, c[(i - 1) * m + j]);
        if (j > 0) best = std::min(best, c[i * m + j - 1]);
      }
      c[i * m + j] = d * d + best;
    }
  }
  return c;
}

DistanceMatrix distance_matrix(std::span<const HourlyValues> series, unsigned threads) {
  const std::size_t p = series.size();
  if (p < 2) throw DataError("distance_matrix: need at least 2 profiles");
  DistanceMatrix d(p);
  // Row i fills D[i][j], j < i; each entry is written by exactly one task.
  parallel_for(
      p, threads,
      [&](std::size_t i) {
        for (std::size_t j = 0; j < i; ++j) d.set(i, j, dtw_distance(series[i], series[j]));
      },
      8);
  return d;
}

DistanceMatrix distance_matrix(std::span<const DailyProfile> profiles, unsigned threads) {
  std::vector<HourlyValues> series;
  series.reserve(profiles.size());
  for (const auto& p : profiles) {
    if (!p.complete)
      throw DataError("distance_matrix: profile " + p.household_id + " " + format_date(p.date) +
                      " has gaps");
    series.push_back(p.hours);
  }
  return distance_matrix(series, threads);
}

void save_matrix(const std::filesystem::path& path, const DistanceMatrix& d) {
  auto out = csv::open_output(path);
  out.write(kMatrixMagic, sizeof kMatrixMagic);
  std::uint32_t version = kMatrixVersion, reserved = 0;
  std::uint64_t p = d.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out.write(reinterpret_cast<const char*>(&p), sizeof p);
  std::vector<double> row;
  for (std::size_t i = 1; i < d.size(); ++i) {
    auto r = d.row(i);
    out.write(reinterpret_cast<const char*>(r.data()), static_cast<std::streamsize>(i * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

DistanceMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  std::uint32_t version = 0, reserved = 0;
  std::uint64_t p = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  in.read(reinterpret_cast<char*>(&p), sizeof p);
  if (!in || std::memcmp(magic, kMatrixMagic, sizeof magic) != 0)
    throw DataError(path.string() + ": not a distance matrix file");
  if (version != kMatrixVersion)
    throw DataError(path.string() + ": unsupported matrix version " + std::to_string(version));
  auto expected = static_cast<std::uintmax_t>(24 + p * (p - 1) / 2 * sizeof(double));
  if (p > (1u << 20) || std::filesystem::file_size(path) != expected)
    throw DataError(path.string() + ": truncated or oversized matrix file");
  DistanceMatrix d(p);
  std::vector<double> row(p);
  for (std::size_t i = 1; i < p; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(i * sizeof(double)));
    for (std::size_t j = 0; j < i; ++j) {
      if (!(row[j] >= 0.0)) throw DataError(path.string() + ": negative or NaN distance");
      d.set(i, j, row[j]);
    }
  }
  if (!in) throw DataError(path.string() + ": read failed");
  return d;
}

void export_matrix_csv(const std::filesystem::path& path, const DistanceMatrix& d) {
  auto out = csv::open_output(path);
  std::string buf;
  for (std::size_t i = 0; i < d.size(); ++i) {
    buf.clear();
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j) buf += ',';
      csv::append_double(buf, d(i, j));
    }
    buf += '\n';
    out << buf;
  }
}

}  // namespace loadlab
