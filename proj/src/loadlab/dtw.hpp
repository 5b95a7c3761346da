#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "loadlab/profile.hpp"

namespace loadlab {

/// DTW with squared local cost and no warping window. The accumulated cost
/// c(n, m) is returned without a final square root.
double dtw_distance(std::span<const double> x, std::span<const double> y);

/// Full accumulated-cost matrix (row-major n x m); debugging and oracle
/// comparison only, the distance path keeps two rolling rows.
std::vector<double> dtw_cost_matrix(std::span<const double> x, std::span<const double> y);

/// Dense symmetric p x p matrix of DTW distances.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t p) : p_(p), data_(p * p, 0.0) {}

  std::size_t size() const { return p_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * p_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * p_ + j] = v;
    data_[j * p_ + i] = v;
  }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * p_, p_}; }

  bool operator==(const DistanceMatrix&) const = default;

 private:
  std::size_t p_ = 0;
  std::vector<double> data_;
};

/// All p(p-1)/2 pairwise distances; rows are processed in parallel. Every
/// profile must be complete.
DistanceMatrix distance_matrix(std::span<const DailyProfile> profiles, unsigned threads = 0);
DistanceMatrix distance_matrix(std::span<const HourlyValues> series, unsigned threads = 0);

inline constexpr char kMatrixMagic[8] = {'L', 'L', 'D', 'T', 'W', 'M', 'A', 'T'};
inline constexpr std::uint32_t kMatrixVersion = 1;

/// Binary layout (little-endian): 8-byte magic "LLDTWMAT", u32 version,
/// u32 reserved (0), u64 p, then the strict lower triangle row by row
/// (i = 1..p-1, j = 0..i-1) as float64.
void save_matrix(const std::filesystem::path& path, const DistanceMatrix& d);
DistanceMatrix load_matrix(const std::filesystem::path& path);
/// Full p x p CSV without header.
void export_matrix_csv(const std::filesystem::path& path, const DistanceMatrix& d);

}  // namespace loadlab
