#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "loadlab/profile.hpp"

namespace loadlab {

using ClusterId = int;
inline constexpr ClusterId kUnassigned = -1;
inline constexpr ClusterId kEconomicOutage = -2;

struct LabeledProfile {
  ProfileKey key;
  int age_days = 0;
  ClusterId cluster = kUnassigned;
  double distance = 0.0;  ///< DTW distance to the assigned medoid
};

struct LabelingResult {
  std::vector<LabeledProfile> labels;  ///< same order as the input profiles
  std::size_t excluded_incomplete = 0;
};

/// Nearest-medoid labelling by DTW distance; ties go to the lowest medoid
/// index and incomplete profiles stay unassigned.
LabelingResult label_full_dataset(std::span<const DailyProfile> profiles,
                                  std::span<const HourlyValues> medoids, unsigned threads = 0);

/// Chronological labels of one household, index 0 at its first labelled age.
/// Absent days and unassigned days are std::nullopt.
std::vector<std::optional<ClusterId>> household_sequence(std::span<const LabeledProfile> labels,
                                                         std::string_view household_id);

/// `household_id,date,age_days,cluster,distance`; unassigned rows carry
/// `unassigned` and an empty distance.
void write_labels_csv(const std::filesystem::path& path, std::span<const LabeledProfile> labels);
std::vector<LabeledProfile> read_labels_csv(const std::filesystem::path& path);

}  // namespace loadlab
