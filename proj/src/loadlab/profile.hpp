#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "loadlab/time.hpp"

namespace loadlab {

inline constexpr std::size_t kHoursPerDay = 24;

using HourlyValues = std::array<double, kHoursPerDay>;

/// Identifies one household-day.
struct ProfileKey {
  std::string household_id;
  LocalDate date;

  auto operator<=>(const ProfileKey&) const = default;
  bool operator==(const ProfileKey&) const = default;
};

/// Hourly energy (Wh) of one household over one local calendar day.
struct DailyProfile {
  std::string household_id;
  LocalDate date;
  int age_days = 0;  ///< days since activation; activation day is 0
  HourlyValues hours{};
  bool complete = false;  ///< every hour covered by conforming telemetry

  double total() const { return std::accumulate(hours.begin(), hours.end(), 0.0); }
  ProfileKey key() const { return {household_id, date}; }
};

/// `household_id,date,age_days,complete,h00,...,h23`, 6 decimals.
void write_profiles_csv(const std::filesystem::path& path, const std::vector<DailyProfile>& profiles);
std::vector<DailyProfile> read_profiles_csv(const std::filesystem::path& path);

std::string profiles_csv_header();

/// `household_id,date`
void write_keys_csv(const std::filesystem::path& path, const std::vector<ProfileKey>& keys);
std::vector<ProfileKey> read_keys_csv(const std::filesystem::path& path);

}  // namespace loadlab
