#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "loadlab/profile.hpp"
#include "loadlab/time.hpp"

namespace loadlab {

struct HouseholdMeta {
  std::string household_id;
  std::string country_code;
  int utc_offset_minutes = 0;  ///< in [-720, 840]
  LocalDate activation_date;
  double appliance_power_w = 0.0;
  bool has_tv = false;
  int flexible_appliance_count = 0;
};

using MetaTable = std::map<std::string, HouseholdMeta, std::less<>>;

/// One telemetry record, already shifted to household local time.
struct RawSample {
  LocalSeconds time;
  double voltage_v = 0.0;
  double current_a = 0.0;
};

struct HouseholdSamples {
  std::string household_id;
  std::vector<RawSample> samples;  ///< sorted, one record per timestamp
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

enum class ParseMode { Strict, Collect };

struct TelemetryData {
  std::vector<HouseholdSamples> households;  ///< ordered by household_id
  std::vector<RowError> errors;              ///< Collect mode only
};

/// Hourly energy of one household with an explicit gap flag per hour.
struct HourlyEnergySeries {
  std::string household_id;
  LocalSeconds start_hour{};  ///< aligned to an hour boundary
  std::vector<double> energy_wh;
  std::vector<std::uint8_t> gap;  ///< 1 = hour not fully covered by conforming telemetry
  LocalDate activation_date{};
};

struct IntegrationOptions {
  /// Longest interval a sample is trusted for before hours are gap-marked.
  std::int64_t max_hold_seconds = 600;
};

struct CreditRecord {
  std::string household_id;
  LocalDate date;
  double days_remaining = 0.0;  ///< 0 means economic outage that day
};

struct CreditData {
  std::vector<CreditRecord> records;  ///< ordered by household then date, gap-free
  std::vector<RowError> errors;
};

MetaTable parse_meta(const std::filesystem::path& path);
void write_meta_csv(const std::filesystem::path& path, const MetaTable& meta);

TelemetryData parse_telemetry(const std::filesystem::path& path, const MetaTable& meta,
                              ParseMode mode = ParseMode::Strict);

/// Sorts by time (stable) and collapses identical timestamps to the last record.
void normalize_samples(std::vector<RawSample>& samples);

inline double instantaneous_power(const RawSample& s) { return s.voltage_v * s.current_a; }

/// Zero-order-hold integration of power into hourly energy. Samples must be
/// sorted. The last sample is held until the end of its hour.
HourlyEnergySeries integrate_hourly(std::span<const RawSample> samples,
                                    const IntegrationOptions& options = {});

std::vector<DailyProfile> slice_daily(const HourlyEnergySeries& series);

CreditData parse_credit(const std::filesystem::path& path, ParseMode mode = ParseMode::Strict);

/// Sorts, de-duplicates (last wins) and forward-fills missing days by
/// decrementing the previous balance by one day, floored at zero.
std::vector<CreditRecord> fill_credit(std::vector<CreditRecord> records);

void write_credit_csv(const std::filesystem::path& path, const std::vector<CreditRecord>& records);

}  // namespace loadlab
