#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "loadlab/ingest.hpp"
#include "loadlab/profile.hpp"

namespace loadlab::synth {

enum class Archetype : int { LowUse = 0, ModerateUse, NighttimeUse, SinglePeak, DoublePeak };
inline constexpr std::size_t kArchetypeCount = 5;

std::string_view archetype_name(Archetype a);

struct NoiseModel {
  double amplitude_sigma = 0.0;  ///< relative day-level amplitude jitter
  double hourly_sigma = 0.0;     ///< relative per-hour jitter
  int shift_jitter_hours = 0;    ///< uniform circular shift in [-j, j]
};

struct ArchetypeTemplate {
  Archetype archetype;
  HourlyValues base_shape;  ///< Wh per hour, sums to target_mean_wh
  double target_mean_wh;    ///< mean daily energy
};

/// Templates in ascending order of daily energy (12, 39, 73, 102, 122 Wh).
const std::array<ArchetypeTemplate, kArchetypeCount>& archetype_templates();

enum class Scenario { Clean, PaperLike };

bool parse_scenario(std::string_view text, Scenario& out);

struct FleetParams {
  std::size_t households = 200;
  int horizon_days = 730;
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::PaperLike;
  NoiseModel noise;
  double outage_propensity = 0.0;  ///< long-run share of days in economic outage
  bool ramp_outages = false;       ///< propensity grows linearly over the first year
  bool drift = false;              ///< rise to a peak near day 96, then decline
  bool varying_ownership = false;  ///< ownership length uniform in [horizon/2, horizon]
  LocalDate start_date{std::chrono::sys_days{std::chrono::year{2019} / 1 / 1}.time_since_epoch()};

  static FleetParams for_scenario(Scenario scenario, std::size_t households, int horizon_days,
                                  std::uint64_t seed);
};

struct SyntheticHousehold {
  HouseholdMeta meta;
  std::vector<RawSample> samples;            ///< local time, change-triggered + 10 min backstop
  std::vector<CreditRecord> credit;          ///< sparse: top-ups, first and last day
  std::vector<DailyProfile> profiles;        ///< hourly energy embodied by `samples`
  std::vector<std::optional<Archetype>> truth;  ///< per day; nullopt = economic outage
};

SyntheticHousehold generate_household(const FleetParams& params, std::size_t index);

/// Writes telemetry.csv, credit.csv, meta.csv and truth.csv into `out_dir`.
void write_fleet(const FleetParams& params, const std::filesystem::path& out_dir,
                 unsigned threads = 0);

}  // namespace loadlab::synth
