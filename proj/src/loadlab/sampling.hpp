#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "loadlab/profile.hpp"

namespace loadlab {

/// Consumption strata over daily totals. Bin b covers
/// [bin_edges[b-1], bin_edges[b]) with implicit outer edges 0 and +inf.
struct StratificationPlan {
  std::vector<double> bin_edges;           ///< strictly increasing interior thresholds
  std::vector<std::size_t> bin_population; ///< profiles per bin in the source population
  std::vector<std::size_t> per_bin_quota;  ///< sums to `target`
  std::size_t target = 0;
  std::uint64_t seed = 0;

  std::size_t bin_count() const { return bin_edges.size() + 1; }
  std::size_t bin_of(double daily_total) const;
  /// Quotas for an arbitrary sample size, proportional to bin_population.
  std::vector<std::size_t> quotas_for(std::size_t sample_size) const;
};

/// Splits `total` into integer parts proportional to `weights`
/// (largest remainder, ties to the lower index).
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total);

StratificationPlan build_plan(std::span<const DailyProfile> profiles, std::size_t n_bins,
                              std::size_t target, std::uint64_t seed);

/// Up to `days_per_household` complete profiles per household, chosen to
/// follow the plan's bin distribution. Returns sorted indices into `profiles`.
std::vector<std::size_t> stage_one(std::span<const DailyProfile> profiles,
                                   std::size_t days_per_household, const StratificationPlan& plan,
                                   std::uint64_t seed);

/// Exactly `target` profiles drawn per bin to match the plan's quotas.
/// Returns sorted indices into `subset`.
std::vector<std::size_t> stage_two(std::span<const DailyProfile> subset,
                                   const StratificationPlan& plan, std::size_t target,
                                   std::uint64_t seed);

}  // namespace loadlab
