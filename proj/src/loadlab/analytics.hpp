#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loadlab/assign.hpp"
#include "loadlab/ingest.hpp"
#include "loadlab/profile.hpp"

namespace loadlab {

/// Per-household credit position aligned to calendar days.
struct HouseholdLedger {
  std::string household_id;
  LocalDate first_date{};
  std::vector<double> days_remaining;  ///< index = date - first_date
  std::size_t owned_days = 0;
  std::size_t outage_days = 0;
  double utilisation_rate = 1.0;  ///< (owned - outage) / owned

  std::optional<double> credit_on(LocalDate date) const;
};

using LedgerTable = std::map<std::string, HouseholdLedger, std::less<>>;

/// Expects gap-free records (see fill_credit).
LedgerTable build_ledgers(std::span<const CreditRecord> records);

struct AnalyticsConfig {
  double appliance_threshold_w = 50.0;  ///< high-use households: appliance power above this
  double ur_high_threshold = 0.9;
  double ur_low_threshold = 0.5;
  int daytime_start_hour = 6;  ///< daytime window [start, end)
  int daytime_end_hour = 18;
  double peak_min_wh = 10.0;
  int peak_min_separation_hours = 2;
  std::size_t min_households = 10;
  int smoothing_window_days = 7;  ///< centred moving average for headline numbers
};

/// Hours at or above twice the daily mean and at least `min_wh`; candidates
/// closer than `min_separation` hours to a larger one are suppressed.
int detect_peaks(const HourlyValues& hours, double min_wh = 10.0, int min_separation = 2);

/// One household-day joined with its label.
struct AnalysisDay {
  std::string household_id;
  LocalDate date{};
  int age_days = 0;
  HourlyValues hours{};
  double total = 0.0;
  bool complete = false;
  ClusterId cluster = kUnassigned;
};

/// Joins profiles with labels by (household_id, date); unmatched profiles stay unassigned.
std::vector<AnalysisDay> join_days(std::span<const DailyProfile> profiles,
                                   std::span<const LabeledProfile> labels);

/// Display order and names of the classes present in an analysis.
struct ClusterCatalog {
  std::vector<ClusterId> order;  ///< economic outage first, then ascending mean energy
  std::map<ClusterId, std::string> names;
  std::map<ClusterId, double> mean_wh;
  ClusterId low_use = kUnassigned;  ///< minimum-mean cluster

  std::size_t position(ClusterId id) const;
  const std::string& name(ClusterId id) const { return names.at(id); }
};

/// With five clusters the archetype names are used in ascending-mean order.
ClusterCatalog make_catalog(std::span<const AnalysisDay> days, bool include_outage);

struct RelabelStats {
  std::size_t relabeled = 0;
  std::size_t missing_ledger = 0;  ///< low-use days without a credit record
};

/// Low-use days with zero credit become kEconomicOutage.
RelabelStats relabel_outages(std::span<AnalysisDay> days, const LedgerTable& ledgers,
                             ClusterId low_use);

struct ClusterStatsRow {
  ClusterId cluster = kUnassigned;  ///< kUnassigned marks the total-population row
  std::string name;
  std::size_t count = 0;
  double proportion = 0.0;
  double mean_wh = 0.0;
  double mean_peaks = 0.0;
  double tv_pct = 0.0;
  double weekday_pct = 0.0;
  std::optional<double> daytime_pct;  ///< empty when no day in the class consumed energy
  double mean_appliance_w = 0.0;
};

/// One row per catalog class plus a trailing total row.
std::vector<ClusterStatsRow> cluster_characteristics(std::span<const AnalysisDay> days,
                                                     const MetaTable& meta,
                                                     const ClusterCatalog& catalog,
                                                     const AnalyticsConfig& config = {});

struct TrendPoint {
  int age_days = 0;
  std::size_t households = 0;
  double mean_wh = 0.0;
  double ci_low = 0.0;  ///< 95% normal-approximation band
  double ci_high = 0.0;
};

enum class UseSplit { All, High, Low };

std::vector<TrendPoint> consumption_trend(std::span<const AnalysisDay> days,
                                          const LedgerTable& ledgers, const MetaTable& meta,
                                          UseSplit split, bool exclude_outages,
                                          const AnalyticsConfig& config = {});

struct AllocationRow {
  int age_days = 0;
  std::size_t households = 0;
  std::vector<double> proportions;  ///< aligned with ClusterCatalog::order
};

struct AllocationTrend {
  std::vector<AllocationRow> rows;
  std::optional<int> drop_below_day;  ///< first age with fewer than min_households
};

using HouseholdFilter = std::function<bool(const std::string& household_id)>;

AllocationTrend cluster_allocation_trend(std::span<const AnalysisDay> days,
                                         const ClusterCatalog& catalog,
                                         const HouseholdFilter& include,
                                         const AnalyticsConfig& config = {});

struct HouseholdSummary {
  std::string household_id;
  ClusterId dominant = kUnassigned;
  double homogeneity = 0.0;
  std::optional<double> utilisation_rate;
  std::vector<double> share;  ///< fraction of labelled days per catalog class
};

/// Dominant class = modal label (ties to the higher-consumption class),
/// homogeneity = modal count / labelled days.
HouseholdSummary summarize_sequence(std::span<const std::optional<ClusterId>> sequence,
                                    const ClusterCatalog& catalog);

std::vector<HouseholdSummary> dominant_cluster_stats(std::span<const AnalysisDay> days,
                                                     const LedgerTable& ledgers,
                                                     const ClusterCatalog& catalog);

struct DominantRow {
  ClusterId dominant = kUnassigned;
  std::string name;
  std::size_t households = 0;
  double homogeneity_pct = 0.0;
  double utilisation_pct = 0.0;
  double tv_pct = 0.0;
  double flexible_appliances = 0.0;
  double appliance_w = 0.0;
  std::vector<double> share;  ///< mean share of days per catalog class
};

std::vector<DominantRow> dominant_table(std::span<const HouseholdSummary> households,
                                        const MetaTable& meta, const ClusterCatalog& catalog);

struct AnalysisInputs {
  std::vector<DailyProfile> profiles;
  std::vector<LabeledProfile> labels;
  std::vector<CreditRecord> credit;  ///< gap-free
  MetaTable meta;
  std::optional<std::vector<ProfileKey>> subset;  ///< clustering subset, for Table I
};

struct AnalysisSummary {
  std::optional<int> peak_day;
  double peak_mean_wh = 0.0;
  std::optional<double> two_year_mean_wh;
  std::optional<double> decline_pct;
  double mean_homogeneity = 0.0;
  std::size_t households_ur_high = 0;
  std::size_t households_ur_low = 0;
  RelabelStats relabel;
  std::map<std::string, double> full_proportions;  ///< by class name
};

/// Runs every analysis and writes table1.csv, table2.csv, table3.csv,
/// dominant_crosstab.csv, trend_consumption.csv, trend_clusters.csv,
/// ur_segments.csv, summary.json and (optionally) SVG plots.
AnalysisSummary run_analysis(const AnalysisInputs& inputs, const AnalyticsConfig& config,
                             const std::filesystem::path& out_dir, bool plots = true);

}  // namespace loadlab
