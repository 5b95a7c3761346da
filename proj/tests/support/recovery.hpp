// In-memory synthetic recovery run shared by the acceptance binary and the
// slow tests: generate, integrate, sample, cluster, label, compare to truth.
#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "loadlab/analytics.hpp"
#include "loadlab/assign.hpp"
#include "loadlab/cluster.hpp"
#include "loadlab/dtw.hpp"
#include "loadlab/ingest.hpp"
#include "loadlab/sampling.hpp"
#include "loadlab/synth.hpp"

namespace loadlab::testing {

struct RecoveryResult {
  std::size_t best_k = 0;
  double agreement = 0.0;               ///< k = 5 labels vs. truth, best cluster-to-archetype matching
  std::vector<double> cluster_means;    ///< k = 5, ascending, outage days relabelled out
  std::vector<double> sweep_silhouette; ///< k = 2..8
  bool all_proven = true;
  std::size_t labelled_days = 0;
  std::vector<AnalysisDay> days;  ///< before outage relabelling; only with keep_days
  LedgerTable ledgers;
  ClusterId low_use = kUnassigned;
};

struct RecoveryOptions {
  std::size_t households = 200;
  int days = 730;
  std::size_t stage2_target = 2000;
  std::size_t k_max = 8;
  double time_limit = 600.0;
  unsigned threads = 0;
  bool keep_days = false;
};

inline RecoveryResult run_recovery(std::uint64_t seed, const RecoveryOptions& opt = {}) {
  auto params = synth::FleetParams::for_scenario(synth::Scenario::PaperLike, opt.households,
                                                 opt.days, seed);
  std::vector<DailyProfile> profiles;
  std::vector<std::optional<synth::Archetype>> truth;
  std::vector<CreditRecord> credit;
  for (std::size_t i = 0; i < params.households; ++i) {
    auto h = synth::generate_household(params, i);
    // Go through the same integration path as ingest rather than trusting
    // the generator's own profiles.
    auto series = integrate_hourly(h.samples);
    series.household_id = h.meta.household_id;
    series.activation_date = h.meta.activation_date;
    auto days = slice_daily(series);
    std::map<LocalDate, std::optional<synth::Archetype>> by_date;
    for (std::size_t d = 0; d < h.profiles.size(); ++d) by_date[h.profiles[d].date] = h.truth[d];
    for (auto& p : days) {
      auto it = by_date.find(p.date);
      if (it == by_date.end()) continue;
      truth.push_back(it->second);
      profiles.push_back(std::move(p));
    }
    credit.insert(credit.end(), h.credit.begin(), h.credit.end());
  }
  credit = fill_credit(std::move(credit));

  auto plan = build_plan(profiles, 10, opt.stage2_target, seed);
  auto first = stage_one(profiles, 10, plan, seed);
  std::vector<DailyProfile> subset;
  for (auto i : first) subset.push_back(profiles[i]);
  auto second = stage_two(subset, plan, std::min(opt.stage2_target, subset.size()), seed);
  std::vector<DailyProfile> members;
  for (auto i : second) members.push_back(subset[i]);

  auto d = distance_matrix(members, opt.threads);
  ExactSolver solver({opt.time_limit, opt.threads});
  auto sweep = k_sweep(d, 2, opt.k_max, solver, opt.threads);
  RecoveryResult r;
  r.best_k = sweep.best_k;
  for (const auto& m : sweep.models) {
    r.sweep_silhouette.push_back(m.silhouette);
    r.all_proven = r.all_proven && m.proven_optimal;
  }
  const ClusterModel& five = sweep.models[5 - 2];
  std::vector<HourlyValues> medoids;
  for (auto idx : five.medoids) medoids.push_back(members[idx].hours);
  auto labels = label_full_dataset(profiles, medoids, opt.threads).labels;

  // Outage days carry a zero profile; they belong to the low-use shape.
  std::array<std::array<std::size_t, 5>, 5> confusion{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].cluster < 0) continue;
    auto t = truth[i] ? static_cast<std::size_t>(*truth[i]) : 0;
    ++confusion[static_cast<std::size_t>(labels[i].cluster)][t];
    ++r.labelled_days;
  }
  std::array<std::size_t, 5> perm{0, 1, 2, 3, 4};
  std::size_t best = 0;
  do {
    std::size_t hit = 0;
    for (std::size_t c = 0; c < 5; ++c) hit += confusion[c][perm[c]];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  r.agreement = r.labelled_days ? static_cast<double>(best) / static_cast<double>(r.labelled_days) : 0.0;

  auto days = join_days(profiles, labels);
  auto base = make_catalog(days, false);
  auto ledgers = build_ledgers(credit);
  if (opt.keep_days) {
    r.days = days;
    r.ledgers = ledgers;
    r.low_use = base.low_use;
  }
  relabel_outages(days, ledgers, base.low_use);
  auto catalog = make_catalog(days, false);
  for (ClusterId id : catalog.order) r.cluster_means.push_back(catalog.mean_wh.at(id));
  return r;
}

}  // namespace loadlab::testing
