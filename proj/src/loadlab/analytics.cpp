#include "loadlab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "loadlab/csv.hpp"
#include "loadlab/error.hpp"
#include "loadlab/svg.hpp"
#include "loadlab/synth.hpp"

namespace loadlab {

std::optional<double> HouseholdLedger::credit_on(LocalDate date) const {
  int idx = days_between(first_date, date);
  if (idx < 0 || static_cast<std::size_t>(idx) >= days_remaining.size()) return std::nullopt;
  return days_remaining[static_cast<std::size_t>(idx)];
}

LedgerTable build_ledgers(std::span<const CreditRecord> records) {
  std::map<std::string, std::vector<const CreditRecord*>, std::less<>> grouped;
  for (const auto& r : records) grouped[r.household_id].push_back(&r);
  LedgerTable out;
  for (auto& [id, rows] : grouped) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const CreditRecord* a, const CreditRecord* b) { return a->date < b->date; });
    HouseholdLedger ledger;
    ledger.household_id = id;
    ledger.first_date = rows.front()->date;
    int span = days_between(rows.front()->date, rows.back()->date) + 1;
    ledger.days_remaining.assign(static_cast<std::size_t>(span), 0.0);
    for (const CreditRecord* r : rows)
      ledger.days_remaining[static_cast<std::size_t>(days_between(ledger.first_date, r->date))] =
          r->days_remaining;
    ledger.owned_days = ledger.days_remaining.size();
    ledger.outage_days = static_cast<std::size_t>(
        std::count_if(ledger.days_remaining.begin(), ledger.days_remaining.end(),
                      [](double v) { return v <= 0.0; }));
    ledger.utilisation_rate = static_cast<double>(ledger.owned_days - ledger.outage_days) /
                              static_cast<double>(ledger.owned_days);
    out.emplace(id, std::move(ledger));
  }
  return out;
}

int detect_peaks(const HourlyValues& hours, double min_wh, int min_separation) {
  double mean = std::accumulate(hours.begin(), hours.end(), 0.0) / static_cast<double>(kHoursPerDay);
  std::vector<int> candidates;
  for (int h = 0; h < static_cast<int>(kHoursPerDay); ++h)
    if (hours[h] >= 2.0 * mean && hours[h] >= min_wh) candidates.push_back(h);
  // Largest first; ties resolved toward the earlier hour.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](int a, int b) { return hours[a] > hours[b]; });
  std::vector<int> kept;
  for (int h : candidates) {
    bool near = std::any_of(kept.begin(), kept.end(),
                            [&](int k) { return std::abs(k - h) < min_separation; });
    if (!near) kept.push_back(h);
  }
  return static_cast<int>(kept.size());
}

namespace {

std::string key_string(const std::string& id, LocalDate date) {
  return id + '|' + std::to_string(date.time_since_epoch().count());
}

const HouseholdMeta* find_meta(const MetaTable& meta, const std::string& id) {
  auto it = meta.find(id);
  return it == meta.end() ? nullptr : &it->second;
}

}  // namespace

std::vector<AnalysisDay> join_days(std::span<const DailyProfile> profiles,
                                   std::span<const LabeledProfile> labels) {
  std::unordered_map<std::string, ClusterId> by_key;
  by_key.reserve(labels.size());
  for (const auto& l : labels) by_key[key_string(l.key.household_id, l.key.date)] = l.cluster;
  std::vector<AnalysisDay> days;
  days.reserve(profiles.size());
  for (const auto& p : profiles) {
    AnalysisDay d;
    d.household_id = p.household_id;
    d.date = p.date;
    d.age_days = p.age_days;
    d.hours = p.hours;
    d.total = p.total();
    d.complete = p.complete;
    if (p.complete) {
      auto it = by_key.find(key_string(p.household_id, p.date));
      if (it != by_key.end()) d.cluster = it->second;
    }
    days.push_back(std::move(d));
  }
  return days;
}

std::size_t ClusterCatalog::position(ClusterId id) const {
  auto it = std::find(order.begin(), order.end(), id);
  if (it == order.end()) throw DataError("unknown cluster id " + std::to_string(id));
  return static_cast<std::size_t>(it - order.begin());
}

ClusterCatalog make_catalog(std::span<const AnalysisDay> days, bool include_outage) {
  std::map<ClusterId, std::pair<double, std::size_t>> acc;
  for (const auto& d : days) {
    if (d.cluster == kUnassigned) continue;
    if (d.cluster == kEconomicOutage && !include_outage) continue;
    auto& a = acc[d.cluster];
    a.first += d.total;
    ++a.second;
  }
  ClusterCatalog cat;
  std::vector<ClusterId> regular;
  for (const auto& [id, a] : acc) {
    cat.mean_wh[id] = a.first / static_cast<double>(a.second);
    if (id >= 0) regular.push_back(id);
  }
  std::stable_sort(regular.begin(), regular.end(),
                   [&](ClusterId a, ClusterId b) { return cat.mean_wh[a] < cat.mean_wh[b]; });
  if (acc.count(kEconomicOutage)) {
    cat.order.push_back(kEconomicOutage);
    cat.names[kEconomicOutage] = "economic_outage";
  }
  const bool archetypes = regular.size() == synth::kArchetypeCount;
  for (std::size_t i = 0; i < regular.size(); ++i) {
    cat.order.push_back(regular[i]);
    cat.names[regular[i]] = archetypes ? std::string(synth::archetype_name(static_cast<synth::Archetype>(i)))
                                       : "cluster_" + std::to_string(regular[i]);
  }
  if (!regular.empty()) cat.low_use = regular.front();
  return cat;
}

RelabelStats relabel_outages(std::span<AnalysisDay> days, const LedgerTable& ledgers,
                             ClusterId low_use) {
  RelabelStats stats;
  for (auto& d : days) {
    if (d.cluster != low_use || low_use == kUnassigned) continue;
    auto it = ledgers.find(d.household_id);
    std::optional<double> credit;
    if (it != ledgers.end()) credit = it->second.credit_on(d.date);
    if (!credit) {
      ++stats.missing_ledger;
      continue;
    }
    if (*credit <= 0.0) {
      d.cluster = kEconomicOutage;
      ++stats.relabeled;
    }
  }
  return stats;
}

namespace {

struct StatsAccumulator {
  std::size_t count = 0;
  double energy = 0.0, peaks = 0.0, weekday = 0.0;
  std::size_t meta_days = 0;
  double tv = 0.0, appliance = 0.0;
  std::size_t daytime_days = 0;
  double daytime = 0.0;

  void add(const AnalysisDay& d, const HouseholdMeta* m, const AnalyticsConfig& config) {
    ++count;
    energy += d.total;
    peaks += detect_peaks(d.hours, config.peak_min_wh, config.peak_min_separation_hours);
    if (is_weekday(d.date)) weekday += 1.0;
    if (m) {
      ++meta_days;
      if (m->has_tv) tv += 1.0;
      appliance += m->appliance_power_w;
    }
    if (d.total > 0.0) {
      double day = 0.0;
      for (int h = config.daytime_start_hour; h < config.daytime_end_hour; ++h)
        day += d.hours[static_cast<std::size_t>(h)];
      daytime += day / d.total;
      ++daytime_days;
    }
  }

  ClusterStatsRow row(ClusterId id, std::string name, std::size_t population) const {
    ClusterStatsRow r;
    r.cluster = id;
    r.name = std::move(name);
    r.count = count;
    if (count == 0) return r;
    double n = static_cast<double>(count);
    r.proportion = population ? n / static_cast<double>(population) : 0.0;
    r.mean_wh = energy / n;
    r.mean_peaks = peaks / n;
    r.weekday_pct = 100.0 * weekday / n;
    if (meta_days) {
      r.tv_pct = 100.0 * tv / static_cast<double>(meta_days);
      r.mean_appliance_w = appliance / static_cast<double>(meta_days);
    }
    if (daytime_days) r.daytime_pct = 100.0 * daytime / static_cast<double>(daytime_days);
    return r;
  }
};

}  // namespace

std::vector<ClusterStatsRow> cluster_characteristics(std::span<const AnalysisDay> days,
                                                     const MetaTable& meta,
                                                     const ClusterCatalog& catalog,
                                                     const AnalyticsConfig& config) {
  std::vector<StatsAccumulator> acc(catalog.order.size());
  StatsAccumulator total;
  for (const auto& d : days) {
    if (d.cluster == kUnassigned) continue;
    auto it = std::find(catalog.order.begin(), catalog.order.end(), d.cluster);
    if (it == catalog.order.end()) continue;
    const HouseholdMeta* m = find_meta(meta, d.household_id);
    acc[static_cast<std::size_t>(it - catalog.order.begin())].add(d, m, config);
    total.add(d, m, config);
  }
  std::vector<ClusterStatsRow> rows;
  for (std::size_t i = 0; i < catalog.order.size(); ++i)
    rows.push_back(acc[i].row(catalog.order[i], catalog.name(catalog.order[i]), total.count));
  rows.push_back(total.row(kUnassigned, "total_population", total.count));
  return rows;
}

std::vector<TrendPoint> consumption_trend(std::span<const AnalysisDay> days,
                                          const LedgerTable& ledgers, const MetaTable& meta,
                                          UseSplit split, bool exclude_outages,
                                          const AnalyticsConfig& config) {
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0, sumsq = 0.0;
  };
  std::map<int, Acc> by_age;
  for (const auto& d : days) {
    if (!d.complete) continue;
    if (split != UseSplit::All) {
      const HouseholdMeta* m = find_meta(meta, d.household_id);
      if (!m) continue;
      bool high = m->appliance_power_w > config.appliance_threshold_w;
      if (high != (split == UseSplit::High)) continue;
    }
    if (exclude_outages) {
      if (d.cluster == kEconomicOutage) continue;
      auto it = ledgers.find(d.household_id);
      if (it != ledgers.end()) {
        auto credit = it->second.credit_on(d.date);
        if (credit && *credit <= 0.0) continue;
      }
    }
    auto& a = by_age[d.age_days];
    ++a.n;
    a.sum += d.total;
    a.sumsq += d.total * d.total;
  }
  std::vector<TrendPoint> out;
  for (const auto& [age, a] : by_age) {
    TrendPoint t;
    t.age_days = age;
    t.households = a.n;
    double n = static_cast<double>(a.n);
    t.mean_wh = a.sum / n;
    double half = 0.0;
    if (a.n >= 2) {
      double var = std::max(0.0, (a.sumsq - n * t.mean_wh * t.mean_wh) / (n - 1.0));
      half = 1.96 * std::sqrt(var / n);
    }
    t.ci_low = t.mean_wh - half;
    t.ci_high = t.mean_wh + half;
    out.push_back(t);
  }
  return out;
}

AllocationTrend cluster_allocation_trend(std::span<const AnalysisDay> days,
                                         const ClusterCatalog& catalog,
                                         const HouseholdFilter& include,
                                         const AnalyticsConfig& config) {
  std::map<int, std::vector<std::size_t>> by_age;
  const std::size_t k = catalog.order.size();
  for (const auto& d : days) {
    if (d.cluster == kUnassigned) continue;
    if (include && !include(d.household_id)) continue;
    auto it = std::find(catalog.order.begin(), catalog.order.end(), d.cluster);
    if (it == catalog.order.end()) continue;
    auto& counts = by_age[d.age_days];
    if (counts.empty()) counts.assign(k, 0);
    ++counts[static_cast<std::size_t>(it - catalog.order.begin())];
  }
  AllocationTrend out;
  for (const auto& [age, counts] : by_age) {
    AllocationRow row;
    row.age_days = age;
    row.households = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t c : counts)
      row.proportions.push_back(static_cast<double>(c) / static_cast<double>(row.households));
    if (!out.drop_below_day && row.households < config.min_households) out.drop_below_day = age;
    out.rows.push_back(std::move(row));
  }
  return out;
}

HouseholdSummary summarize_sequence(std::span<const std::optional<ClusterId>> sequence,
                                    const ClusterCatalog& catalog) {
  HouseholdSummary s;
  std::vector<std::size_t> counts(catalog.order.size(), 0);
  std::size_t total = 0;
  for (const auto& v : sequence) {
    if (!v || *v == kUnassigned) continue;
    ++counts[catalog.position(*v)];
    ++total;
  }
  s.share.assign(counts.size(), 0.0);
  if (total == 0) return s;
  std::size_t best = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s.share[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    if (counts[i] > counts[best] ||
        (counts[i] == counts[best] && catalog.mean_wh.at(catalog.order[i]) >
                                          catalog.mean_wh.at(catalog.order[best])))
      best = i;
  }
  s.dominant = catalog.order[best];
  s.homogeneity = static_cast<double>(counts[best]) / static_cast<double>(total);
  return s;
}

std::vector<HouseholdSummary> dominant_cluster_stats(std::span<const AnalysisDay> days,
                                                     const LedgerTable& ledgers,
                                                     const ClusterCatalog& catalog) {
  std::map<std::string, std::vector<const AnalysisDay*>, std::less<>> grouped;
  for (const auto& d : days)
    if (d.cluster != kUnassigned) grouped[d.household_id].push_back(&d);
  std::vector<HouseholdSummary> out;
  for (const auto& [id, rows] : grouped) {
    int first = rows.front()->age_days, last = first;
    for (const AnalysisDay* d : rows) {
      first = std::min(first, d->age_days);
      last = std::max(last, d->age_days);
    }
    std::vector<std::optional<ClusterId>> seq(static_cast<std::size_t>(last - first + 1));
    for (const AnalysisDay* d : rows) seq[static_cast<std::size_t>(d->age_days - first)] = d->cluster;
    HouseholdSummary s = summarize_sequence(seq, catalog);
    s.household_id = id;
    if (auto it = ledgers.find(id); it != ledgers.end()) s.utilisation_rate = it->second.utilisation_rate;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DominantRow> dominant_table(std::span<const HouseholdSummary> households,
                                        const MetaTable& meta, const ClusterCatalog& catalog) {
  const std::size_t k = catalog.order.size();
  std::vector<DominantRow> rows;
  for (ClusterId id : catalog.order) {
    DominantRow r;
    r.dominant = id;
    r.name = catalog.name(id);
    r.share.assign(k, 0.0);
    std::size_t ur_n = 0, meta_n = 0;
    for (const auto& h : households) {
      if (h.dominant != id) continue;
      ++r.households;
      r.homogeneity_pct += h.homogeneity;
      if (h.utilisation_rate) {
        r.utilisation_pct += *h.utilisation_rate;
        ++ur_n;
      }
      if (const HouseholdMeta* m = find_meta(meta, h.household_id)) {
        ++meta_n;
        r.tv_pct += m->has_tv ? 1.0 : 0.0;
        r.flexible_appliances += m->flexible_appliance_count;
        r.appliance_w += m->appliance_power_w;
      }
      for (std::size_t i = 0; i < k && i < h.share.size(); ++i) r.share[i] += h.share[i];
    }
    if (r.households) {
      double n = static_cast<double>(r.households);
      r.homogeneity_pct = 100.0 * r.homogeneity_pct / n;
      for (double& s : r.share) s /= n;
    }
    if (ur_n) r.utilisation_pct = 100.0 * r.utilisation_pct / static_cast<double>(ur_n);
    if (meta_n) {
      double n = static_cast<double>(meta_n);
      r.tv_pct = 100.0 * r.tv_pct / n;
      r.flexible_appliances /= n;
      r.appliance_w /= n;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

std::string fixed(double v, int decimals = 4) {
  std::string s;
  csv::append_fixed(s, v, decimals);
  return s;
}

/// Centred moving average over consecutive points that have enough households.
std::vector<std::pair<int, double>> smooth(const std::vector<TrendPoint>& trend,
                                           const AnalyticsConfig& config) {
  std::vector<const TrendPoint*> eligible;
  for (const auto& t : trend)
    if (t.households >= config.min_households) eligible.push_back(&t);
  std::vector<std::pair<int, double>> out;
  const int half = std::max(0, config.smoothing_window_days / 2);
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    int age = eligible[i]->age_days;
    double sum = 0.0;
    int n = 0;
    for (const TrendPoint* t : eligible) {
      if (std::abs(t->age_days - age) <= half) {
        sum += t->mean_wh;
        ++n;
      }
    }
    out.emplace_back(age, sum / n);
  }
  return out;
}

void write_allocation(std::ofstream& f, const std::string& variant, const AllocationTrend& trend) {
  for (const auto& row : trend.rows) {
    std::string line = variant + ',' + std::to_string(row.age_days) + ',' +
                       std::to_string(row.households);
    for (double p : row.proportions) line += ',' + fixed(p, 6);
    f << line << '\n';
  }
}

std::string allocation_header(const ClusterCatalog& catalog) {
  std::string h = "variant,age_days,households";
  for (ClusterId id : catalog.order) h += ',' + catalog.name(id);
  return h;
}

void plot_allocation(const std::filesystem::path& path, const std::string& title,
                     const AllocationTrend& trend, const ClusterCatalog& catalog) {
  std::vector<svg::Series> series(catalog.order.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    series[i].name = catalog.name(catalog.order[i]);
    for (const auto& row : trend.rows) {
      if (trend.drop_below_day && row.age_days >= *trend.drop_below_day) break;
      series[i].x.push_back(row.age_days);
      series[i].y.push_back(row.proportions[i]);
    }
  }
  svg::write_line_plot(path, title, "days since activation", "share of households", series);
}

}  // namespace

AnalysisSummary run_analysis(const AnalysisInputs& inputs, const AnalyticsConfig& config,
                             const std::filesystem::path& out_dir, bool plots) {
  std::filesystem::create_directories(out_dir);
  AnalysisSummary summary;
  const LedgerTable ledgers = build_ledgers(inputs.credit);
  std::vector<AnalysisDay> days = join_days(inputs.profiles, inputs.labels);

  const ClusterCatalog base = make_catalog(days, false);
  if (base.order.empty()) throw DataError("no labelled days to analyse");

  // Subset statistics use the labels as clustered, before outage relabelling.
  std::vector<ClusterStatsRow> subset_rows;
  if (inputs.subset) {
    std::unordered_map<std::string, bool> in_subset;
    for (const auto& key : *inputs.subset) in_subset[key_string(key.household_id, key.date)] = true;
    std::vector<AnalysisDay> sub;
    for (const auto& d : days)
      if (in_subset.count(key_string(d.household_id, d.date))) sub.push_back(d);
    subset_rows = cluster_characteristics(sub, inputs.meta, base, config);
  }

  summary.relabel = relabel_outages(days, ledgers, base.low_use);
  ClusterCatalog catalog = make_catalog(days, true);
  // Keep the names chosen before relabelling.
  for (auto& [id, name] : catalog.names)
    if (base.names.count(id)) name = base.names.at(id);

  const auto full_rows = cluster_characteristics(days, inputs.meta, catalog, config);
  for (const auto& r : full_rows)
    if (r.cluster != kUnassigned) summary.full_proportions[r.name] = r.proportion;

  {
    auto f = csv::open_output(out_dir / "table1.csv");
    f << "cluster,subset_days,subset_proportion,subset_mean_wh,full_days,full_proportion,full_mean_wh\n";
    for (const auto& r : full_rows) {
      std::string line = r.name + ',';
      auto match = std::find_if(subset_rows.begin(), subset_rows.end(), [&](const ClusterStatsRow& s) {
        return s.cluster == r.cluster && s.name == r.name;
      });
      if (match != subset_rows.end())
        line += std::to_string(match->count) + ',' + fixed(match->proportion) + ',' +
                fixed(match->mean_wh) + ',';
      else
        line += ",,,";
      line += std::to_string(r.count) + ',' + fixed(r.proportion) + ',' + fixed(r.mean_wh);
      f << line << '\n';
    }
  }
  {
    auto f = csv::open_output(out_dir / "table2.csv");
    f << "cluster,days,daily_peaks,tv_ownership_pct,weekday_pct,daytime_pct,appliance_power_w\n";
    for (const auto& r : full_rows)
      f << r.name << ',' << r.count << ',' << fixed(r.mean_peaks) << ',' << fixed(r.tv_pct, 2) << ','
        << fixed(r.weekday_pct, 2) << ',' << (r.daytime_pct ? fixed(*r.daytime_pct, 2) : "") << ','
        << fixed(r.mean_appliance_w, 2) << '\n';
  }

  const auto households = dominant_cluster_stats(days, ledgers, catalog);
  const auto dominant = dominant_table(households, inputs.meta, catalog);
  {
    auto f = csv::open_output(out_dir / "table3.csv");
    f << "dominant_cluster,households,homogeneity_pct,utilisation_pct,tv_ownership_pct,"
         "flexible_appliances,appliance_power_w\n";
    for (const auto& r : dominant)
      f << r.name << ',' << r.households << ',' << fixed(r.homogeneity_pct, 2) << ','
        << fixed(r.utilisation_pct, 2) << ',' << fixed(r.tv_pct, 2) << ','
        << fixed(r.flexible_appliances, 2) << ',' << fixed(r.appliance_w, 2) << '\n';
    auto g = csv::open_output(out_dir / "dominant_crosstab.csv");
    std::string header = "dominant_cluster,households";
    for (ClusterId id : catalog.order) header += ',' + catalog.name(id);
    g << header << '\n';
    for (const auto& r : dominant) {
      g << r.name << ',' << r.households;
      for (double s : r.share) g << ',' << fixed(s);
      g << '\n';
    }
  }
  double hom = 0.0;
  std::size_t hom_n = 0;
  for (const auto& h : households) {
    if (h.dominant == kUnassigned) continue;
    hom += h.homogeneity;
    ++hom_n;
    if (h.utilisation_rate) {
      if (*h.utilisation_rate >= config.ur_high_threshold) ++summary.households_ur_high;
      if (*h.utilisation_rate < config.ur_low_threshold) ++summary.households_ur_low;
    }
  }
  if (hom_n) summary.mean_homogeneity = hom / static_cast<double>(hom_n);

  struct Variant {
    const char* name;
    UseSplit split;
  };
  const Variant variants[] = {{"all", UseSplit::All}, {"high_use", UseSplit::High}, {"low_use", UseSplit::Low}};
  std::vector<TrendPoint> headline;
  {
    auto f = csv::open_output(out_dir / "trend_consumption.csv");
    f << "variant,exclude_outages,age_days,households,mean_wh,ci_low,ci_high\n";
    std::vector<svg::Series> series;
    for (const auto& v : variants) {
      for (bool excl : {false, true}) {
        auto trend = consumption_trend(days, ledgers, inputs.meta, v.split, excl, config);
        if (v.split == UseSplit::All && !excl) headline = trend;
        svg::Series s;
        s.name = std::string(v.name) + (excl ? " (no outages)" : "");
        for (const auto& t : trend) {
          f << v.name << ',' << (excl ? 1 : 0) << ',' << t.age_days << ',' << t.households << ','
            << fixed(t.mean_wh) << ',' << fixed(t.ci_low) << ',' << fixed(t.ci_high) << '\n';
          if (t.households < config.min_households) continue;
          s.x.push_back(t.age_days);
          s.y.push_back(t.mean_wh);
          s.band_low.push_back(t.ci_low);
          s.band_high.push_back(t.ci_high);
        }
        series.push_back(std::move(s));
      }
    }
    if (plots)
      svg::write_line_plot(out_dir / "trend_consumption.svg", "Mean daily consumption",
                           "days since activation", "Wh/day", series);
  }

  auto meta_split = [&](bool high) -> HouseholdFilter {
    return [&, high](const std::string& id) {
      const HouseholdMeta* m = find_meta(inputs.meta, id);
      return m && (m->appliance_power_w > config.appliance_threshold_w) == high;
    };
  };
  auto ur_split = [&](bool high) -> HouseholdFilter {
    return [&, high](const std::string& id) {
      auto it = ledgers.find(id);
      if (it == ledgers.end()) return false;
      double ur = it->second.utilisation_rate;
      return high ? ur >= config.ur_high_threshold : ur < config.ur_low_threshold;
    };
  };
  {
    auto f = csv::open_output(out_dir / "trend_clusters.csv");
    f << allocation_header(catalog) << '\n';
    const std::pair<const char*, HouseholdFilter> groups[] = {
        {"all", HouseholdFilter{}}, {"high_use", meta_split(true)}, {"low_use", meta_split(false)}};
    for (const auto& [name, filter] : groups) {
      auto trend = cluster_allocation_trend(days, catalog, filter, config);
      write_allocation(f, name, trend);
      if (plots)
        plot_allocation(out_dir / ("trend_clusters_" + std::string(name) + ".svg"),
                        std::string("Cluster allocation: ") + name, trend, catalog);
    }
  }
  {
    auto f = csv::open_output(out_dir / "ur_segments.csv");
    f << allocation_header(catalog) << '\n';
    const std::pair<const char*, HouseholdFilter> groups[] = {{"ur_high", ur_split(true)},
                                                               {"ur_low", ur_split(false)}};
    for (const auto& [name, filter] : groups) {
      auto trend = cluster_allocation_trend(days, catalog, filter, config);
      write_allocation(f, name, trend);
      if (plots)
        plot_allocation(out_dir / ("ur_segments_" + std::string(name) + ".svg"),
                        std::string("Cluster allocation: ") + name, trend, catalog);
    }
  }

  const auto smoothed = smooth(headline, config);
  if (!smoothed.empty()) {
    auto peak = std::max_element(smoothed.begin(), smoothed.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    summary.peak_day = peak->first;
    summary.peak_mean_wh = peak->second;
    auto two_year = std::find_if(smoothed.begin(), smoothed.end(),
                                 [](const auto& p) { return p.first == 729; });
    if (two_year != smoothed.end()) {
      summary.two_year_mean_wh = two_year->second;
      if (peak->second > 0.0)
        summary.decline_pct = 100.0 * (peak->second - two_year->second) / peak->second;
    }
  }

  nlohmann::ordered_json j;
  j["peak_day"] = summary.peak_day ? nlohmann::ordered_json(*summary.peak_day) : nullptr;
  j["peak_mean_wh"] = summary.peak_mean_wh;
  j["two_year_mean_wh"] =
      summary.two_year_mean_wh ? nlohmann::ordered_json(*summary.two_year_mean_wh) : nullptr;
  j["decline_pct"] = summary.decline_pct ? nlohmann::ordered_json(*summary.decline_pct) : nullptr;
  j["mean_homogeneity"] = summary.mean_homogeneity;
  j["households"] = hom_n;
  j["households_ur_high"] = summary.households_ur_high;
  j["households_ur_low"] = summary.households_ur_low;
  j["outage_days_relabeled"] = summary.relabel.relabeled;
  j["low_use_days_without_credit"] = summary.relabel.missing_ledger;
  j["full_proportions"] = summary.full_proportions;
  auto f = csv::open_output(out_dir / "summary.json");
  f << j.dump(2) << '\n';
  return summary;
}

}  // namespace loadlab
