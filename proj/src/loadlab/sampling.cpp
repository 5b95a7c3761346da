#include "loadlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "loadlab/error.hpp"
#include "loadlab/random.hpp"

namespace loadlab {
namespace {

// Moves demand that a bin cannot satisfy to the nearest bins with spare
// capacity, lower bin first on equal distance.
std::vector<std::size_t> allocate_with_capacity(const std::vector<std::size_t>& desired,
                                                const std::vector<std::size_t>& capacity) {
  const std::size_t n = desired.size();
  std::vector<std::size_t> alloc(n);
  std::size_t deficit = 0;
  for (std::size_t b = 0; b < n; ++b) {
    alloc[b] = std::min(desired[b], capacity[b]);
    deficit += desired[b] - alloc[b];
  }
  for (std::size_t b = 0; b < n && deficit > 0; ++b) {
    std::size_t owed = desired[b] - std::min(desired[b], capacity[b]);
    while (owed > 0) {
      bool placed = false;
      for (std::size_t dist = 1; dist < n && !placed; ++dist) {
        for (int dir : {-1, 1}) {
          auto c = static_cast<long long>(b) + dir * static_cast<long long>(dist);
          if (c < 0 || c >= static_cast<long long>(n)) continue;
          auto cb = static_cast<std::size_t>(c);
          if (alloc[cb] < capacity[cb]) {
            ++alloc[cb];
            placed = true;
            break;
          }
        }
      }
      if (!placed) return alloc;  // total capacity exhausted
      --owed;
      --deficit;
    }
  }
  return alloc;
}

// Uniform choice of `count` items from `pool` without replacement.
void draw(std::vector<std::size_t> pool, std::size_t count, Rng& rng,
          std::vector<std::size_t>& out) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
}

}  // namespace

std::size_t StratificationPlan::bin_of(double daily_total) const {
  return static_cast<std::size_t>(std::upper_bound(bin_edges.begin(), bin_edges.end(), daily_total) -
                                  bin_edges.begin());
}

std::vector<std::size_t> StratificationPlan::quotas_for(std::size_t sample_size) const {
  std::vector<double> w(bin_population.begin(), bin_population.end());
  return largest_remainder(w, sample_size);
}

std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
  std::vector<std::size_t> out(weights.size(), 0);
  double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || sum <= 0.0) return out;
  std::vector<double> rem(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double exact = weights[i] / sum * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size(), ++assigned) ++out[order[i]];
  return out;
}

StratificationPlan build_plan(std::span<const DailyProfile> profiles, std::size_t n_bins,
                              std::size_t target, std::uint64_t seed) {
  if (profiles.empty()) throw DataError("build_plan: no profiles");
  if (n_bins == 0) throw ConfigError("build_plan: n_bins must be >= 1");
  if (target > profiles.size())
    throw DataError("build_plan: target " + std::to_string(target) + " exceeds population " +
                    std::to_string(profiles.size()));
  std::vector<double> totals;
  totals.reserve(profiles.size());
  for (const auto& p : profiles) totals.push_back(p.total());
  std::sort(totals.begin(), totals.end());

  StratificationPlan plan;
  plan.target = target;
  plan.seed = seed;
  // Empirical quantile edges: the value at rank floor(i*N/n_bins). Edges that
  // would leave the first bin empty or repeat are dropped.
  for (std::size_t i = 1; i < n_bins; ++i) {
    double edge = totals[i * totals.size() / n_bins];
    if (edge <= totals.front()) continue;
    if (!plan.bin_edges.empty() && edge <= plan.bin_edges.back()) continue;
    plan.bin_edges.push_back(edge);
  }
  plan.bin_population.assign(plan.bin_count(), 0);
  for (double t : totals) ++plan.bin_population[plan.bin_of(t)];
  plan.per_bin_quota = plan.quotas_for(target);
  return plan;
}

std::vector<std::size_t> stage_one(std::span<const DailyProfile> profiles,
                                   std::size_t days_per_household, const StratificationPlan& plan,
                                   std::uint64_t seed) {
  if (days_per_household == 0) throw ConfigError("stage_one: days_per_household must be >= 1");
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_household;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    if (profiles[i].complete) by_household[profiles[i].household_id].push_back(i);

  const std::size_t bins = plan.bin_count();
  const double population = static_cast<double>(
      std::accumulate(plan.bin_population.begin(), plan.bin_population.end(), std::size_t{0}));

  struct Household {
    Rng rng;
    std::vector<std::vector<std::size_t>> pools;
    std::vector<std::size_t> alloc;
  };
  std::vector<std::size_t> selected;
  std::vector<Household> sampled;
  std::vector<std::size_t> pooled(bins, 0);
  for (const auto& [id, indices] : by_household) {
    if (indices.size() <= days_per_household) {
      selected.insert(selected.end(), indices.begin(), indices.end());
      for (auto i : indices) ++pooled[plan.bin_of(profiles[i].total())];
      continue;
    }
    Household h{derive_rng(seed, id), std::vector<std::vector<std::size_t>>(bins), {}};
    for (auto i : indices) h.pools[plan.bin_of(profiles[i].total())].push_back(i);

    // Systematic rounding with a per-household offset keeps the pooled
    // expectation equal to the global bin proportions.
    std::vector<std::size_t> desired(bins, 0);
    const double u = uniform01(h.rng);
    double cum = 0.0;
    long long prev = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      cum += static_cast<double>(plan.bin_population[b]) / population;
      auto cur = static_cast<long long>(
          std::floor(cum * static_cast<double>(days_per_household) + u));
      if (b + 1 == bins) cur = static_cast<long long>(days_per_household);
      desired[b] = static_cast<std::size_t>(std::max(0LL, cur - prev));
      prev = cur;
    }
    std::vector<std::size_t> capacity(bins);
    for (std::size_t b = 0; b < bins; ++b) capacity[b] = h.pools[b].size();
    h.alloc = allocate_with_capacity(desired, capacity);
    for (std::size_t b = 0; b < bins; ++b) pooled[b] += h.alloc[b];
    sampled.push_back(std::move(h));
  }

  // Pooled rebalancing: a deficit bin is filled along the shortest chain of
  // single-slot moves within households (each into a bin where the household
  // has a spare day) that ends at an over-filled bin.
  std::size_t total = std::accumulate(pooled.begin(), pooled.end(), std::size_t{0});
  const auto target = plan.quotas_for(total);
  std::size_t cursor = 0;
  auto holder = [&](std::size_t from, std::size_t to) -> std::size_t {
    for (std::size_t n = 0; n < sampled.size(); ++n) {
      std::size_t h = (cursor + n) % sampled.size();
      if (sampled[h].alloc[from] > 0 && sampled[h].alloc[to] < sampled[h].pools[to].size()) return h;
    }
    return sampled.size();
  };
  for (std::size_t b = 0; b < bins && !sampled.empty(); ++b) {
    while (pooled[b] < target[b]) {
      std::vector<std::size_t> parent(bins, bins), via(bins, 0);
      std::vector<std::size_t> queue{b};
      parent[b] = b;
      std::size_t end = bins;
      for (std::size_t q = 0; q < queue.size() && end == bins; ++q) {
        const std::size_t x = queue[q];
        for (std::size_t dist = 1; dist < bins && end == bins; ++dist) {
          for (std::size_t c : {x + dist, x - dist}) {
            if (c >= bins || parent[c] != bins) continue;
            std::size_t h = holder(c, x);
            if (h == sampled.size()) continue;
            parent[c] = x;
            via[c] = h;
            queue.push_back(c);
            if (pooled[c] > target[c]) {
              end = c;
              break;
            }
          }
        }
      }
      if (end == bins) break;
      for (std::size_t c = end; c != b; c = parent[c]) {
        --sampled[via[c]].alloc[c];
        ++sampled[via[c]].alloc[parent[c]];
      }
      --pooled[end];
      ++pooled[b];
      cursor = (via[end] + 1) % sampled.size();
    }
  }

  for (auto& h : sampled)
    for (std::size_t b = 0; b < bins; ++b) draw(std::move(h.pools[b]), h.alloc[b], h.rng, selected);
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<std::size_t> stage_two(std::span<const DailyProfile> subset,
                                   const StratificationPlan& plan, std::size_t target,
                                   std::uint64_t seed) {
  if (target > subset.size())
    throw DataError("stage_two: target " + std::to_string(target) + " exceeds subset size " +
                    std::to_string(subset.size()));
  const std::size_t bins = plan.bin_count();
  std::vector<std::vector<std::size_t>> pools(bins);
  for (std::size_t i = 0; i < subset.size(); ++i) pools[plan.bin_of(subset[i].total())].push_back(i);
  std::vector<std::size_t> capacity(bins);
  for (std::size_t b = 0; b < bins; ++b) capacity[b] = pools[b].size();
  auto alloc = allocate_with_capacity(plan.quotas_for(target), capacity);

  Rng rng = derive_rng(seed, "stage_two");
  std::vector<std::size_t> selected;
  selected.reserve(target);
  for (std::size_t b = 0; b < bins; ++b) draw(std::move(pools[b]), alloc[b], rng, selected);
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace loadlab
