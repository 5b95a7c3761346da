#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "loadlab/error.hpp"
#include "loadlab/sampling.hpp"
#include "loadlab/synth.hpp"
#include "support/oracles.hpp"

using namespace loadlab;

namespace {

DailyProfile flat(const std::string& id, int day, double total, bool complete = true) {
  DailyProfile p;
  p.household_id = id;
  p.date = LocalDate{std::chrono::days{18000 + day}};
  p.age_days = day;
  p.hours.fill(total / 24.0);
  p.complete = complete;
  return p;
}

std::vector<DailyProfile> fleet(std::size_t households, int days, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> energy(3.5, 0.6);
  std::vector<DailyProfile> out;
  for (std::size_t h = 0; h < households; ++h)
    for (int d = 0; d < days; ++d) out.push_back(flat("H" + std::to_string(h), d, energy(rng)));
  return out;
}

std::vector<std::size_t> histogram(const StratificationPlan& plan,
                                   const std::vector<DailyProfile>& profiles,
                                   const std::vector<std::size_t>& picked) {
  std::vector<std::size_t> h(plan.bin_count(), 0);
  for (auto i : picked) ++h[plan.bin_of(profiles[i].total())];
  return h;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("uniform totals give equal decile quotas") {
  std::vector<DailyProfile> profiles;
  for (int i = 0; i < 1000; ++i) profiles.push_back(flat("H", i, i * 0.1));
  auto plan = build_plan(profiles, 10, 100, 1);
  REQUIRE(plan.bin_count() == 10);
  for (auto q : plan.per_bin_quota) CHECK(q == 10);
  for (auto n : plan.bin_population) CHECK(n == 100);
}

TEST_CASE("identical totals collapse to one bin") {
  std::vector<DailyProfile> profiles;
  for (int i = 0; i < 50; ++i) profiles.push_back(flat("H", i, 42.0));
  auto plan = build_plan(profiles, 10, 20, 1);
  CHECK(plan.bin_count() == 1);
  REQUIRE(plan.per_bin_quota.size() == 1);
  CHECK(plan.per_bin_quota[0] == 20);
}

TEST_CASE("quotas for a 647021-profile population sum to 2000") {
  StratificationPlan plan;
  plan.bin_edges = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  plan.bin_population = {64703, 64702, 64702, 64702, 64702, 64702, 64702, 64702, 64702, 64702};
  REQUIRE(std::accumulate(plan.bin_population.begin(), plan.bin_population.end(), std::size_t{0}) ==
          647021);
  auto q = plan.quotas_for(2000);
  CHECK(std::accumulate(q.begin(), q.end(), std::size_t{0}) == 2000);
  for (auto v : q) CHECK((v == 200 || v == 201));
}

TEST_CASE("largest remainder is exact and breaks ties to the lower index") {
  std::vector<double> w{1, 1, 1};
  auto q = largest_remainder(w, 4);
  CHECK(q == std::vector<std::size_t>{2, 1, 1});
  std::vector<double> skew{0.5, 0.3, 0.2};
  CHECK(largest_remainder(skew, 7) == std::vector<std::size_t>{4, 2, 1});
}

TEST_CASE("target above the population is rejected") {
  auto profiles = fleet(2, 5, 3);
  CHECK_THROWS_AS(build_plan(profiles, 10, 11, 1), DataError);
  CHECK_THROWS_AS(build_plan({}, 10, 0, 1), DataError);
}

TEST_CASE("stage one takes the requested days per household") {
  auto profiles = fleet(100, 30, 5);
  auto plan = build_plan(profiles, 10, 500, 9);
  auto picked = stage_one(profiles, 10, plan, 9);
  CHECK(picked.size() == 1000);
  std::map<std::string, int> per;
  for (auto i : picked) ++per[profiles[i].household_id];
  for (const auto& [id, n] : per) CHECK(n == 10);
}

TEST_CASE("a household with three complete days contributes all three") {
  std::vector<DailyProfile> profiles;
  for (int d = 0; d < 3; ++d) profiles.push_back(flat("A", d, 10.0 + d));
  profiles.push_back(flat("A", 3, 11.0, false));
  for (int d = 0; d < 20; ++d) profiles.push_back(flat("B", d, 5.0 + d));
  auto plan = build_plan(profiles, 4, 10, 2);
  auto picked = stage_one(profiles, 10, plan, 2);
  std::size_t from_a = 0;
  for (auto i : picked) {
    CHECK(profiles[i].complete);
    from_a += profiles[i].household_id == "A";
  }
  CHECK(from_a == 3);
  CHECK(picked.size() == 13);
}

TEST_CASE("stage one is deterministic under a seed") {
  auto profiles = fleet(40, 50, 11);
  auto plan = build_plan(profiles, 10, 200, 4);
  auto a = stage_one(profiles, 10, plan, 4);
  auto b = stage_one(profiles, 10, plan, 4);
  auto c = stage_one(profiles, 10, plan, 5);
  CHECK(a == b);
  CHECK(a.size() == c.size());
  CHECK(a != c);
}

TEST_CASE("stage two returns exactly the target within one profile of every quota") {
  auto profiles = fleet(1000, 10, 21);
  auto plan = build_plan(profiles, 10, 2000, 21);
  auto picked = stage_two(profiles, plan, 2000, 21);
  CHECK(picked.size() == 2000);
  std::set<std::size_t> unique(picked.begin(), picked.end());
  CHECK(unique.size() == picked.size());
  CHECK(*unique.rbegin() < profiles.size());
  auto h = histogram(plan, profiles, picked);
  for (std::size_t b = 0; b < h.size(); ++b)
    CHECK(std::abs(static_cast<long>(h[b]) - static_cast<long>(plan.per_bin_quota[b])) <= 1);
}

TEST_CASE("stage two with target equal to the subset selects everything") {
  auto profiles = fleet(10, 12, 8);
  auto plan = build_plan(profiles, 10, 120, 8);
  auto picked = stage_two(profiles, plan, profiles.size(), 8);
  std::vector<std::size_t> all(profiles.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(picked == all);
  CHECK_THROWS_AS(stage_two(profiles, plan, profiles.size() + 1, 8), DataError);
}

TEST_CASE("different seeds change the selection but not its size or quotas") {
  auto profiles = fleet(200, 20, 13);
  auto plan = build_plan(profiles, 10, 400, 1);
  auto a = stage_two(profiles, plan, 400, 1);
  auto b = stage_two(profiles, plan, 400, 2);
  CHECK(a.size() == b.size());
  CHECK(a != b);
  CHECK(histogram(plan, profiles, a) == histogram(plan, profiles, b));
}

}  // TEST_SUITE

TEST_SUITE("sampling properties") {

TEST_CASE("two-stage sample keeps the synthetic daily-total distribution") {
  auto params = synth::FleetParams::for_scenario(synth::Scenario::PaperLike, 60, 365, 17);
  std::vector<DailyProfile> profiles;
  for (std::size_t i = 0; i < params.households; ++i) {
    auto h = synth::generate_household(params, i);
    profiles.insert(profiles.end(), h.profiles.begin(), h.profiles.end());
  }
  auto plan = build_plan(profiles, 10, 2000, 17);
  auto first = stage_one(profiles, 170, plan, 17);
  std::vector<DailyProfile> subset;
  for (auto i : first) subset.push_back(profiles[i]);
  REQUIRE(subset.size() >= 2000);
  auto second = stage_two(subset, plan, 2000, 17);
  REQUIRE(second.size() == 2000);

  std::vector<double> before, after;
  for (const auto& p : subset) before.push_back(p.total());
  for (auto i : second) after.push_back(subset[i].total());
  CHECK(oracle::ks_statistic(before, after) <= 0.05);
}

}  // TEST_SUITE
