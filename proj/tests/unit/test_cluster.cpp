#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "loadlab/cluster.hpp"
#include "loadlab/error.hpp"
#include "support/oracles.hpp"

using namespace loadlab;

namespace {

DistanceMatrix random_matrix(std::size_t p, std::mt19937_64& rng, bool integer = false) {
  std::uniform_real_distribution<double> u(0.5, 100.0);
  std::uniform_int_distribution<int> ui(1, 5);
  DistanceMatrix d(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) d.set(i, j, integer ? ui(rng) : u(rng));
  return d;
}

// Points on a line in a few tight groups; distance is the squared gap.
DistanceMatrix grouped(std::size_t groups, std::size_t per_group, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.3);
  std::vector<double> x;
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < per_group; ++i) x.push_back(10.0 * static_cast<double>(g) + jitter(rng));
  DistanceMatrix d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) d.set(i, j, (x[i] - x[j]) * (x[i] - x[j]));
  return d;
}

oracle::MedoidOptimum brute_force(const DistanceMatrix& d, std::size_t k) {
  return oracle::medoids_by_enumeration(d.size(), k, [&](std::size_t i, std::size_t j) { return d(i, j); });
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("k equal to p puts every member on its own medoid") {
  std::mt19937_64 rng(1);
  auto d = random_matrix(7, rng);
  auto m = solve_exact(d, 7);
  CHECK(m.total_cost == 0.0);
  CHECK(m.proven_optimal);
  for (std::size_t j = 0; j < 7; ++j) CHECK(m.medoids[m.labels[j]] == j);
}

TEST_CASE("k = 1 picks the minimum row sum") {
  // Row sums 7, 5, 9, 6.
  DistanceMatrix d(4);
  d.set(0, 1, 2.0);
  d.set(0, 2, 3.0);
  d.set(0, 3, 2.0);
  d.set(1, 2, 2.5);
  d.set(1, 3, 0.5);
  d.set(2, 3, 3.5);
  auto m = solve_exact(d, 1);
  REQUIRE(m.medoids.size() == 1);
  CHECK(m.medoids[0] == 1);
  CHECK(m.total_cost == doctest::Approx(5.0));
  CHECK(solve_pam(d, 1).medoids == m.medoids);
}

TEST_CASE("invalid k is rejected") {
  std::mt19937_64 rng(2);
  auto d = random_matrix(5, rng);
  CHECK_THROWS_AS(solve_exact(d, 0), ConfigError);
  CHECK_THROWS_AS(solve_exact(d, 6), ConfigError);
  CHECK_THROWS_AS(solve_pam(d, 6), ConfigError);
}

TEST_CASE("exact solver matches enumeration on random matrices") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(6, 14), kk(2, 4);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = random_matrix(size(rng), rng);
    auto k = kk(rng);
    auto m = solve_exact(d, k);
    auto ref = brute_force(d, k);
    CAPTURE(trial);
    CHECK(m.proven_optimal);
    CHECK(m.total_cost == doctest::Approx(ref.cost).epsilon(1e-12));
    CHECK(m.medoids == ref.medoids);
    CHECK(validate_model(d, m).empty());
  }
}

TEST_CASE("ties resolve to the lexicographically smallest medoid set") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = random_matrix(9, rng, true);
    auto m = solve_exact(d, 3);
    auto ref = brute_force(d, 3);
    CAPTURE(trial);
    CHECK(m.total_cost == ref.cost);
    CHECK(m.medoids == ref.medoids);
  }
}

TEST_CASE("PAM is never better than exact and usually matches it") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(6, 14), kk(2, 4);
  int matches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto d = random_matrix(size(rng), rng);
    auto k = kk(rng);
    auto exact = solve_exact(d, k);
    auto pam = solve_pam(d, k, static_cast<std::uint64_t>(trial), 5);
    CHECK(pam.total_cost >= exact.total_cost - 1e-9);
    CHECK(validate_model(d, pam).empty());
    matches += std::abs(pam.total_cost - exact.total_cost) <= 1e-9 * exact.total_cost;
  }
  CHECK(matches >= 40);
}

TEST_CASE("time limit returns a flagged incumbent") {
  auto d = grouped(4, 30, 3);
  ExactOptions opt;
  opt.time_limit_seconds = 0.0;
  auto m = solve_exact(d, 3, opt);
  CHECK_FALSE(m.proven_optimal);
  CHECK(m.gap > 0.0);
  CHECK(validate_model(d, m).empty());
}

TEST_CASE("silhouette of separated zero-spread groups is one") {
  DistanceMatrix d(4);
  d.set(0, 2, 5.0);
  d.set(0, 3, 5.0);
  d.set(1, 2, 5.0);
  d.set(1, 3, 5.0);
  std::vector<std::size_t> labels{0, 0, 1, 1};
  CHECK(silhouette(d, labels) == 1.0);
}

TEST_CASE("silhouette of identical points is zero") {
  DistanceMatrix d(5);
  std::vector<std::size_t> labels{0, 0, 1, 1, 1};
  CHECK(silhouette(d, labels) == 0.0);
}

TEST_CASE("silhouette rejects a single cluster") {
  DistanceMatrix d(3);
  std::vector<std::size_t> labels{0, 0, 0};
  CHECK_THROWS_AS(silhouette(d, labels), DataError);
}

TEST_CASE("recovered labels score higher than random labels") {
  auto d = grouped(5, 20, 8);
  auto m = solve_exact(d, 5);
  std::mt19937_64 rng(4);
  std::vector<std::size_t> shuffled = m.labels;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(silhouette(d, m.labels) > silhouette(d, shuffled));
}

TEST_CASE("sweep over 2..8 emits seven models with non-increasing cost") {
  auto d = grouped(5, 12, 6);
  ExactSolver solver;
  auto sweep = k_sweep(d, 2, 8, solver);
  REQUIRE(sweep.models.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(sweep.models[i].k == i + 2);
    CHECK(sweep.models[i].proven_optimal);
    if (i > 0) CHECK(sweep.models[i].total_cost <= sweep.models[i - 1].total_cost);
  }
  CHECK(sweep.best_k == 5);
}

TEST_CASE("validate_model reports broken models") {
  auto d = grouped(3, 5, 1);
  auto m = solve_exact(d, 3);
  REQUIRE(validate_model(d, m).empty());
  auto wrong_label = m;
  wrong_label.labels[0] = (wrong_label.labels[0] + 1) % 3;
  CHECK_FALSE(validate_model(d, wrong_label).empty());
  auto wrong_cost = m;
  wrong_cost.total_cost += 1.0;
  CHECK_FALSE(validate_model(d, wrong_cost).empty());
  auto duplicate = m;
  duplicate.medoids[1] = duplicate.medoids[0];
  CHECK_FALSE(validate_model(d, duplicate).empty());
}

}  // TEST_SUITE

TEST_SUITE("cluster properties") {

TEST_CASE("objective is invariant under simultaneous permutation") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = random_matrix(12, rng);
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DistanceMatrix q(12);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < i; ++j) q.set(perm[i], perm[j], d(i, j));
    auto a = solve_exact(d, 3), b = solve_exact(q, 3);
    CHECK(a.total_cost == doctest::Approx(b.total_cost).epsilon(1e-12));
    std::vector<std::size_t> mapped;
    for (auto m : a.medoids) mapped.push_back(perm[m]);
    std::sort(mapped.begin(), mapped.end());
    // Tie-breaks follow indices, so compare by cost rather than by set.
    CHECK(make_model(q, mapped).total_cost == doctest::Approx(b.total_cost).epsilon(1e-12));
  }
}

TEST_CASE("scaling distances scales the cost and keeps the medoids") {
  std::mt19937_64 rng(41);
  for (double alpha : {0.01, 3.0, 1000.0}) {
    auto d = random_matrix(11, rng);
    DistanceMatrix s(11);
    for (std::size_t i = 0; i < 11; ++i)
      for (std::size_t j = 0; j < i; ++j) s.set(i, j, alpha * d(i, j));
    auto a = solve_exact(d, 4), b = solve_exact(s, 4);
    CHECK(b.total_cost == doctest::Approx(alpha * a.total_cost).epsilon(1e-12));
    CHECK(a.medoids == b.medoids);
  }
}

TEST_CASE("moving any member to another medoid never lowers the cost") {
  std::mt19937_64 rng(51);
  auto d = random_matrix(13, rng);
  auto m = solve_exact(d, 4);
  for (std::size_t j = 0; j < 13; ++j)
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(d(m.medoids[c], j) >= d(m.medoids[m.labels[j]], j));
}

TEST_CASE("result does not depend on the thread count") {
  auto d = grouped(4, 25, 12);
  ExactOptions one{600.0, 1}, many{600.0, 4};
  auto a = solve_exact(d, 4, one), b = solve_exact(d, 4, many);
  CHECK(a.medoids == b.medoids);
  CHECK(a.total_cost == b.total_cost);
  CHECK(silhouette(d, a.labels, 1) == silhouette(d, a.labels, 4));
}

}  // TEST_SUITE
