// Independent reference implementations used to check the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <span>
#include <vector>

namespace loadlab::oracle {

/// Minimum accumulated squared cost over every monotone alignment path,
/// found by explicit path enumeration (exponential; short series only).
inline double dtw_by_paths(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), m = y.size();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                    double acc) {
    double c = acc + (x[i] - y[j]) * (x[i] - y[j]);
    if (i + 1 == n && j + 1 == m) {
      best = std::min(best, c);
      return;
    }
    if (i + 1 < n) walk(i + 1, j, c);
    if (j + 1 < m) walk(i, j + 1, c);
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, c);
  };
  walk(0, 0, 0.0);
  return best;
}

/// Same minimum found as a shortest path through the alignment grid
/// (Dijkstra with node weights); feasible for full 24-hour days.
inline double dtw_by_shortest_path(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), m = y.size();
  auto cost = [&](std::size_t i, std::size_t j) { return (x[i] - y[j]) * (x[i] - y[j]); };
  std::vector<double> dist(n * m, std::numeric_limits<double>::infinity());
  std::vector<char> done(n * m, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[0] = cost(0, 0);
  queue.push({dist[0], 0});
  while (!queue.empty()) {
    auto [c, node] = queue.top();
    queue.pop();
    if (done[node]) continue;
    done[node] = 1;
    const std::size_t i = node / m, j = node % m;
    if (i + 1 == n && j + 1 == m) return c;
    const std::pair<std::size_t, std::size_t> next[3] = {{i + 1, j}, {i, j + 1}, {i + 1, j + 1}};
    for (auto [a, b] : next) {
      if (a >= n || b >= m) continue;
      double nc = c + cost(a, b);
      if (nc < dist[a * m + b]) {
        dist[a * m + b] = nc;
        queue.push({nc, a * m + b});
      }
    }
  }
  return dist.back();
}

struct MedoidOptimum {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> medoids;  ///< lexicographically smallest optimal set
};

/// Enumerates every k-subset of {0..p-1}; `dist(i, j)` gives the distance.
template <class Dist>
MedoidOptimum medoids_by_enumeration(std::size_t p, std::size_t k, Dist&& dist) {
  MedoidOptimum best;
  std::vector<std::size_t> set(k);
  for (std::size_t i = 0; i < k; ++i) set[i] = i;
  while (true) {
    double cost = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double m = std::numeric_limits<double>::infinity();
      for (auto i : set) m = std::min(m, dist(i, j));
      cost += m;
    }
    // Costs within 1e-12 relative are ties; the first in lexicographic order is kept.
    if (best.medoids.empty() || cost < best.cost - 1e-12 * std::max(1.0, std::abs(best.cost))) {
      best.cost = cost;
      best.medoids = set;
    }
    std::size_t pos = k;
    while (pos > 0 && set[pos - 1] == p - k + pos - 1) --pos;
    if (pos == 0) break;
    ++set[pos - 1];
    for (std::size_t i = pos; i < k; ++i) set[i] = set[i - 1] + 1;
  }
  return best;
}

/// Zero-order-hold integral of a step signal between [from, to): the signal
/// takes value v[i] on [t[i], t[i+1]) and v.back() from t.back() onwards.
/// Closed form per step, clipped to the window.
inline double step_integral(std::span<const double> t, std::span<const double> v, double from,
                            double to) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double a = std::max(t[i], from);
    double b = i + 1 < t.size() ? std::min(t[i + 1], to) : to;
    if (b > a) total += v[i] * (b - a);
  }
  return total;
}

/// Two-sample Kolmogorov–Smirnov statistic, evaluated over the union of both
/// samples by counting (no sorting shortcuts shared with the library).
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  auto ecdf = [](std::span<const double> s, double x) {
    std::size_t c = 0;
    for (double v : s) c += v <= x;
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  double d = 0.0;
  for (auto s : {a, b})
    for (double x : s) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

}  // namespace loadlab::oracle
