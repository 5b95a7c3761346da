#include "loadlab/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "loadlab/error.hpp"
#include "loadlab/parallel.hpp"
#include "loadlab/random.hpp"

namespace loadlab {
namespace {

void check_k(const DistanceMatrix& d, std::size_t k) {
  if (k == 0) throw ConfigError("k must be >= 1");
  if (k > d.size())
    throw ConfigError("k = " + std::to_string(k) + " exceeds p = " + std::to_string(d.size()));
}

double cost_of(const DistanceMatrix& d, std::span<const std::size_t> medoids) {
  double total = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (auto m : medoids) best = std::min(best, d(m, j));
    total += best;
  }
  return total;
}

bool better(double cost, const std::vector<std::size_t>& set, double best_cost,
            const std::vector<std::size_t>& best_set) {
  double tol = 1e-12 * std::max(1.0, std::abs(best_cost));
  if (cost < best_cost - tol) return true;
  if (cost > best_cost + tol) return false;
  return best_set.empty() || set < best_set;
}

// ---------------------------------------------------------------------------
// PAM

std::vector<std::size_t> pam_build(const DistanceMatrix& d, std::size_t k) {
  const std::size_t p = d.size();
  std::vector<std::size_t> medoids;
  std::vector<double> near(p, std::numeric_limits<double>::infinity());
  std::vector<char> is_medoid(p, 0);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = p;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < p; ++c) {
      if (is_medoid[c]) continue;
      double gain = 0.0;
      auto row = d.row(c);
      if (step == 0) {
        gain = -std::accumulate(row.begin(), row.end(), 0.0);
      } else {
        for (std::size_t j = 0; j < p; ++j) gain += std::max(0.0, near[j] - row[j]);
      }
      if (best == p || gain > best_gain) {
        best = c;
        best_gain = gain;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = 1;
    auto row = d.row(best);
    for (std::size_t j = 0; j < p; ++j) near[j] = std::min(near[j], row[j]);
  }
  std::sort(medoids.begin(), medoids.end());
  return medoids;
}

// Nearest / second-nearest medoid caches for SWAP.
struct Nearest {
  std::vector<std::size_t> pos;  // position in medoid list
  std::vector<double> first, second;
};

Nearest compute_nearest(const DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
  const std::size_t p = d.size();
  Nearest n{std::vector<std::size_t>(p), std::vector<double>(p), std::vector<double>(p)};
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p; ++j) {
    double a = inf, b = inf;
    std::size_t ia = 0;
    for (std::size_t q = 0; q < medoids.size(); ++q) {
      double v = d(medoids[q], j);
      if (v < a) {
        b = a;
        a = v;
        ia = q;
      } else if (v < b) {
        b = v;
      }
    }
    n.pos[j] = ia;
    n.first[j] = a;
    n.second[j] = b;
  }
  return n;
}

// Best-improvement SWAP until no swap lowers the cost.
void pam_swap(const DistanceMatrix& d, std::vector<std::size_t>& medoids) {
  const std::size_t p = d.size();
  const std::size_t k = medoids.size();
  if (k == p) return;
  std::vector<char> is_medoid(p, 0);
  for (auto m : medoids) is_medoid[m] = 1;
  std::vector<double> removal(k);
  for (std::size_t iter = 0; iter < 10000; ++iter) {
    Nearest n = compute_nearest(d, medoids);
    double cost = std::accumulate(n.first.begin(), n.first.end(), 0.0);
    double best_delta = 0.0;
    std::size_t best_h = p, best_q = 0;
    for (std::size_t h = 0; h < p; ++h) {
      if (is_medoid[h]) continue;
      auto row = d.row(h);
      double shared = 0.0;
      std::fill(removal.begin(), removal.end(), 0.0);
      for (std::size_t j = 0; j < p; ++j) {
        double dh = row[j];
        double keep = std::min(0.0, dh - n.first[j]);
        shared += keep;
        removal[n.pos[j]] += (std::min(n.second[j], dh) - n.first[j]) - keep;
      }
      for (std::size_t q = 0; q < k; ++q) {
        double delta = shared + removal[q];
        if (delta < best_delta) {
          best_delta = delta;
          best_h = h;
          best_q = q;
        }
      }
    }
    if (best_h == p || best_delta >= -1e-12 * std::max(1.0, cost)) break;
    is_medoid[medoids[best_q]] = 0;
    is_medoid[best_h] = 1;
    medoids[best_q] = best_h;
  }
  std::sort(medoids.begin(), medoids.end());
}

// ---------------------------------------------------------------------------
// Branch-and-bound for the p-median problem
//
//   min sum_ij D_ij A_ij  s.t.  sum_i A_ii = k,  sum_i A_ij = 1,  A_ij <= A_ii.
//
// Each node fixes candidate medoids In or Out. Its bound is the larger of
// sum_j min_{i not Out} D_ij and the Lagrangian bound obtained by relaxing
// the assignment rows with multipliers lambda_j:
//
//   L(lambda) = sum_j lambda_j + min_{|Y|=k, In <= Y} sum_{i in Y} rho_i,
//   rho_i = sum_j min(0, D_ij - lambda_j),
//
// maximised by subgradient ascent. Reduced costs of the inner selection fix
// further candidates, and the search branches on a selected free candidate.

enum : std::uint8_t { kFree = 0, kIn = 1, kOut = 2 };

struct Node {
  std::vector<std::uint8_t> status;
  std::vector<double> lambda;
  double bound = 0.0;
};

constexpr int kRootIterations = 5000;
constexpr int kRootStall = 120;
constexpr int kImproveEvery = 100;
constexpr int kNodeIterations = 150;
constexpr int kNodeStall = 20;

class PMedianSearch {
 public:
  PMedianSearch(const DistanceMatrix& d, std::size_t k, const ExactOptions& options)
      : d_(d),
        p_(d.size()),
        k_(k),
        threads_(options.threads),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(options.time_limit_seconds))),
        rho_(p_) {
    columns_.resize(p_ * p_);
    parallel_for(
        p_, threads_,
        [&](std::size_t j) {
          Entry* col = columns_.data() + j * p_;
          for (std::size_t i = 0; i < p_; ++i) col[i] = {d_(i, j), static_cast<std::uint32_t>(i)};
          std::sort(col, col + p_, [](const Entry& a, const Entry& b) {
            return a.value < b.value || (a.value == b.value && a.index < b.index);
          });
        },
        16);
  }

  ClusterModel run() {
    // Incumbent from local search.
    best_set_ = solve_pam(d_, k_, 0, 5).medoids;
    ub_ = cost_of(d_, best_set_);

    Node root;
    root.status.assign(p_, kFree);
    root.lambda.assign(p_, 0.0);
    for (std::size_t j = 0; j < p_; ++j) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p_; ++i)
        if (i != j) nn = std::min(nn, d_(i, j));
      root.lambda[j] = p_ > 1 ? nn : 0.0;
    }
    root.bound = 0.0;

    std::vector<Node> stack;
    stack.push_back(std::move(root));
    bool timed_out = false;
    double open_bound = std::numeric_limits<double>::infinity();
    bool first = true;
    while (!stack.empty()) {
      if (std::chrono::steady_clock::now() >= deadline_) {
        timed_out = true;
        for (const auto& n : stack) open_bound = std::min(open_bound, n.bound);
        break;
      }
      Node node = std::move(stack.back());
      stack.pop_back();
      if (prunable(node.bound, node.status)) continue;
      if (first)
        process(node, stack, kRootIterations, 2.0, kRootStall, kImproveEvery);
      else
        process(node, stack, kNodeIterations, 1.0, kNodeStall, 0);
      if (first) root_bound_ = node.bound;
      first = false;
    }

    ClusterModel model = make_model(d_, best_set_);
    model.solver = "exact";
    model.proven_optimal = !timed_out;
    if (timed_out) {
      double lb = std::min(open_bound, ub_);
      model.gap = ub_ > 0.0 ? std::max(0.0, (ub_ - lb) / ub_) : 0.0;
    }
    return model;
  }

 private:
  double prune_tol() const { return 1e-9 * std::max(1.0, std::abs(ub_)); }

  // True when some completion of `status` sorts before the incumbent set.
  // Such subtrees may still hold an equal-cost, lexicographically smaller
  // optimum, so they are only cut when strictly worse.
  bool may_win_tie(const std::vector<std::uint8_t>& status) const {
    std::size_t in = 0;
    for (auto s : status) in += s == kIn;
    std::vector<std::size_t> least;
    std::size_t extra = k_ - std::min(k_, in);
    for (std::size_t i = 0; i < p_; ++i) {
      if (status[i] == kIn) {
        least.push_back(i);
      } else if (status[i] == kFree && extra > 0) {
        least.push_back(i);
        --extra;
      }
    }
    return least < best_set_;
  }

  bool prunable(double bound, bool tie_open) const {
    if (tie_open) return bound > ub_ + 1e-12 * std::max(1.0, std::abs(ub_));
    return bound >= ub_ - prune_tol();
  }

  bool prunable(double bound, const std::vector<std::uint8_t>& status) const {
    return prunable(bound, may_win_tie(status));
  }

  // Local search from a relaxation solution; tightens the incumbent early.
  void improve(std::vector<std::size_t> set) {
    pam_swap(d_, set);
    offer(std::move(set));
  }

  void offer(std::vector<std::size_t> set) {
    std::sort(set.begin(), set.end());
    double c = cost_of(d_, set);
    if (better(c, set, ub_, best_set_)) {
      ub_ = c;
      best_set_ = std::move(set);
    }
  }

  // rho for every non-Out candidate under `lambda`. Only pairs with
  // d(i, j) < lambda_j contribute, so each column is scanned up to that cutoff.
  void compute_rho(const std::vector<std::uint8_t>& status, const std::vector<double>& lambda) {
    std::fill(rho_.begin(), rho_.end(), 0.0);
    for (std::size_t j = 0; j < p_; ++j) {
      const double lj = lambda[j];
      const Entry* col = columns_.data() + j * p_;
      for (std::size_t r = 0; r < p_ && col[r].value < lj; ++r) {
        const std::uint32_t i = col[r].index;
        if (status[i] != kOut) rho_[i] += col[r].value - lj;
      }
    }
  }

  // Lagrangian value plus the selected set Y (In followed by chosen Free).
  double lagrangian(const std::vector<std::uint8_t>& status, const std::vector<double>& lambda,
                    std::size_t need, std::vector<std::size_t>& chosen_free,
                    std::vector<std::size_t>& free_sorted) {
    compute_rho(status, lambda);
    double value = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    free_sorted.clear();
    for (std::size_t i = 0; i < p_; ++i) {
      if (status[i] == kIn) value += rho_[i];
      if (status[i] == kFree) free_sorted.push_back(i);
    }
    auto by_rho = [&](std::size_t a, std::size_t b) {
      return rho_[a] < rho_[b] || (rho_[a] == rho_[b] && a < b);
    };
    std::sort(free_sorted.begin(), free_sorted.end(), by_rho);
    chosen_free.assign(free_sorted.begin(), free_sorted.begin() + static_cast<long>(need));
    for (auto i : chosen_free) value += rho_[i];
    return value;
  }

  void process(Node& node, std::vector<Node>& stack, std::size_t max_iter, double mu,
               std::size_t stall_limit, std::size_t improve_every) {
    auto& status = node.status;
    std::size_t n_in = 0, n_free = 0;
    for (auto s : status) {
      n_in += s == kIn;
      n_free += s == kFree;
    }
    if (n_in + n_free < k_) return;
    if (n_in == k_ || n_in + n_free == k_) {
      std::vector<std::size_t> set;
      for (std::size_t i = 0; i < p_; ++i)
        if (status[i] != kOut) set.push_back(i);
      if (set.size() == k_) offer(std::move(set));
      return;
    }
    const std::size_t need = k_ - n_in;

    // Covering bound: every member is served by some non-excluded candidate.
    double simple = 0.0;
    for (std::size_t j = 0; j < p_; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p_; ++i)
        if (status[i] != kOut) best = std::min(best, d_(i, j));
      simple += best;
    }
    double bound = std::max(node.bound, simple);
    if (prunable(bound, status)) return;

    std::vector<double> lambda = std::move(node.lambda);
    std::vector<double> best_lambda = lambda;
    double best_l = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> chosen, free_sorted, y;
    std::vector<double> g(p_);
    std::size_t stall = 0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      double l = lagrangian(status, lambda, need, chosen, free_sorted);
      y.clear();
      for (std::size_t i = 0; i < p_; ++i)
        if (status[i] == kIn) y.push_back(i);
      y.insert(y.end(), chosen.begin(), chosen.end());
      if (iter % 4 == 0) offer(y);
      if (improve_every && iter % improve_every == improve_every - 1) improve(y);
      if (iter == 0 || l > best_l + 1e-12 * std::max(1.0, std::abs(best_l))) {
        best_l = l;
        best_lambda = lambda;
        stall = 0;
      } else if (++stall >= stall_limit) {
        mu *= 0.5;
        stall = 0;
      }
      if (mu < 1e-4 || prunable(best_l, status)) break;
      double norm2 = 0.0;
      for (std::size_t j = 0; j < p_; ++j) {
        int covered = 0;
        for (auto i : y) covered += d_(i, j) < lambda[j];
        g[j] = 1.0 - covered;
        norm2 += g[j] * g[j];
      }
      if (norm2 == 0.0) break;  // relaxation solution is feasible, hence optimal here
      double step = mu * std::max(ub_ - l, 1e-9 * std::max(1.0, ub_)) / norm2;
      for (std::size_t j = 0; j < p_; ++j) lambda[j] += step * g[j];
    }
    bound = std::max(bound, best_l);
    if (prunable(bound, status)) return;

    // Reduced-cost fixing at the best multipliers.
    double l = lagrangian(status, best_lambda, need, chosen, free_sorted);
    y.clear();
    for (std::size_t i = 0; i < p_; ++i)
      if (status[i] == kIn) y.push_back(i);
    y.insert(y.end(), chosen.begin(), chosen.end());
    offer(y);
    const bool tie_open = may_win_tie(status);
    const double rho_last = rho_[free_sorted[need - 1]];
    const bool has_next = free_sorted.size() > need;
    const double rho_next = has_next ? rho_[free_sorted[need]] : 0.0;
    for (std::size_t r = need; r < free_sorted.size(); ++r) {
      std::size_t i = free_sorted[r];
      if (prunable(l + rho_[i] - rho_last, tie_open)) status[i] = kOut;
    }
    std::size_t branch = p_;
    double branch_score = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < need; ++r) {
      std::size_t i = free_sorted[r];
      double out_bound = has_next ? l - rho_[i] + rho_next : std::numeric_limits<double>::infinity();
      if (prunable(out_bound, tie_open)) {
        status[i] = kIn;
      } else if (out_bound > branch_score) {
        branch_score = out_bound;
        branch = i;
      }
    }

    Node base;
    base.status = status;
    base.lambda = best_lambda;
    base.bound = bound;
    if (branch == p_) {
      // Fixings alone settle the node; re-process it as a child.
      stack.push_back(std::move(base));
      return;
    }
    Node out_child = base;
    out_child.status[branch] = kOut;
    base.status[branch] = kIn;
    stack.push_back(std::move(out_child));
    stack.push_back(std::move(base));
  }

  const DistanceMatrix& d_;
  std::size_t p_, k_;
  unsigned threads_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<double> rho_;
  struct Entry {
    double value;
    std::uint32_t index;
  };
  std::vector<Entry> columns_;
  double ub_ = std::numeric_limits<double>::infinity();
  double root_bound_ = 0.0;
  std::vector<std::size_t> best_set_;
};

}  // namespace

ClusterModel make_model(const DistanceMatrix& d, std::vector<std::size_t> medoids) {
  std::sort(medoids.begin(), medoids.end());
  ClusterModel model;
  model.k = medoids.size();
  model.labels.assign(d.size(), 0);
  std::vector<std::ptrdiff_t> medoid_pos(d.size(), -1);
  for (std::size_t q = 0; q < medoids.size(); ++q) medoid_pos[medoids[q]] = static_cast<std::ptrdiff_t>(q);
  double total = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (medoid_pos[j] >= 0) {
      model.labels[j] = static_cast<std::size_t>(medoid_pos[j]);
      continue;
    }
    std::size_t best = 0;
    for (std::size_t q = 1; q < medoids.size(); ++q)
      if (d(medoids[q], j) < d(medoids[best], j)) best = q;
    model.labels[j] = best;
    total += d(medoids[best], j);
  }
  model.total_cost = total;
  model.medoids = std::move(medoids);
  return model;
}

std::vector<std::string> validate_model(const DistanceMatrix& d, const ClusterModel& model) {
  std::vector<std::string> problems;
  const std::size_t p = d.size();
  if (model.medoids.size() != model.k) problems.push_back("medoid count differs from k");
  for (std::size_t q = 0; q < model.medoids.size(); ++q) {
    if (model.medoids[q] >= p) problems.push_back("medoid index out of range");
    if (q > 0 && model.medoids[q] <= model.medoids[q - 1])
      problems.push_back("medoids not distinct/ascending");
  }
  if (!problems.empty()) return problems;
  if (model.labels.size() != p) {
    problems.push_back("labels size differs from p");
    return problems;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (model.labels[j] >= model.k) {
      problems.push_back("member " + std::to_string(j) + " assigned to a closed medoid");
      continue;
    }
    double assigned = d(model.medoids[model.labels[j]], j);
    total += assigned;
    for (auto m : model.medoids)
      if (d(m, j) < assigned) problems.push_back("member " + std::to_string(j) + " not nearest");
  }
  for (std::size_t q = 0; q < model.k; ++q)
    if (model.labels[model.medoids[q]] != q)
      problems.push_back("medoid " + std::to_string(model.medoids[q]) + " not self-assigned");
  if (std::abs(total - model.total_cost) > 1e-9 * std::max(1.0, total))
    problems.push_back("total_cost inconsistent with assignment");
  return problems;
}

ClusterModel solve_exact(const DistanceMatrix& d, std::size_t k, const ExactOptions& options) {
  check_k(d, k);
  if (k == d.size()) {
    std::vector<std::size_t> all(k);
    std::iota(all.begin(), all.end(), 0);
    auto model = make_model(d, std::move(all));
    model.solver = "exact";
    model.proven_optimal = true;
    return model;
  }
  return PMedianSearch(d, k, options).run();
}

ClusterModel solve_pam(const DistanceMatrix& d, std::size_t k, std::uint64_t seed,
                       std::size_t restarts) {
  check_k(d, k);
  restarts = std::max<std::size_t>(1, restarts);
  std::vector<std::size_t> best_set;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<std::size_t> medoids;
    if (r == 0) {
      medoids = pam_build(d, k);
    } else {
      Rng rng = derive_rng(seed, r);
      std::vector<std::size_t> pool(d.size());
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t i = 0; i < k; ++i)
        std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
      medoids.assign(pool.begin(), pool.begin() + static_cast<long>(k));
    }
    pam_swap(d, medoids);
    double c = cost_of(d, medoids);
    if (better(c, medoids, best_cost, best_set)) {
      best_cost = c;
      best_set = medoids;
    }
  }
  auto model = make_model(d, std::move(best_set));
  model.solver = "pam";
  return model;
}

double silhouette(const DistanceMatrix& d, std::span<const std::size_t> labels, unsigned threads) {
  const std::size_t p = d.size();
  if (labels.size() != p) throw DataError("silhouette: label count differs from matrix size");
  std::size_t clusters = 0;
  for (auto l : labels) clusters = std::max(clusters, l + 1);
  if (clusters < 2) throw DataError("silhouette: needs at least 2 clusters");
  std::vector<std::size_t> sizes(clusters, 0);
  for (auto l : labels) ++sizes[l];
  for (auto s : sizes)
    if (s == 0) throw DataError("silhouette: empty cluster");

  std::vector<double> score(p, 0.0);
  parallel_for(
      p, threads,
      [&](std::size_t j) {
        const std::size_t own = labels[j];
        if (sizes[own] == 1) return;  // singleton: s = 0
        std::vector<double> sum(clusters, 0.0);
        auto row = d.row(j);
        for (std::size_t i = 0; i < p; ++i) sum[labels[i]] += row[i];
        double a = sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters; ++c)
          if (c != own) b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
        double denom = std::max(a, b);
        score[j] = denom > 0.0 ? (b - a) / denom : 0.0;
      },
      16);
  return std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(p);
}

SweepResult k_sweep(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max,
                    MedoidSolver& solver, unsigned threads) {
  if (k_min < 2) throw ConfigError("k_sweep: k_min must be >= 2");
  if (k_max < k_min) throw ConfigError("k_sweep: k_max < k_min");
  if (k_max > d.size()) throw ConfigError("k_sweep: k_max exceeds p");
  SweepResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    ClusterModel model = solver.solve(d, k);
    model.silhouette = silhouette(d, model.labels, threads);
    if (model.silhouette > best) {
      best = model.silhouette;
      result.best_k = k;
    }
    result.models.push_back(std::move(model));
  }
  return result;
}

}  // namespace loadlab
