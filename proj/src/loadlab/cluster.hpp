#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "loadlab/dtw.hpp"

namespace loadlab {

/// k medoids chosen from the clustered set plus the assignment of every member.
struct ClusterModel {
  std::size_t k = 0;
  std::vector<std::size_t> medoids;  ///< ascending indices into the distance matrix
  std::vector<std::size_t> labels;   ///< per member: position in `medoids`
  double total_cost = 0.0;
  double silhouette = std::numeric_limits<double>::quiet_NaN();
  bool proven_optimal = false;
  double gap = 0.0;  ///< (incumbent - lower bound) / incumbent when not proven
  std::string solver;
};

/// Assigns every member to its nearest medoid (medoids to themselves, ties to
/// the lowest medoid index) and computes the total cost.
ClusterModel make_model(const DistanceMatrix& d, std::vector<std::size_t> medoids);

/// Checks the k-medoids constraints on a model: k distinct medoids, one
/// cluster per member, assignment only to open medoids, medoids self-assigned,
/// nearest-medoid labels and a consistent total cost. Returns violations.
std::vector<std::string> validate_model(const DistanceMatrix& d, const ClusterModel& model);

struct ExactOptions {
  double time_limit_seconds = 600.0;
  unsigned threads = 0;
};

/// Globally optimal k-medoids (p-median) by branch-and-bound over medoid
/// sets. Among equal-cost optima the lexicographically smallest medoid set is
/// returned. On time-out the incumbent is returned with proven_optimal=false.
ClusterModel solve_exact(const DistanceMatrix& d, std::size_t k, const ExactOptions& options = {});

/// BUILD + SWAP local search; restart 0 starts from BUILD, later restarts from
/// seeded random medoid sets. Returns the best restart.
ClusterModel solve_pam(const DistanceMatrix& d, std::size_t k, std::uint64_t seed = 0,
                       std::size_t restarts = 5);

/// Mean silhouette over precomputed distances. Singleton clusters score 0,
/// as do points with a = b = 0.
double silhouette(const DistanceMatrix& d, std::span<const std::size_t> labels,
                  unsigned threads = 0);

/// Strategy seam so other solvers (e.g. an external MILP) can drive k_sweep.
class MedoidSolver {
 public:
  virtual ~MedoidSolver() = default;
  virtual ClusterModel solve(const DistanceMatrix& d, std::size_t k) = 0;
};

class ExactSolver : public MedoidSolver {
 public:
  explicit ExactSolver(ExactOptions options = {}) : options_(options) {}
  ClusterModel solve(const DistanceMatrix& d, std::size_t k) override {
    return solve_exact(d, k, options_);
  }

 private:
  ExactOptions options_;
};

class PamSolver : public MedoidSolver {
 public:
  PamSolver(std::uint64_t seed, std::size_t restarts) : seed_(seed), restarts_(restarts) {}
  ClusterModel solve(const DistanceMatrix& d, std::size_t k) override {
    return solve_pam(d, k, seed_, restarts_);
  }

 private:
  std::uint64_t seed_;
  std::size_t restarts_;
};

struct SweepResult {
  std::vector<ClusterModel> models;  ///< one per k, ascending
  std::size_t best_k = 0;            ///< silhouette argmax, ties to smaller k
};

SweepResult k_sweep(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max,
                    MedoidSolver& solver, unsigned threads = 0);

}  // namespace loadlab
