#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "cim/estimand.hpp"
#include "cim/graph.hpp"

namespace cim {

// Objective handed to the selectors: value of a candidate seed set (ascending
// member list). Must be a pure function of the set for lazy evaluation and
// memoization to be sound; the factories below guarantee that.
using SetObjective = std::function<double(const std::vector<int>&)>;

struct GreedyOptions {
  bool lazy = false;  // lazy marginal-gain queue; eager full scan by default
};

struct GreedyStep {
  int node = 0;
  double gain = 0.0;
  double value = 0.0;  // objective after the insertion
};

struct GreedyResult {
  std::vector<int> members;       // chosen ids, ascending
  std::vector<GreedyStep> trace;  // insertion order
  double value = 0.0;
  long long evaluations = 0;
};

// Budgeted greedy over nodes 0..n-1: K rounds, each inserting the argmax
// marginal gain, ties broken toward the lowest id (so K = n returns V for
// any objective). Eager scans every candidate per round (<= K*n objective
// evaluations); lazy keeps stale upper bounds in a priority queue,
// re-evaluates near-ties the bounds cannot separate, and never evaluates
// more than eager. On objectives whose computed marginals are submodular up
// to rounding, lazy and eager return identical results.
GreedyResult greedy_select(int n, int K, const SetObjective& objective,
                           const GreedyOptions& opt = {});

// Exact maximum over all seed sets of size <= K. Sizes are scanned K down to
// 0, lexicographic member order within a size, and only a strictly larger
// value replaces the incumbent, so a constant objective returns {0..K-1}.
struct ExhaustiveResult {
  std::vector<int> members;
  double value = 0.0;
  long long evaluations = 0;
};

ExhaustiveResult exhaustive_opt(int n, int K, const SetObjective& objective,
                                long long subset_guard = 1000000);

// Caches evaluations by member list so greedy, exhaustive search, and bound
// checks score a set identically and count distinct evaluations once.
// Not thread-safe; selectors call it sequentially.
class MemoizedObjective {
 public:
  explicit MemoizedObjective(SetObjective inner);
  double operator()(const std::vector<int>& members) const;
  long long misses() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Plug-in objective F-hat(.): fitted curves at Monte Carlo exposure means.
// Replicate r's live-edge draw depends only on (seed, r), never on the
// candidate set, so all evaluations share one set of R samples (common
// random numbers) and the objective is a fixed deterministic function.
SetObjective plugin_objective(const Graph& g, const ExposureSpec& exposure,
                              const OutcomeModel& fitted, long long replicates,
                              std::uint64_t seed, int threads = 0);

// Exact welfare objective for graphs where every p_e is 0 or 1: the diffusion
// is deterministic, so F = F-tilde = the single realized welfare.
SetObjective deterministic_objective(const Graph& g, const ExposureSpec& exposure,
                                     const OutcomeModel& model);

// Surrogate objective F-tilde(.) with exact expected exposures (|E| <= 20).
SetObjective exact_surrogate_objective(const Graph& g, const ExposureSpec& exposure,
                                       const OutcomeModel& model, int edge_guard = 20);

// Monte Carlo expected active count E[sum_i z_inf]; the reach objective of
// the classical influence-maximization greedy baseline.
SetObjective reach_objective(const Graph& g, long long replicates, std::uint64_t seed,
                             int threads = 0);

// Baselines. degree = top-K by out-degree (ties by lowest id);
// random = uniform K-subset from the stream.
std::vector<int> top_degree_seeds(const Graph& g, int K);
std::vector<int> random_seeds(int n, int K, std::uint64_t seed);

// Unconstrained double greedy over the fixed ordering 0..n-1; ignores K.
// Experimental escape hatch for objectives with strong negative parts.
std::vector<int> double_greedy_select(int n, const SetObjective& objective);

// Exhaustive certification that an objective is nondecreasing and submodular
// over all subsets of {0..n-1} (n <= 20 guard): checks every (set, element)
// marginal against every superset.
struct SubmodularityCertificate {
  bool monotone = false;
  bool submodular = false;
  long long evaluations = 0;
};

SubmodularityCertificate certify_submodular(int n, const SetObjective& objective,
                                            double tol = 1e-12);

}  // namespace cim
