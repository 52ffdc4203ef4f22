#pragma once

// Shared generators for randomized tests.  Everything is driven by cim::Rng so
// a failing case can be reproduced from the seed printed by the test runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "cim/diffusion.hpp"
#include "cim/estimand.hpp"
#include "cim/graph.hpp"
#include "cim/response.hpp"
#include "cim/rng.hpp"
#include "cim/subsets.hpp"

namespace testgen {

struct GraphParams {
  int min_nodes = 2;
  int max_nodes = 8;
  int max_edges = 14;
  double p_max = 0.3;
  // When >= 0, every edge probability is exactly this value.
  double p_fixed = -1.0;
};

inline cim::Graph random_graph(cim::Rng& rng, const GraphParams& gp = {}) {
  const int n = gp.min_nodes + static_cast<int>(rng.uniform_below(
                                   static_cast<std::uint64_t>(gp.max_nodes - gp.min_nodes + 1)));
  std::vector<std::pair<int, int>> slots;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v) slots.emplace_back(u, v);
  // Partial Fisher-Yates: the first m slots form a uniform sample without replacement.
  const int m = std::min<int>(gp.max_edges, static_cast<int>(slots.size()));
  const int e = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(m + 1)));
  for (int i = 0; i < e; ++i) {
    const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(slots.size() - i)));
    std::swap(slots[i], slots[j]);
  }
  std::vector<cim::Edge> edges;
  for (int i = 0; i < e; ++i) {
    const double p = gp.p_fixed >= 0.0 ? gp.p_fixed : rng.uniform(0.0, gp.p_max);
    edges.push_back({slots[i].first, slots[i].second, p});
  }
  return cim::Graph(n, edges);
}

// Exposure lists drawn uniformly; sources never include the node itself.
inline cim::ExposureSpec random_exposure(cim::Rng& rng, int n, int max_sources,
                                         bool with_negative = true) {
  cim::ExposureSpec ex = cim::ExposureSpec::empty(n);
  for (int i = 0; i < n; ++i) {
    const int cap = std::min(max_sources, n - 1);
    for (int side = 0; side < 2; ++side) {
      if (side == 1 && !with_negative) break;
      const int count = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cap + 1)));
      std::set<int> src;
      while (static_cast<int>(src.size()) < count) {
        const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        if (j != i) src.insert(j);
      }
      auto& dst = side == 0 ? ex.pos[i] : ex.neg[i];
      dst.assign(src.begin(), src.end());
    }
  }
  return ex;
}

// Exposure where every list has at most one source: the compression is exact.
inline cim::ExposureSpec singleton_exposure(cim::Rng& rng, int n) {
  return random_exposure(rng, n, 1);
}

// A feasible response curve: starts at zero, concave, nondecreasing.
inline cim::ResponseCurve random_curve(cim::Rng& rng, int budget, double scale) {
  Eigen::VectorXd v(budget + 1);
  v[0] = 0.0;
  double inc = scale * rng.uniform(0.2, 1.0);
  for (int t = 1; t <= budget; ++t) {
    v[t] = v[t - 1] + inc;
    inc *= rng.uniform(0.2, 1.0);
  }
  return cim::ResponseCurve(v);
}

// Linear curve: slope * t.  Zero curvature, so the surrogate gap vanishes.
inline cim::ResponseCurve linear_curve(int budget, double slope) {
  Eigen::VectorXd v(budget + 1);
  for (int t = 0; t <= budget; ++t) v[t] = slope * t;
  return cim::ResponseCurve(v);
}

inline cim::OutcomeModel random_model(cim::Rng& rng, int n, int budget_pos, int budget_neg,
                                      double scale = 0.1, bool linear = false) {
  const double alpha = rng.uniform(0.0, 0.2);
  cim::ResponseCurve fp = linear ? linear_curve(budget_pos, scale * rng.uniform(0.2, 1.0))
                                 : random_curve(rng, budget_pos, scale);
  cim::ResponseCurve fn =
      budget_neg == 0
          ? cim::ResponseCurve::zero(0)
          : (linear ? linear_curve(budget_neg, 0.5 * scale * rng.uniform(0.2, 1.0))
                    : random_curve(rng, budget_neg, 0.5 * scale));
  return cim::OutcomeModel::homogeneous(n, alpha, fp, fn);
}

inline cim::SeedSet make_seeds(int n, std::initializer_list<int> members) {
  cim::SeedSet s(n, static_cast<int>(members.size()));
  for (int v : members) s.insert(v);
  return s;
}

inline cim::SeedSet random_seed_set(cim::Rng& rng, int n, int k) {
  cim::SeedSet s(n, k);
  while (s.size() < k) {
    const int v = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
    if (!s.contains(v)) s.insert(v);
  }
  return s;
}

// Enumerates every seed set with |S| <= K as sorted member lists.
inline std::vector<std::vector<int>> all_sets_leq(int n, int K) {
  std::vector<std::vector<int>> out;
  cim::for_each_subset_leq(n, K, [&](const std::vector<int>& s) { out.push_back(s); });
  return out;
}

}  // namespace testgen
