#include "cim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "cim/errors.hpp"
#include "cim/parallel.hpp"
#include "cim/subsets.hpp"

namespace cim {

namespace {

std::vector<int> inserted(const std::vector<int>& members, int v) {
  std::vector<int> out = members;
  out.insert(std::upper_bound(out.begin(), out.end(), v), v);
  return out;
}

}  // namespace

GreedyResult greedy_select(int n, int K, const SetObjective& objective,
                           const GreedyOptions& opt) {
  if (K > n) throw std::invalid_argument("budget exceeds node count");
  if (K < 0 || n < 0) throw std::invalid_argument("negative size");
  GreedyResult res;
  double current = objective({});
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);

  if (!opt.lazy) {
    for (int round = 0; round < K; ++round) {
      int best = -1;
      double best_val = -std::numeric_limits<double>::infinity();
      for (int v = 0; v < n; ++v) {
        if (chosen[static_cast<std::size_t>(v)]) continue;
        const double val = objective(inserted(res.members, v));
        ++res.evaluations;
        if (val > best_val) {  // strict, so ties keep the lowest id
          best_val = val;
          best = v;
        }
      }
      chosen[static_cast<std::size_t>(best)] = 1;
      res.members = inserted(res.members, best);
      res.trace.push_back({best, best_val - current, best_val});
      current = best_val;
    }
  } else {
    // Stale upper bounds in a max-queue. Rounding can invert the submodular
    // ordering of computed marginals by an ulp, leaving a stale bound a hair
    // under a rival's fresh gain while the true values tie; anything within a
    // small slack of the first fresh candidate is therefore re-evaluated and
    // the round decided on raw objective values with the eager tie rule.
    struct Entry {
      double gain;
      double val;
      int id;
      int round;
    };
    struct Cmp {
      bool operator()(const Entry& a, const Entry& b) const {
        if (a.gain != b.gain) return a.gain < b.gain;
        return a.id > b.id;
      }
    };
    std::priority_queue<Entry, std::vector<Entry>, Cmp> queue;
    for (int v = 0; v < n; ++v)
      queue.push({std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), v, -1});
    for (int round = 0; round < K; ++round) {
      Entry best{};
      while (true) {
        const Entry top = queue.top();
        queue.pop();
        if (chosen[static_cast<std::size_t>(top.id)]) continue;
        if (top.round == round) {
          best = top;
          break;
        }
        const double val = objective(inserted(res.members, top.id));
        ++res.evaluations;
        queue.push({val - current, val, top.id, round});
      }
      const double slack = 1e-9 * (1.0 + std::abs(best.gain) + std::abs(current));
      std::vector<Entry> held;
      while (!queue.empty() && queue.top().gain >= best.gain - slack) {
        Entry e = queue.top();
        queue.pop();
        if (chosen[static_cast<std::size_t>(e.id)]) continue;
        if (e.round != round) {
          const double val = objective(inserted(res.members, e.id));
          ++res.evaluations;
          e = {val - current, val, e.id, round};
        }
        held.push_back(e);
      }
      for (const Entry& e : held) {
        if (e.val > best.val || (e.val == best.val && e.id < best.id)) {
          queue.push(best);
          best = e;
        } else {
          queue.push(e);
        }
      }
      chosen[static_cast<std::size_t>(best.id)] = 1;
      res.members = inserted(res.members, best.id);
      res.trace.push_back({best.id, best.gain, best.val});
      current = best.val;
    }
  }
  res.value = current;
  return res;
}

ExhaustiveResult exhaustive_opt(int n, int K, const SetObjective& objective,
                                long long subset_guard) {
  if (K > n) throw std::invalid_argument("budget exceeds node count");
  if (count_subsets_leq(n, K, subset_guard + 1) > subset_guard)
    throw GuardExceeded("subset enumeration guard exceeded");
  ExhaustiveResult res;
  res.value = -std::numeric_limits<double>::infinity();
  for (int k = K; k >= 0; --k) {
    for_each_subset_of_size(n, k, [&](const std::vector<int>& members) {
      const double val = objective(members);
      ++res.evaluations;
      if (val > res.value) {
        res.value = val;
        res.members = members;
      }
    });
  }
  return res;
}

struct MemoizedObjective::Impl {
  SetObjective inner;
  std::map<std::vector<int>, double> cache;
  long long misses = 0;
};

MemoizedObjective::MemoizedObjective(SetObjective inner)
    : impl_(std::make_shared<Impl>()) {
  impl_->inner = std::move(inner);
}

double MemoizedObjective::operator()(const std::vector<int>& members) const {
  std::vector<int> key = members;
  std::sort(key.begin(), key.end());
  const auto it = impl_->cache.find(key);
  if (it != impl_->cache.end()) return it->second;
  const double val = impl_->inner(key);
  ++impl_->misses;
  impl_->cache.emplace(std::move(key), val);
  return val;
}

long long MemoizedObjective::misses() const { return impl_->misses; }

namespace {

SeedSet to_seed_set(int n, const std::vector<int>& members) {
  SeedSet s(n, n);
  for (int v : members) s.insert(v);
  return s;
}

}  // namespace

SetObjective plugin_objective(const Graph& g, const ExposureSpec& exposure,
                              const OutcomeModel& fitted, long long replicates,
                              std::uint64_t seed, int threads) {
  fitted.validate(g.num_nodes());
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  return [=](const std::vector<int>& members) {
    const SeedSet s = to_seed_set(g.num_nodes(), members);
    return plugin_welfare(g, spec, fitted, s, replicates, seed, threads).value;
  };
}

SetObjective deterministic_objective(const Graph& g, const ExposureSpec& exposure,
                                     const OutcomeModel& model) {
  model.validate(g.num_nodes());
  std::vector<char> live(static_cast<std::size_t>(g.num_edges()));
  for (std::size_t e = 0; e < live.size(); ++e) {
    const double p = g.edges()[e].p;
    if (p != 0.0 && p != 1.0)
      throw std::invalid_argument("deterministic objective needs p_e in {0,1}");
    live[e] = p == 1.0 ? 1 : 0;
  }
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  return [=](const std::vector<int>& members) {
    const SeedSet s = to_seed_set(g.num_nodes(), members);
    return realized_welfare(spec, model, s, reachable_under(g, s, live));
  };
}

SetObjective exact_surrogate_objective(const Graph& g, const ExposureSpec& exposure,
                                       const OutcomeModel& model, int edge_guard) {
  model.validate(g.num_nodes());
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  return [=](const std::vector<int>& members) {
    const SeedSet s = to_seed_set(g.num_nodes(), members);
    const ExactLaw law = exact_law(g, spec, s, edge_guard);
    return surrogate_welfare(model, s, law.k_pos, law.k_neg);
  };
}

namespace {
constexpr std::uint64_t kReachKey = 0x5eed5afe;
}

SetObjective reach_objective(const Graph& g, long long replicates, std::uint64_t seed,
                             int threads) {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  return [=](const std::vector<int>& members) {
    const SeedSet s = to_seed_set(g.num_nodes(), members);
    constexpr long long chunk = 4096;
    const long long chunks = (replicates + chunk - 1) / chunk;
    std::vector<long long> partial(static_cast<std::size_t>(chunks), 0);
    parallel_for(chunks, threads, [&](std::int64_t c) {
      long long total = 0;
      const long long lo = c * chunk;
      const long long hi = std::min(replicates, lo + chunk);
      for (long long r = lo; r < hi; ++r) {
        Rng rng = substream(seed, {kReachKey, static_cast<std::uint64_t>(r)});
        const std::vector<char> active = reachable_under(g, s, sample_live_edges(g, rng));
        for (char a : active) total += a;
      }
      partial[static_cast<std::size_t>(c)] = total;
    });
    long long sum = 0;
    for (long long p : partial) sum += p;
    return static_cast<double>(sum) / static_cast<double>(replicates);
  };
}

std::vector<int> top_degree_seeds(const Graph& g, int K) {
  if (K > g.num_nodes()) throw std::invalid_argument("budget exceeds node count");
  std::vector<int> ids(static_cast<std::size_t>(g.num_nodes()));
  for (int v = 0; v < g.num_nodes(); ++v) ids[static_cast<std::size_t>(v)] = v;
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return g.out_edges(a).size() > g.out_edges(b).size();
  });
  ids.resize(static_cast<std::size_t>(K));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> random_seeds(int n, int K, std::uint64_t seed) {
  if (K > n) throw std::invalid_argument("budget exceeds node count");
  Rng rng = substream(seed, {0xA110C8});
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) ids[static_cast<std::size_t>(v)] = v;
  for (int i = 0; i < K; ++i) {
    const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  }
  ids.resize(static_cast<std::size_t>(K));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> double_greedy_select(int n, const SetObjective& objective) {
  std::vector<int> x;
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) y[static_cast<std::size_t>(v)] = v;
  double fx = objective(x), fy = objective(y);
  for (int v = 0; v < n; ++v) {
    const std::vector<int> xv = inserted(x, v);
    std::vector<int> yv = y;
    yv.erase(std::find(yv.begin(), yv.end(), v));
    const double a = objective(xv) - fx;
    const double b = objective(yv) - fy;
    if (a >= b) {
      x = xv;
      fx += a;
    } else {
      y = std::move(yv);
      fy += b;
    }
  }
  return x;
}

SubmodularityCertificate certify_submodular(int n, const SetObjective& objective,
                                            double tol) {
  if (n > 16) throw GuardExceeded("submodularity certification needs n <= 16");
  SubmodularityCertificate cert;
  const std::uint32_t full = n >= 32 ? 0xffffffffu : ((1u << n) - 1);
  std::vector<double> value(static_cast<std::size_t>(full) + 1);
  std::vector<int> members;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    members.clear();
    for (int v = 0; v < n; ++v)
      if ((mask >> v) & 1) members.push_back(v);
    value[mask] = objective(members);
    ++cert.evaluations;
  }
  cert.monotone = true;
  cert.submodular = true;
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    for (int v = 0; v < n; ++v) {
      if ((mask >> v) & 1) continue;
      const std::uint32_t with_v = mask | (1u << v);
      if (value[with_v] < value[mask] - tol) cert.monotone = false;
      for (int w = v + 1; w < n; ++w) {
        if ((mask >> w) & 1) continue;
        const std::uint32_t with_w = mask | (1u << w);
        // diminishing returns: adding v helps less once w is present
        if (value[with_v | with_w] - value[with_w] > value[with_v] - value[mask] + tol)
          cert.submodular = false;
      }
    }
    if (!cert.monotone && !cert.submodular) break;
  }
  return cert;
}

}  // namespace cim
