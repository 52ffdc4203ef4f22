#include "cim/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cim/errors.hpp"
#include "cim/parallel.hpp"

namespace cim {

std::vector<char> sample_live_edges(const Graph& g, Rng& rng) {
  std::vector<char> live(static_cast<std::size_t>(g.num_edges()));
  for (std::size_t e = 0; e < live.size(); ++e)
    live[e] = rng.bernoulli(g.edges()[e].p) ? 1 : 0;
  return live;
}

std::vector<char> reachable_under(const Graph& g, const SeedSet& seeds,
                                  const std::vector<char>& live) {
  const std::size_t n = static_cast<std::size_t>(g.num_nodes());
  if (live.size() != static_cast<std::size_t>(g.num_edges()))
    throw std::invalid_argument("live mask length mismatch");
  std::vector<char> active(n, 0);
  std::vector<int> stack;
  for (int s : seeds.members()) {
    active[static_cast<std::size_t>(s)] = 1;
    stack.push_back(s);
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int e : g.out_edges(v)) {
      if (!live[static_cast<std::size_t>(e)]) continue;
      const int w = g.edges()[static_cast<std::size_t>(e)].dst;
      if (!active[static_cast<std::size_t>(w)]) {
        active[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  return active;
}

std::vector<char> simulate_rounds(const Graph& g, const SeedSet& seeds, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(g.num_nodes());
  std::vector<char> active(n, 0);
  std::vector<int> frontier = seeds.members();
  for (int s : frontier) active[static_cast<std::size_t>(s)] = 1;
  // Each newly active node gets one attempt per outgoing edge, in rounds.
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int v : frontier) {
      for (int e : g.out_edges(v)) {
        const Edge& ed = g.edges()[static_cast<std::size_t>(e)];
        if (!rng.bernoulli(ed.p)) continue;
        if (!active[static_cast<std::size_t>(ed.dst)]) {
          active[static_cast<std::size_t>(ed.dst)] = 1;
          next.push_back(ed.dst);
        }
      }
    }
    frontier = std::move(next);
  }
  return active;
}

ExposureCounts exposure_counts(const ExposureSpec& exposure, const std::vector<char>& active) {
  const std::size_t n = active.size();
  if (exposure.pos.size() > n || exposure.neg.size() > n)
    throw std::invalid_argument("activation vector shorter than exposure spec");
  ExposureCounts c;
  c.kp.assign(n, 0);
  c.kn.assign(n, 0);
  for (std::size_t i = 0; i < exposure.pos.size(); ++i)
    for (int j : exposure.pos[i]) c.kp[i] += active[static_cast<std::size_t>(j)];
  for (std::size_t i = 0; i < exposure.neg.size(); ++i)
    for (int j : exposure.neg[i]) c.kn[i] += active[static_cast<std::size_t>(j)];
  return c;
}

namespace {
constexpr std::uint64_t kReplicateKey = 0x9c0ffee1;
constexpr long long kChunk = 4096;
}  // namespace

ExposureEstimate mc_exposures(const Graph& g, const ExposureSpec& exposure,
                              const SeedSet& seeds, long long replicates,
                              std::uint64_t seed, int threads) {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  const int n = g.num_nodes();
  const std::size_t sn = static_cast<std::size_t>(n);
  const ExposureSpec spec = exposure.resized(n);

  // Integer partial sums per chunk; integer addition is exact, so the fold
  // is identical at any thread count.
  const long long chunks = (replicates + kChunk - 1) / kChunk;
  struct Slot {
    std::vector<long long> kp, kn, kp2, kn2, act;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(chunks));
  parallel_for(chunks, threads, [&](std::int64_t c) {
    Slot& slot = slots[static_cast<std::size_t>(c)];
    slot.kp.assign(sn, 0);
    slot.kn.assign(sn, 0);
    slot.kp2.assign(sn, 0);
    slot.kn2.assign(sn, 0);
    slot.act.assign(sn, 0);
    const long long lo = c * kChunk;
    const long long hi = std::min(replicates, lo + kChunk);
    for (long long r = lo; r < hi; ++r) {
      Rng rng = substream(seed, {kReplicateKey, static_cast<std::uint64_t>(r)});
      const std::vector<char> active = reachable_under(g, seeds, sample_live_edges(g, rng));
      const ExposureCounts counts = exposure_counts(spec, active);
      for (std::size_t i = 0; i < sn; ++i) {
        slot.kp[i] += counts.kp[i];
        slot.kn[i] += counts.kn[i];
        slot.kp2[i] += static_cast<long long>(counts.kp[i]) * counts.kp[i];
        slot.kn2[i] += static_cast<long long>(counts.kn[i]) * counts.kn[i];
        slot.act[i] += active[i];
      }
    }
  });

  std::vector<long long> kp(sn, 0), kn(sn, 0), kp2(sn, 0), kn2(sn, 0), act(sn, 0);
  for (const Slot& slot : slots)
    for (std::size_t i = 0; i < sn; ++i) {
      kp[i] += slot.kp[i];
      kn[i] += slot.kn[i];
      kp2[i] += slot.kp2[i];
      kn2[i] += slot.kn2[i];
      act[i] += slot.act[i];
    }

  ExposureEstimate est;
  est.replicates = replicates;
  est.k_pos.resize(n);
  est.k_neg.resize(n);
  est.var_pos = Eigen::VectorXd::Zero(n);
  est.var_neg = Eigen::VectorXd::Zero(n);
  est.m_pos.resize(n);
  est.m_neg.resize(n);
  est.activation.resize(n);
  est.variance_defined = replicates > 1;
  const double R = static_cast<double>(replicates);
  for (int i = 0; i < n; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    est.k_pos[i] = static_cast<double>(kp[si]) / R;
    est.k_neg[i] = static_cast<double>(kn[si]) / R;
    est.activation[i] = static_cast<double>(act[si]) / R;
    est.m_pos[i] = static_cast<double>(spec.pos[si].size());
    est.m_neg[i] = static_cast<double>(spec.neg[si].size());
    if (replicates > 1) {
      // (R-1)-denominator sample variance from exact integer sums.
      const double cp = static_cast<double>(kp2[si]) - static_cast<double>(kp[si]) * kp[si] / R;
      const double cn = static_cast<double>(kn2[si]) - static_cast<double>(kn[si]) * kn[si] / R;
      est.var_pos[i] = std::max(0.0, cp / (R - 1.0));
      est.var_neg[i] = std::max(0.0, cn / (R - 1.0));
    }
  }
  return est;
}

ExactLaw exact_law(const Graph& g, const ExposureSpec& exposure, const SeedSet& seeds,
                   int edge_guard) {
  const int m = g.num_edges();
  if (m > edge_guard) throw GuardExceeded("exact law needs |E| <= " + std::to_string(edge_guard));
  const int n = g.num_nodes();
  const std::size_t sn = static_cast<std::size_t>(n);
  const ExposureSpec spec = exposure.resized(n);

  std::map<std::vector<char>, double> grouped;
  std::vector<char> live(static_cast<std::size_t>(m));
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double prob = 1.0;
    for (int e = 0; e < m; ++e) {
      const bool on = (mask >> e) & 1;
      live[static_cast<std::size_t>(e)] = on ? 1 : 0;
      prob *= on ? g.edges()[static_cast<std::size_t>(e)].p
                 : 1.0 - g.edges()[static_cast<std::size_t>(e)].p;
    }
    if (prob == 0.0) continue;
    grouped[reachable_under(g, seeds, live)] += prob;
  }

  ExactLaw law;
  law.support.assign(grouped.begin(), grouped.end());
  law.activation = Eigen::VectorXd::Zero(n);
  law.joint = Eigen::MatrixXd::Zero(n, n);
  law.k_pos = Eigen::VectorXd::Zero(n);
  law.k_neg = Eigen::VectorXd::Zero(n);
  law.mean_u_pos = Eigen::VectorXd::Zero(n);
  law.mean_u_neg = Eigen::VectorXd::Zero(n);
  law.fall2_u_pos = Eigen::VectorXd::Zero(n);
  law.fall2_u_neg = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd k2_pos = Eigen::VectorXd::Zero(n), k2_neg = Eigen::VectorXd::Zero(n);

  for (const auto& [z, prob] : law.support) {
    for (int v = 0; v < n; ++v) {
      if (!z[static_cast<std::size_t>(v)]) continue;
      law.activation[v] += prob;
      for (int w = v; w < n; ++w)
        if (z[static_cast<std::size_t>(w)]) law.joint(v, w) += prob;
    }
    const ExposureCounts counts = exposure_counts(spec, z);
    for (int i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      law.k_pos[i] += prob * counts.kp[si];
      law.k_neg[i] += prob * counts.kn[si];
      k2_pos[i] += prob * counts.kp[si] * counts.kp[si];
      k2_neg[i] += prob * counts.kn[si] * counts.kn[si];
      int up = 0, un = 0;
      for (int j : spec.pos[si]) up += !seeds.contains(j) && z[static_cast<std::size_t>(j)];
      for (int j : spec.neg[si]) un += !seeds.contains(j) && z[static_cast<std::size_t>(j)];
      law.mean_u_pos[i] += prob * up;
      law.mean_u_neg[i] += prob * un;
      law.fall2_u_pos[i] += prob * up * (up - 1);
      law.fall2_u_neg[i] += prob * un * (un - 1);
    }
  }
  law.joint = law.joint.selfadjointView<Eigen::Upper>();
  law.var_k_pos = (k2_pos - law.k_pos.cwiseProduct(law.k_pos)).cwiseMax(0.0);
  law.var_k_neg = (k2_neg - law.k_neg.cwiseProduct(law.k_neg)).cwiseMax(0.0);
  return law;
}

}  // namespace cim
