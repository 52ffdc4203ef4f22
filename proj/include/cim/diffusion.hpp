#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "cim/graph.hpp"
#include "cim/rng.hpp"

namespace cim {

// One live-edge draw: edge e is live with probability p_e, independently.
// Consumes exactly one uniform per edge, in edge index order, so a replicate
// is a pure function of its substream.
std::vector<char> sample_live_edges(const Graph& g, Rng& rng);

// Nodes reachable from the seeds through live edges; seeds always active.
std::vector<char> reachable_under(const Graph& g, const SeedSet& seeds,
                                  const std::vector<char>& live);

inline std::vector<char> sample_reachable(const Graph& g, const SeedSet& seeds, Rng& rng) {
  return reachable_under(g, seeds, sample_live_edges(g, rng));
}

// Round-based cascade: seeds activate at round 0; on activation a node tries
// each outgoing edge once. Same z_inf law as reachability over live edges;
// kept separately coded as a cross-check oracle.
std::vector<char> simulate_rounds(const Graph& g, const SeedSet& seeds, Rng& rng);

struct ExposureCounts {
  std::vector<int> kp, kn;  // K_i^+ and K_i^- under one activation vector
};

ExposureCounts exposure_counts(const ExposureSpec& exposure, const std::vector<char>& active);

// Monte Carlo exposure estimate over R live-edge replicates. Per-replicate
// counts are integers, so sums are folded exactly in replicate order and the
// result is bit-identical at any thread count.
struct ExposureEstimate {
  long long replicates = 0;
  Eigen::VectorXd k_pos, k_neg;      // mean K_i^+/- (unbiased for k_i^+/-)
  Eigen::VectorXd var_pos, var_neg;  // (R-1)-denominator sample variance of K
  bool variance_defined = false;     // false when R == 1 (variance absent)
  Eigen::VectorXd m_pos, m_neg;      // bounds |N_i^+/-|
  Eigen::VectorXd activation;        // mean z_i
};

ExposureEstimate mc_exposures(const Graph& g, const ExposureSpec& exposure,
                              const SeedSet& seeds, long long replicates,
                              std::uint64_t seed, int threads = 0);

// Exact diffusion law by enumerating all 2^|E| live-edge patterns, with the
// support grouped by resulting activation vector. Guarded at |E| <= 20.
struct ExactLaw {
  std::vector<std::pair<std::vector<char>, double>> support;  // (z_inf, prob)
  Eigen::VectorXd activation;          // P(z_i = 1)
  Eigen::MatrixXd joint;               // P(z_v = 1, z_w = 1)
  Eigen::VectorXd k_pos, k_neg;        // E[K_i^+/-]
  Eigen::VectorXd mean_u_pos, mean_u_neg;    // E[U_i^+/-], non-seed exposure
  Eigen::VectorXd fall2_u_pos, fall2_u_neg;  // E[(U_i^+/-)_2]
  Eigen::VectorXd var_k_pos, var_k_neg;      // Var(K_i^+/-)
};

ExactLaw exact_law(const Graph& g, const ExposureSpec& exposure, const SeedSet& seeds,
                   int edge_guard = 20);

}  // namespace cim
