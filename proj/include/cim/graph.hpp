#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cim {

struct Edge {
  int src = 0;
  int dst = 0;
  double p = 0.0;
};

// Directed graph with per-edge activation probabilities. Node ids are dense
// 0..n-1; self-loops and duplicate (src,dst) pairs are rejected.
class Graph {
 public:
  Graph() = default;
  Graph(int n, std::vector<Edge> edges);

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Outgoing edge indices per node, in insertion order.
  const std::vector<int>& out_edges(int v) const { return out_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& in_edges(int v) const { return in_[static_cast<std::size_t>(v)]; }

  double max_edge_prob() const;  // epsilon of the diffusion law

  static Graph load_edge_list(std::istream& in);
  static Graph load_edge_list_file(const std::string& path);
  void save_edge_list(std::ostream& out) const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

// Neighborhoods for the exposure maps. pos[i]/neg[i] list the nodes whose
// activation raises/lowers i's outcome; both default to empty.
struct ExposureSpec {
  std::vector<std::vector<int>> pos;
  std::vector<std::vector<int>> neg;

  static ExposureSpec empty(int n) { return ExposureSpec{{}, {}}.resized(n); }
  ExposureSpec resized(int n) const {
    ExposureSpec s = *this;
    s.pos.resize(static_cast<std::size_t>(n));
    s.neg.resize(static_cast<std::size_t>(n));
    return s;
  }

  static ExposureSpec load_json(std::istream& in, int n);
  static ExposureSpec load_json_file(const std::string& path, int n);
  std::string to_json() const;
};

// Seed set over nodes 0..n-1 with capacity K. insert() rejects overflow.
class SeedSet {
 public:
  SeedSet(int n, int capacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(members_.size()); }
  bool contains(int v) const { return mask_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& members() const { return members_; }  // sorted ascending

  void insert(int v);
  void erase(int v);

  // Bitmask over the low 64 node ids; callers guard n <= 64.
  std::uint64_t mask64() const;

 private:
  int n_ = 0;
  int capacity_ = 0;
  std::vector<int> members_;
  std::vector<char> mask_;
};

// Number of simple paths from any seed to j, per j (paths may pass through
// other seeds; seeds themselves report 0). Enumeration work is capped:
// exceeding cap_count total paths, or hitting cap_len with room to extend,
// throws GuardExceeded rather than truncating silently.
struct PathCountOptions {
  int cap_len = -1;            // max edges per path; default n-1 (exhaustive)
  long long cap_count = 1000000;
};

std::vector<double> path_counts(const Graph& g, const SeedSet& seeds,
                                const PathCountOptions& opt = {});

// All simple paths from some seed to v with at most max_len edges (default
// n-1), as edge-index sequences. Paths may pass through other seeds; v itself
// must not be a seed. Order: seeds ascending, then DFS in adjacency order.
std::vector<std::vector<int>> enumerate_simple_paths(const Graph& g, const SeedSet& seeds,
                                                     int v, int max_len = -1,
                                                     long long cap_count = 1000000);

// Sum of A_j over j in N_i^+/- excluding seeds, and the ordered-pair sum
// (sum A)^2 - sum A^2 over that neighborhood. Indexed [i].
struct MomentCoefficients {
  std::vector<double> d_pos, d_neg;  // D_i^+/-
  std::vector<double> c_pos, c_neg;  // C_i^+/-
};

MomentCoefficients moment_coefficients(const Graph& g, const ExposureSpec& exposure,
                                       const SeedSet& seeds,
                                       const PathCountOptions& opt = {});

// Max of D_i / C_i over all seed sets of size <= K (exhaustive; guarded).
struct WorstCaseMoments {
  std::vector<double> d_pos, d_neg, c_pos, c_neg;
};

WorstCaseMoments worst_case_moments(const Graph& g, const ExposureSpec& exposure, int K,
                                    long long subset_guard = 2000000,
                                    const PathCountOptions& opt = {});

}  // namespace cim
