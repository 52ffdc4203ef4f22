#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cim/diffusion.hpp"
#include "cim/graph.hpp"
#include "cim/response.hpp"

namespace cim {

// Per-node outcome model: Y_i = alpha_r(i) [i in S] + f_r^+(K_i^+) - f_r^-(K_i^-)
// with curves shared within strata.
struct OutcomeModel {
  std::vector<int> stratum;              // node -> stratum id
  Eigen::VectorXd alpha;                 // per stratum
  std::vector<ResponseCurve> f_pos, f_neg;  // per stratum

  static OutcomeModel homogeneous(int n, double alpha, ResponseCurve fp, ResponseCurve fn);
  int num_nodes() const { return static_cast<int>(stratum.size()); }
  int num_strata() const { return static_cast<int>(alpha.size()); }
  double alpha_of(int i) const { return alpha[stratum[static_cast<std::size_t>(i)]]; }
  const ResponseCurve& fpos(int i) const { return f_pos[static_cast<std::size_t>(stratum[static_cast<std::size_t>(i)])]; }
  const ResponseCurve& fneg(int i) const { return f_neg[static_cast<std::size_t>(stratum[static_cast<std::size_t>(i)])]; }
  void validate(int n) const;  // throws on stratum gaps or curve shape violations

  std::string to_json() const;
  static OutcomeModel from_json(std::istream& in);
  static OutcomeModel load_json_file(const std::string& path);
};

// Outcome of one realized activation vector, summed over nodes.
double realized_welfare(const ExposureSpec& exposure, const OutcomeModel& model,
                        const SeedSet& seeds, const std::vector<char>& active);

// Exposure surrogate: sum_i alpha [i in S] + f^+(k_pos_i) - f^-(k_neg_i),
// with curves evaluated by linear interpolation at the supplied expected
// exposures (exact k from exact_law, or Monte Carlo k_hat).
double surrogate_welfare(const OutcomeModel& model, const SeedSet& seeds,
                         const Eigen::VectorXd& k_pos, const Eigen::VectorXd& k_neg);

// True welfare F(S) = E[sum_i Y_i(z_inf)] by exact enumeration (|E| <= 20).
double welfare_exact(const Graph& g, const ExposureSpec& exposure,
                     const OutcomeModel& model, const SeedSet& seeds, int edge_guard = 20);

// Monte Carlo estimate of F(S) over live-edge replicates; deterministic for
// fixed (seed, S) at any thread count. std_error uses the (R-1) sample
// variance and is zero when R == 1.
struct WelfareEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long replicates = 0;
};

WelfareEstimate welfare_mc(const Graph& g, const ExposureSpec& exposure,
                           const OutcomeModel& model, const SeedSet& seeds,
                           long long replicates, std::uint64_t seed, int threads = 0);

// Structural constant B_str = (1/2) sum_i (kappa_i^+ C_i^+ + kappa_i^- C_i^-)
// with C from the worst case over seed sets of size <= K. The identification
// interval for any S in that class is [surrogate +- B_str * eps^2].
double structural_bound(const Graph& g, const ExposureSpec& exposure,
                        const OutcomeModel& model, int K,
                        long long subset_guard = 2000000,
                        const PathCountOptions& opt = {});

struct IdentificationInterval {
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;  // the surrogate value
  double radius = 0.0;  // B_str * eps^2
};

IdentificationInterval identification_interval(double surrogate, double b_str, double epsilon);

// Plug-in F-hat(S): fitted curves evaluated at Monte Carlo exposure means.
struct PluginWelfare {
  double value = 0.0;
  ExposureEstimate exposures;
};

PluginWelfare plugin_welfare(const Graph& g, const ExposureSpec& exposure,
                             const OutcomeModel& fitted, const SeedSet& seeds,
                             long long replicates, std::uint64_t seed, int threads = 0);

// Bernstein deviation radius for a mean of R iid terms bounded by M:
//   sqrt(2 var log(2/delta) / R) + 2 M log(2/delta) / (3 R).
double bernstein_radius(double variance, double bound, long long replicates, double delta);

// Logged experimentation data: one record per run of the logging policy.
struct LoggedRecord {
  std::vector<int> seed;     // the set the logger drew, ascending
  int context = 0;
  double propensity = 0.0;   // pi(seed | context), in (0, 1]
  std::vector<FitRow> rows;  // per-node (z, kp, kn, y)
};

struct LoggedDataset {
  std::vector<LoggedRecord> records;

  static LoggedDataset load_jsonl(std::istream& in);
  static LoggedDataset load_jsonl_file(const std::string& path);
  void save_jsonl(std::ostream& out) const;
  void save_jsonl_file(const std::string& path) const;
};

// Per-record IPS weights [Z_l == S] / pi_l for a target set (ascending ids).
std::vector<double> ips_weights(const LoggedDataset& data, const std::vector<int>& target);

// Inverse-propensity welfare estimate (1/N) sum_l W_l * sum_i y_il.
struct IpsEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample std of the weighted summands / sqrt(N)
  long long matches = 0;   // records with Z_l == S
  long long records = 0;
};

IpsEstimate ips_welfare(const LoggedDataset& data, const std::vector<int>& target);

// Rows pooled across records as fit input: unit weights, or inverse
// logging-propensity weights when ips_weighting is set.
std::vector<FitRow> pooled_rows(const LoggedDataset& data, bool ips_weighting = false);

}  // namespace cim
